#ifndef CONECERT_L1_HPP
#define CONECERT_L1_HPP

#include "conecert/simplex.hpp"
#include "conecert/types.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace conecert {

// Per-coordinate description of the l1 radial cone at x0 for a certificate
// y: the cone is polyhedral, so membership and kernel intersection reduce
// to rank tests and one LP.
enum class CoordState { posActive, negActive, posBoundary, negBoundary, inactive };

struct SignPattern {
    std::vector<CoordState> state;
};

inline SignPattern l1RadialCone(const Vector& x0, const Vector& y,
                                double boundaryTol = 1e-7) {
    requireFinite(x0, "l1RadialCone");
    requireFinite(y, "l1RadialCone");
    if (x0.size() != y.size()) throw InvalidInput("l1RadialCone: size mismatch");
    SignPattern out;
    out.state.resize(x0.size());
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        if (std::abs(y[i]) > 1.0 + 1e-9)
            throw PreconditionViolation("l1RadialCone: |y_i| exceeds 1");
        if (x0[i] != 0.0) {
            if (std::abs(y[i] - (x0[i] > 0 ? 1.0 : -1.0)) > 1e-6)
                throw PreconditionViolation(
                    "l1RadialCone: y_i != sign(x0_i) on the support");
            out.state[i] = x0[i] > 0 ? CoordState::posActive : CoordState::negActive;
        } else if (y[i] >= 1.0 - boundaryTol) {
            out.state[i] = CoordState::posBoundary;
        } else if (y[i] <= -1.0 + boundaryTol) {
            out.state[i] = CoordState::negBoundary;
        } else {
            out.state[i] = CoordState::inactive;
        }
    }
    return out;
}

namespace detail {

// Feasibility LP for a certificate y = A^T lambda with y = sign(x0) on the
// support and |y| <= 1 elsewhere. `tiebreak` biases the off-support values:
// 0 keeps the first vertex found, +1 pushes them up, -1 pushes them down
// (used to obtain a second, different certificate).
inline std::optional<Vector> l1Certificate(const Matrix& a, const Vector& x0,
                                           int tiebreak = 0) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    std::vector<Eigen::Index> support, off;
    for (Eigen::Index i = 0; i < n; ++i)
        (x0[i] != 0.0 ? support : off).push_back(i);

    // variables: lambda+ (m), lambda- (m), s_i (off, upper slack), t_i (off,
    // lower slack): a_i^T lambda + s_i = 1, -a_i^T lambda + t_i = 1.
    const Eigen::Index nOff = static_cast<Eigen::Index>(off.size());
    const Eigen::Index nv = 2 * m + 2 * nOff;
    const Eigen::Index rows = static_cast<Eigen::Index>(support.size()) + 2 * nOff;
    Matrix lp = Matrix::Zero(rows, nv);
    Vector rhs = Vector::Zero(rows);
    Eigen::Index row = 0;
    for (Eigen::Index i : support) {
        lp.block(row, 0, 1, m) = a.col(i).transpose();
        lp.block(row, m, 1, m) = -a.col(i).transpose();
        rhs[row] = x0[i] > 0 ? 1.0 : -1.0;
        ++row;
    }
    for (Eigen::Index k = 0; k < nOff; ++k) {
        const Eigen::Index i = off[k];
        lp.block(row, 0, 1, m) = a.col(i).transpose();
        lp.block(row, m, 1, m) = -a.col(i).transpose();
        lp(row, 2 * m + k) = 1.0;
        rhs[row] = 1.0;
        ++row;
        lp.block(row, 0, 1, m) = -a.col(i).transpose();
        lp.block(row, m, 1, m) = a.col(i).transpose();
        lp(row, 2 * m + nOff + k) = 1.0;
        rhs[row] = 1.0;
        ++row;
    }
    Vector cost = Vector::Zero(nv);
    if (tiebreak != 0)
        for (Eigen::Index k = 0; k < nOff; ++k)
            cost[2 * m + k] = tiebreak > 0 ? 1.0 : -1.0;
    const LpResult res = solveLp(lp, rhs, cost);
    if (res.status != LpResult::Status::Optimal) return std::nullopt;
    const Vector lambda = res.x.head(m) - res.x.segment(m, m);
    return Vector(a.transpose() * lambda);
}

} // namespace detail

struct L1Report {
    bool optimal = false;
    bool unique = false;
    SignPattern pattern;
    Vector certificate;
};

// Exact uniqueness decision for min ||x||_1 s.t. A x = b at the candidate
// x0: find a dual certificate by LP, then decide whether Ker A meets the
// (polyhedral, closed) radial cone only at the origin. The cone is trivial
// iff its lineality space is {0} and an LP maximizing the boundary slacks
// over the box-normalized cone has optimum 0.
inline L1Report l1UniqueCheck(const Matrix& a, const Vector& x0,
                              int certTiebreak = 0) {
    requireFinite(a, "l1UniqueCheck");
    requireFinite(x0, "l1UniqueCheck");
    if (a.cols() != x0.size()) throw InvalidInput("l1UniqueCheck: size mismatch");
    const Eigen::Index n = a.cols();
    L1Report rep;

    const auto y = detail::l1Certificate(a, x0, certTiebreak);
    if (!y) return rep;  // not optimal
    rep.optimal = true;
    rep.certificate = *y;
    rep.pattern = l1RadialCone(x0, *y);

    std::vector<Eigen::Index> freeIdx, posIdx, negIdx;
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (rep.pattern.state[i]) {
            case CoordState::posActive:
            case CoordState::negActive: freeIdx.push_back(i); break;
            case CoordState::posBoundary: posIdx.push_back(i); break;
            case CoordState::negBoundary: negIdx.push_back(i); break;
            case CoordState::inactive: break;
        }
    }

    // lineality part: free coordinates alone
    if (!freeIdx.empty()) {
        Matrix af(a.rows(), freeIdx.size());
        for (size_t k = 0; k < freeIdx.size(); ++k) af.col(k) = a.col(freeIdx[k]);
        Eigen::JacobiSVD<Matrix> s(af);
        const Vector& sig = s.singularValues();
        const Eigen::Index kcols = static_cast<Eigen::Index>(freeIdx.size());
        if (af.rows() < kcols || sig[sig.size() - 1] <= 1e-9 * sig[0]) {
            rep.unique = false;
            return rep;
        }
    }

    // conic part: maximize the boundary slacks over the box-bounded cone
    const Eigen::Index nf = static_cast<Eigen::Index>(freeIdx.size());
    const Eigen::Index np = static_cast<Eigen::Index>(posIdx.size());
    const Eigen::Index nn = static_cast<Eigen::Index>(negIdx.size());
    if (np + nn == 0) {
        rep.unique = true;  // cone is the (trivial) lineality space
        return rep;
    }
    // variables: free split (2nf), pos (np), neg magnitude (nn), box slacks
    const Eigen::Index nBounded = 2 * nf + np + nn;
    const Eigen::Index nv = nBounded + nBounded;
    const Eigen::Index rows = a.rows() + nBounded;
    Matrix lp = Matrix::Zero(rows, nv);
    Vector rhs = Vector::Zero(rows);
    Eigen::Index col = 0;
    auto put = [&](Eigen::Index i, double sign) {
        lp.block(0, col, a.rows(), 1) = sign * a.col(i);
        lp(a.rows() + col, col) = 1.0;
        lp(a.rows() + col, nBounded + col) = 1.0;  // box: var + slack = 1
        rhs[a.rows() + col] = 1.0;
        ++col;
    };
    for (Eigen::Index i : freeIdx) put(i, 1.0);
    for (Eigen::Index i : freeIdx) put(i, -1.0);
    for (Eigen::Index i : posIdx) put(i, 1.0);
    for (Eigen::Index i : negIdx) put(i, -1.0);

    Vector cost = Vector::Zero(nv);
    for (Eigen::Index k = 2 * nf; k < nBounded; ++k) cost[k] = -1.0;  // maximize
    const LpResult res = solveLp(lp, rhs, cost);
    if (res.status != LpResult::Status::Optimal)
        throw InternalError("l1UniqueCheck: bounded cone LP did not solve");
    rep.unique = -res.value <= 1e-7;
    return rep;
}

} // namespace conecert

#endif // CONECERT_L1_HPP

#ifndef CONECERT_SIMPLEX_HPP
#define CONECERT_SIMPLEX_HPP

#include "conecert/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace conecert {

// Small dense two-phase simplex with Bland's rule, for the polyhedral cone
// tests. Standard form: min c^T x subject to A x = b, x >= 0.
struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Infeasible;
    Vector x;
    double value = 0.0;
};

namespace detail {

class SimplexTableau {
public:
    SimplexTableau(const Matrix& a, const Vector& b, double tol)
        : m_(a.rows()), tol_(tol) {
        a_ = a;
        b_ = b;
        for (Eigen::Index i = 0; i < m_; ++i)
            if (b_[i] < 0.0) {
                a_.row(i) = -a_.row(i);
                b_[i] = -b_[i];
            }
    }

    // runs phase 1 then phase 2; returns the final result
    LpResult solve(const Vector& cost) {
        const Eigen::Index n = a_.cols();
        // phase 1 tableau: [A | I], artificials basic
        Matrix t(m_, n + m_);
        t.leftCols(n) = a_;
        t.rightCols(m_) = Matrix::Identity(m_, m_);
        basis_.resize(m_);
        for (Eigen::Index i = 0; i < m_; ++i) basis_[i] = n + i;
        Vector phase1cost = Vector::Zero(n + m_);
        phase1cost.tail(m_).setOnes();

        LpResult out;
        if (!pivotLoop(t, phase1cost, n + m_)) {
            out.status = LpResult::Status::Unbounded;  // cannot happen in phase 1
            return out;
        }
        if (objective(phase1cost) > 1e-7) {
            out.status = LpResult::Status::Infeasible;
            return out;
        }
        // drive leftover artificials out of the basis where possible;
        // a redundant row keeps its artificial basic at value zero
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[i] < n) continue;
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(t(i, j)) > 1e4 * tol_) {
                    enter = j;
                    break;
                }
            if (enter >= 0) pivot(t, i, enter);
        }
        // phase 2: artificial columns carry zero cost but may not re-enter
        Vector phase2cost = Vector::Zero(n + m_);
        phase2cost.head(n) = cost;
        if (!pivotLoop(t, phase2cost, n)) {
            out.status = LpResult::Status::Unbounded;
            return out;
        }
        out.status = LpResult::Status::Optimal;
        out.x = Vector::Zero(n);
        for (Eigen::Index i = 0; i < m_; ++i)
            if (basis_[i] < n) out.x[basis_[i]] = b_[i];
        out.value = cost.dot(out.x);
        return out;
    }

private:
    double objective(const Vector& cost) const {
        double v = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) v += cost[basis_[i]] * b_[i];
        return v;
    }

    void pivot(Matrix& t, Eigen::Index row, Eigen::Index col) {
        const double piv = t(row, col);
        t.row(row) /= piv;
        b_[row] /= piv;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double f = t(i, col);
            if (f == 0.0) continue;
            t.row(i) -= f * t.row(row);
            b_[i] -= f * b_[row];
        }
        basis_[row] = col;
    }

    // Bland's rule: smallest-index entering and leaving; terminates without
    // cycling. Only the first `enterLimit` columns may enter. Returns false
    // on unboundedness.
    bool pivotLoop(Matrix& t, const Vector& cost, Eigen::Index enterLimit) {
        const Eigen::Index cols = std::min<Eigen::Index>(t.cols(), enterLimit);
        for (long guard = 0; guard < 100000; ++guard) {
            // reduced costs via the basic multipliers
            Vector y = Vector::Zero(m_);
            for (Eigen::Index i = 0; i < m_; ++i) y[i] = cost[basis_[i]];
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double red = cost[j] - y.dot(t.col(j));
                if (red < -tol_) {
                    bool basic = false;
                    for (Eigen::Index i = 0; i < m_; ++i)
                        if (basis_[i] == j) basic = true;
                    if (!basic) {
                        enter = j;
                        break;
                    }
                }
            }
            if (enter < 0) return true;  // optimal
            Eigen::Index leave = -1;
            double bestRatio = 0.0;
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (t(i, enter) > tol_) {
                    const double ratio = b_[i] / t(i, enter);
                    if (leave < 0 || ratio < bestRatio - 1e-15 ||
                        (std::abs(ratio - bestRatio) <= 1e-15 &&
                         basis_[i] < basis_[leave])) {
                        leave = i;
                        bestRatio = ratio;
                    }
                }
            }
            if (leave < 0) return false;  // unbounded
            pivot(t, leave, enter);
        }
        throw InternalError("simplex: pivot limit exceeded");
    }

    Eigen::Index m_;
    double tol_;
    Matrix a_;
    Vector b_;
    std::vector<Eigen::Index> basis_;
};

} // namespace detail

inline LpResult solveLp(const Matrix& a, const Vector& b, const Vector& c,
                        double tol = 1e-9) {
    requireFinite(a, "solveLp");
    requireFinite(b, "solveLp");
    requireFinite(c, "solveLp");
    if (a.rows() != b.size() || a.cols() != c.size())
        throw InvalidInput("solveLp: shape mismatch");
    detail::SimplexTableau tab(a, b, tol);
    return tab.solve(c);
}

} // namespace conecert

#endif // CONECERT_SIMPLEX_HPP

#ifndef CONECERT_GEOMETRY_HPP
#define CONECERT_GEOMETRY_HPP

#include "conecert/linalg.hpp"
#include "conecert/rng.hpp"
#include "conecert/types.hpp"

#include <cmath>
#include <vector>

namespace conecert {

inline double nuclearNorm(const Matrix& x) { return singularValues(x).sum(); }

inline double spectralNorm(const Matrix& x) {
    const Vector s = singularValues(x);
    return s.size() ? s[0] : 0.0;
}

// Y is a subgradient of the nuclear norm at X iff ||Y|| <= 1 and
// <Y, X> = ||X||_*.
inline bool subdiffMembership(const Matrix& x, const Matrix& y,
                              double tol = defaultTol().membership) {
    requireFinite(x, "subdiffMembership");
    requireFinite(y, "subdiffMembership");
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw InvalidInput("subdiffMembership: shape mismatch");
    if (spectralNorm(y) > 1.0 + tol) return false;
    const double nuc = nuclearNorm(x);
    const double inner = (y.array() * x.array()).sum();
    return std::abs(inner - nuc) <= tol * std::max(1.0, nuc);
}

// p(Y): number of unit singular values of a certificate.
inline Eigen::Index pOf(const Matrix& y, double tol = defaultTol().sigmaOneBand) {
    const Vector s = singularValues(y);
    if (s.size() && s[0] > 1.0 + tol)
        throw PreconditionViolation("pOf: spectral norm exceeds 1 + tol");
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (std::abs(s[i] - 1.0) <= tol) ++p;
    return p;
}

// Count of singular values in the unit band without the norm precondition;
// used where the certificate may carry solver slack slightly above 1.
inline Eigen::Index countUnitSigma(const Matrix& y,
                                   double tol = defaultTol().sigmaOneBand) {
    const Vector s = singularValues(y);
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (std::abs(s[i] - 1.0) <= tol) ++p;
    return p;
}

// Frame coordinates of a direction W with respect to a simultaneous SVD
// frame of (X0, Y), split by r = rank(X0) and p = p(Y).
struct ConeBlocks {
    Matrix A;      // r x r
    Matrix D;      // r x (p-r), upper coupling block
    Matrix Dlow;   // (p-r) x r, lower coupling block
    Matrix C;      // (p-r) x (p-r)
    double outer;  // Frobenius mass outside the leading p x p window
    Eigen::Index r, p;
};

inline ConeBlocks coneBlocks(const OrthogonalPair& frame, Eigen::Index r,
                             Eigen::Index p, const Matrix& w) {
    const Eigen::Index n1 = w.rows();
    const Eigen::Index n2 = w.cols();
    const Matrix m = frame.U.transpose() * w * frame.V;
    ConeBlocks b;
    b.r = r;
    b.p = p;
    b.A = m.topLeftCorner(r, r);
    b.D = m.block(0, r, r, p - r);
    b.Dlow = m.block(r, 0, p - r, r);
    b.C = m.block(r, r, p - r, p - r);
    const double rowMass = m.bottomRows(n1 - p).squaredNorm();
    const double colMass = m.rightCols(n2 - p).squaredNorm();
    const double cornerTwice = m.bottomRightCorner(n1 - p, n2 - p).squaredNorm();
    b.outer = std::sqrt(std::max(0.0, rowMass + colMass - cornerTwice));
    return b;
}

namespace detail {

struct MembershipContext {
    OrthogonalPair frame;
    Eigen::Index r, p;
};

inline MembershipContext membershipContext(const Matrix& x0, const Matrix& y,
                                           const Tolerances& tol) {
    if (!subdiffMembership(x0, y, tol.membership))
        throw PreconditionViolation(
            "radial/tangent membership: Y is not a subgradient at X0");
    MembershipContext ctx;
    ctx.frame = simultaneousSvd(x0, y, tol);
    ctx.r = rankTol(x0, tol.rankRel);
    ctx.p = pOf(y, tol.sigmaOneBand);
    return ctx;
}

inline bool tangentBlocksOk(const ConeBlocks& b, double tol, double scale) {
    if (b.outer > tol * scale) return false;
    if (frob(b.A - b.A.transpose()) > tol * scale) return false;
    if (frob(b.Dlow - b.D.transpose()) > tol * scale) return false;
    if (frob(b.C - b.C.transpose()) > tol * scale) return false;
    if (b.C.rows() > 0 && minEigenvalue(b.C) < -tol * scale) return false;
    return true;
}

} // namespace detail

// Tangent cone membership: the frame coordinates of W are
//   [ A  B  0 ]
//   [ B^T C 0 ]   with A symmetric, C positive semidefinite.
//   [ 0  0  0 ]
inline bool tangentMembership(const Matrix& x0, const Matrix& y, const Matrix& w,
                              double tol = defaultTol().coneMembership,
                              const Tolerances& tols = defaultTol()) {
    requireFinite(w, "tangentMembership");
    const auto ctx = detail::membershipContext(x0, y, tols);
    const ConeBlocks b = coneBlocks(ctx.frame, ctx.r, ctx.p, w);
    return detail::tangentBlocksOk(b, tol, std::max(1.0, frob(w)));
}

// Radial cone membership adds the coupling constraint: the off-diagonal
// block must solve D = B C, equivalently Ker C is contained in Ker D,
// tested as D (I - C^+ C) = 0.
inline bool radialMembership(const Matrix& x0, const Matrix& y, const Matrix& w,
                             double tol = defaultTol().coneMembership,
                             const Tolerances& tols = defaultTol()) {
    requireFinite(w, "radialMembership");
    const auto ctx = detail::membershipContext(x0, y, tols);
    const ConeBlocks b = coneBlocks(ctx.frame, ctx.r, ctx.p, w);
    const double scale = std::max(1.0, frob(w));
    if (!detail::tangentBlocksOk(b, tol, scale)) return false;
    if (b.C.rows() == 0 || b.D.rows() == 0) return true;
    // eigenvalues of C below tol * scale(W) count as kernel directions;
    // a cutoff relative to C alone would invert numerical dust when C = 0
    const Matrix csym = 0.5 * (b.C + b.C.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(csym);
    Vector inv = Vector::Zero(csym.rows());
    for (Eigen::Index i = 0; i < csym.rows(); ++i)
        if (eig.eigenvalues()[i] > tol * scale) inv[i] = 1.0 / eig.eigenvalues()[i];
    const Matrix cpinv = eig.eigenvectors() * inv.asDiagonal() *
                         eig.eigenvectors().transpose();
    const Matrix residual =
        b.D * (Matrix::Identity(csym.rows(), csym.cols()) - cpinv * csym);
    return frob(residual) <= tol * std::max(1.0, frob(b.D));
}

// Directional derivative of the nuclear norm: trace of the leading block
// plus the nuclear norm of the trailing corner, in any SVD frame of X0.
inline double dirDerivative(const Matrix& x0, const Matrix& w,
                            const Tolerances& tol = defaultTol()) {
    requireFinite(x0, "dirDerivative");
    requireFinite(w, "dirDerivative");
    if (x0.rows() != w.rows() || x0.cols() != w.cols())
        throw InvalidInput("dirDerivative: shape mismatch");
    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tol.rankRel);
    const Matrix m = f.U.transpose() * w * f.V;
    const Matrix corner = m.bottomRightCorner(x0.rows() - r, x0.cols() - r);
    return m.topLeftCorner(r, r).trace() + nuclearNorm(corner);
}

// Orthonormal basis of the model tangent space T = {U0 Y^T + X V0^T}:
// in frame coordinates, every matrix touching the first r rows or columns.
struct SubspaceBasis {
    std::vector<Matrix> basis;
    Eigen::Index dimension = 0;
};

inline SubspaceBasis modelTangentBasis(const Matrix& x0,
                                       const Tolerances& tol = defaultTol()) {
    requireFinite(x0, "modelTangentBasis");
    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tol.rankRel);
    const Eigen::Index n1 = x0.rows();
    const Eigen::Index n2 = x0.cols();
    SubspaceBasis out;
    for (Eigen::Index j = 0; j < n2; ++j)
        for (Eigen::Index i = 0; i < n1; ++i)
            if (i < r || j < r)
                out.basis.push_back(f.U.col(i) * f.V.col(j).transpose());
    out.dimension = static_cast<Eigen::Index>(out.basis.size());
    return out;
}

namespace detail {

inline bool kernelMissesSubspace(const Matrix& phi,
                                 const std::vector<Matrix>& basis, double tol) {
    const Eigen::Index k = static_cast<Eigen::Index>(basis.size());
    if (k == 0) return true;
    if (phi.rows() < k) return false;
    Matrix g(phi.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) g.col(j) = phi * vec(basis[j]);
    const Vector s = singularValues(g);
    return s[s.size() - 1] > tol * s[0];
}

} // namespace detail

// Strict Restricted Injectivity: Ker Phi meets U0 S^r V0^T only at 0.
inline bool sriCheck(const Matrix& phi, const Matrix& x0,
                     double tol = defaultTol().rankTest,
                     const Tolerances& tols = defaultTol()) {
    requireFinite(phi, "sriCheck");
    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tols.rankRel);
    std::vector<Matrix> basis;
    const double inv = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = i; j < r; ++j) {
            Matrix b = f.U.col(i) * f.V.col(j).transpose();
            if (i != j)
                b = inv * (b + f.U.col(j) * f.V.col(i).transpose());
            basis.push_back(b);
        }
    return detail::kernelMissesSubspace(phi, basis, tol);
}

// Restricted Injectivity: Ker Phi meets the model tangent space only at 0.
inline bool riCheck(const Matrix& phi, const Matrix& x0,
                    double tol = defaultTol().rankTest,
                    const Tolerances& tols = defaultTol()) {
    requireFinite(phi, "riCheck");
    const SubspaceBasis t = modelTangentBasis(x0, tols);
    return detail::kernelMissesSubspace(phi, t.basis, tol);
}

// One element of the radial cone in a given frame, kept in block form so
// tests can recombine or rescale the pieces.
struct ConeElement {
    Matrix A;  // symmetric r x r
    Matrix B;  // r x (p-r)
    Matrix C;  // PSD (p-r) x (p-r)
    OrthogonalPair frame;
    Eigen::Index r = 0, p = 0;

    Matrix compose(Eigen::Index n1, Eigen::Index n2) const {
        Matrix m = Matrix::Zero(n1, n2);
        m.topLeftCorner(r, r) = A;
        if (p > r) {
            const Matrix d = B * C;
            m.block(0, r, r, p - r) = d;
            m.block(r, 0, p - r, r) = d.transpose();
            m.block(r, r, p - r, p - r) = C;
        }
        return frame.U * m * frame.V.transpose();
    }
};

inline ConeElement sampleRadialElement(const OrthogonalPair& frame,
                                       Eigen::Index r, Eigen::Index p, Rng& rng) {
    ConeElement e;
    e.frame = frame;
    e.r = r;
    e.p = p;
    const Matrix a = rng.gaussianMatrix(r, r);
    e.A = 0.5 * (a + a.transpose());
    e.B = rng.gaussianMatrix(r, p - r);
    const Matrix g = rng.gaussianMatrix(p - r, p - r);
    e.C = g * g.transpose();
    return e;
}

// Draw a direction along which the nuclear norm does not increase from X0,
// either from the flat part of the descent cone (Tr(A + C) = 0 pattern) or
// from the interior of the critical cone. A line search certifies descent.
inline Matrix sampleDescent(const Matrix& x0, Rng& rng,
                            const Tolerances& tol = defaultTol()) {
    requireFinite(x0, "sampleDescent");
    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tol.rankRel);
    if (r < 1) throw PreconditionViolation("sampleDescent: rank must be >= 1");
    const Eigen::Index n1 = x0.rows();
    const Eigen::Index n2 = x0.cols();
    const double nucX0 = nuclearNorm(x0);

    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix w;
        if (rng.uniform() < 0.5) {
            // flat family: A symmetric, C PSD, coupling D = BC, Tr(A+C) = 0
            const Matrix a0 = rng.gaussianMatrix(r, r);
            Matrix a = 0.5 * (a0 + a0.transpose());
            const Eigen::Index q = n1 - r;
            Matrix c = Matrix::Zero(q, q);
            if (q > 0) {
                const Matrix g = rng.gaussianMatrix(q, q);
                c = g * g.transpose() / std::max<double>(1, q);
            }
            a.diagonal().array() -= (a.trace() + c.trace()) / double(r);
            Matrix m = Matrix::Zero(n1, n2);
            m.topLeftCorner(r, r) = a;
            if (q > 0) {
                const Matrix b = rng.gaussianMatrix(r, q);
                const Matrix d = b * c;
                m.block(0, r, r, q) = d;
                m.block(r, 0, q, r) = d.transpose();
                m.block(r, r, q, q) = c;
            }
            w = f.U * m * f.V.transpose();
        } else {
            // interior of the critical cone: Tr A + ||corner||_* < 0
            Matrix m = rng.gaussianMatrix(n1, n2);
            const double margin = 0.1 * (1.0 + frob(m));
            const Matrix corner = m.bottomRightCorner(n1 - r, n2 - r);
            const double slack =
                m.topLeftCorner(r, r).trace() + nuclearNorm(corner) + margin;
            if (slack > 0.0)
                m.topLeftCorner(r, r).diagonal().array() -= slack / double(r);
            w = f.U * m * f.V.transpose();
        }
        if (frob(w) < 1e-9) continue;

        double t = frob(x0) / std::max(1.0, frob(w));
        for (int k = 0; k < 80; ++k, t *= 0.5) {
            const double nuc = nuclearNorm(x0 + t * w);
            if (nuc <= nucX0 * (1.0 + 1e-10) + 1e-12) return w;
        }
        throw InternalError("sampleDescent: line search failed on a sampled direction");
    }
    throw InternalError("sampleDescent: could not draw a nonzero direction");
}

} // namespace conecert

#endif // CONECERT_GEOMETRY_HPP

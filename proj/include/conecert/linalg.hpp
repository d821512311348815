#ifndef CONECERT_LINALG_HPP
#define CONECERT_LINALG_HPP

#include "conecert/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace conecert {

// Full ordered SVD: X = U * Diag(sigma) * V^T with U n1 x n1, V n2 x n2,
// sigma of length min(n1, n2), nonincreasing.
struct SvdFactors {
    Matrix U;
    Matrix V;
    Vector sigma;

    Matrix reconstruct() const {
        Matrix d = Matrix::Zero(U.rows(), V.rows());
        for (Eigen::Index i = 0; i < sigma.size(); ++i) d(i, i) = sigma[i];
        return U * d * V.transpose();
    }
};

// One orthogonal pair diagonalizing a designated (X, Y) couple.
struct OrthogonalPair {
    Matrix U;
    Matrix V;
};

namespace detail {

// Reproducible sign convention: the first entry of each column whose
// magnitude is significant must be positive. Columns beyond min(n1,n2)
// span null spaces and may be flipped independently.
inline void fixSvdSigns(Matrix& u, Matrix& v, Eigen::Index paired) {
    auto firstSignificant = [](const Eigen::Ref<const Vector>& col) {
        const double cap = col.cwiseAbs().maxCoeff();
        const double cut = 1e-12 * std::max(cap, 1e-300);
        for (Eigen::Index i = 0; i < col.size(); ++i)
            if (std::abs(col[i]) > cut) return col[i];
        return 0.0;
    };
    for (Eigen::Index j = 0; j < paired; ++j) {
        if (firstSignificant(u.col(j)) < 0.0) {
            u.col(j) = -u.col(j);
            v.col(j) = -v.col(j);
        }
    }
    for (Eigen::Index j = paired; j < u.cols(); ++j)
        if (firstSignificant(u.col(j)) < 0.0) u.col(j) = -u.col(j);
    for (Eigen::Index j = paired; j < v.cols(); ++j)
        if (firstSignificant(v.col(j)) < 0.0) v.col(j) = -v.col(j);
}

} // namespace detail

inline SvdFactors svd(const Matrix& x) {
    requireFinite(x, "svd");
    if (x.rows() == 0 || x.cols() == 0)
        return {Matrix::Identity(x.rows(), x.rows()),
                Matrix::Identity(x.cols(), x.cols()), Vector(0)};
    Eigen::JacobiSVD<Matrix> solver(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdFactors f{solver.matrixU(), solver.matrixV(), solver.singularValues()};
    detail::fixSvdSigns(f.U, f.V, f.sigma.size());
    return f;
}

// Singular values only; cheaper when factors are not needed.
inline Vector singularValues(const Matrix& x) {
    requireFinite(x, "singularValues");
    if (x.rows() == 0 || x.cols() == 0) return Vector(0);
    return Eigen::JacobiSVD<Matrix>(x).singularValues();
}

inline Eigen::Index rankTol(const Matrix& x, double relTol) {
    if (relTol <= 0.0) throw InvalidInput("rankTol: relTol must be positive");
    const Vector s = singularValues(x);
    if (s.size() == 0) return 0;
    const double cut = relTol * s[0];
    Eigen::Index r = 0;
    while (r < s.size() && s[r] > cut) ++r;
    return r;
}

inline Matrix pinv(const Matrix& x, double relTol) {
    if (relTol <= 0.0) throw InvalidInput("pinv: relTol must be positive");
    requireFinite(x, "pinv");
    if (x.rows() == 0 || x.cols() == 0) return Matrix::Zero(x.cols(), x.rows());
    Eigen::JacobiSVD<Matrix> solver(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = solver.singularValues();
    const double cut = s.size() ? relTol * s[0] : 0.0;
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut) inv[i] = 1.0 / s[i];
    return solver.matrixV() * inv.asDiagonal() * solver.matrixU().transpose();
}

// Nearest (Frobenius) positive semidefinite matrix: eigenvalues clamped at 0.
inline Matrix psdProject(const Matrix& s, double symTol = defaultTol().symmetry) {
    requireFinite(s, "psdProject");
    if (s.rows() != s.cols()) throw InvalidInput("psdProject: matrix not square");
    if (s.rows() == 0) return s;
    const double scale = std::max(1.0, frob(s));
    if (frob(s - s.transpose()) > symTol * scale)
        throw InvalidInput("psdProject: input not symmetric within tolerance");
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    Vector lam = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

inline double minEigenvalue(const Matrix& s) {
    if (s.rows() == 0) return 0.0;
    const Matrix sym = 0.5 * (s + s.transpose());
    return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
}

// Simultaneous ordered SVD of X0 and a subgradient Y of the nuclear norm at
// X0: refine an SVD frame of X0 by an SVD of the trailing block of Y. The
// returned pair diagonalizes both matrices with nonincreasing singular values.
inline OrthogonalPair simultaneousSvd(const Matrix& x0, const Matrix& y,
                                      const Tolerances& tol = defaultTol()) {
    requireFinite(x0, "simultaneousSvd");
    requireFinite(y, "simultaneousSvd");
    if (x0.rows() != y.rows() || x0.cols() != y.cols())
        throw InvalidInput("simultaneousSvd: shape mismatch");
    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tol.rankRel);
    const Eigen::Index n1 = x0.rows();
    const Eigen::Index n2 = x0.cols();
    if (r == 0) {
        const SvdFactors g = svd(y);
        return {g.U, g.V};
    }
    const Matrix m = f.U.transpose() * y * f.V;
    // membership structure: identity leading block, vanishing off blocks
    const double slack = 10.0 * tol.membership * std::max(1.0, frob(y));
    if (frob(m.topLeftCorner(r, r) - Matrix::Identity(r, r)) > slack ||
        frob(m.topRightCorner(r, n2 - r)) > slack ||
        frob(m.bottomLeftCorner(n1 - r, r)) > slack)
        throw PreconditionViolation(
            "simultaneousSvd: Y is not a nuclear-norm subgradient at X0");
    const Matrix w = m.bottomRightCorner(n1 - r, n2 - r);
    const SvdFactors g = svd(w);
    OrthogonalPair pair;
    pair.U = Matrix(n1, n1);
    pair.U.leftCols(r) = f.U.leftCols(r);
    pair.U.rightCols(n1 - r) = f.U.rightCols(n1 - r) * g.U;
    pair.V = Matrix(n2, n2);
    pair.V.leftCols(r) = f.V.leftCols(r);
    pair.V.rightCols(n2 - r) = f.V.rightCols(n2 - r) * g.V;
    return pair;
}

} // namespace conecert

#endif // CONECERT_LINALG_HPP

#ifndef CONECERT_SOLVERS_HPP
#define CONECERT_SOLVERS_HPP

#include "conecert/geometry.hpp"
#include "conecert/linalg.hpp"
#include "conecert/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace conecert {

// Affine constraint on vec-coordinates: matrix * vec(X) = rhs.
struct AffineConstraint {
    Matrix matrix;
    Vector rhs;
};

struct SolverReport {
    Matrix solution;
    double primalResidual = 0.0;
    double dualResidual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objectiveTrace;
};

class CertificateInfeasible : public PreconditionViolation {
public:
    using PreconditionViolation::PreconditionViolation;
};

namespace detail {

// Thin SVD wrapper; BDC for sizes where Jacobi gets slow.
struct ThinSvd {
    Matrix U, V;
    Vector sigma;
};

inline ThinSvd thinSvd(const Matrix& a) {
    if (std::min(a.rows(), a.cols()) >= 32) {
        Eigen::BDCSVD<Matrix> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return {s.matrixU(), s.matrixV(), s.singularValues()};
    }
    Eigen::JacobiSVD<Matrix> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {s.matrixU(), s.matrixV(), s.singularValues()};
}

// Least-squares projector onto {v : A v = b} built once from a thin SVD.
class AffineProjector {
public:
    AffineProjector() = default;
    AffineProjector(const Matrix& a, Vector b, double rankRel = 1e-12)
        : b_(std::move(b)) {
        a_ = a;
        if (a.rows() == 0 || a.cols() == 0) {
            u_.resize(a.rows(), 0);
            v_.resize(a.cols(), 0);
            sigma_.resize(0);
            return;
        }
        ThinSvd s = thinSvd(a);
        const double cut = s.sigma.size() ? rankRel * s.sigma[0] : 0.0;
        Eigen::Index k = 0;
        while (k < s.sigma.size() && s.sigma[k] > cut) ++k;
        u_ = s.U.leftCols(k);
        v_ = s.V.leftCols(k);
        sigma_ = s.sigma.head(k);
    }

    // minimal-norm least-squares solution of A v = b
    Vector leastNorm() const {
        if (sigma_.size() == 0) return Vector::Zero(a_.cols());
        Vector w = u_.transpose() * b_;
        w.array() /= sigma_.array();
        return v_ * w;
    }

    double residualOf(const Vector& v) const { return (a_ * v - b_).norm(); }

    Vector project(const Vector& v) const {
        Vector e = a_ * v - b_;
        if (sigma_.size() == 0) return v;
        Vector w = u_.transpose() * e;
        w.array() /= sigma_.array();
        return v - v_ * w;
    }

private:
    Matrix a_, u_, v_;
    Vector sigma_, b_;
};

inline Matrix svtShrink(const Matrix& x, double tau, double* objective) {
    Eigen::JacobiSVD<Matrix> s(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector sig = (s.singularValues().array() - tau).max(0.0);
    if (objective) *objective = sig.sum();
    return s.matrixU() * sig.asDiagonal() * s.matrixV().transpose();
}

} // namespace detail

struct NnmOptions {
    double tol = defaultTol().solverTol;
    int maxIter = 20000;
    double svtStep = 0.0;  // <= 0: scaled from the least-norm feasible point
    bool recordObjective = false;
};

// min ||X||_* subject to Phi vec(X) = rhs, by Douglas-Rachford splitting of
// the singular-value soft-threshold prox and the affine projection.
inline SolverReport solveNnm(const AffineConstraint& constraint,
                             Eigen::Index rows, Eigen::Index cols,
                             const NnmOptions& opts = {}) {
    requireFinite(constraint.matrix, "solveNnm");
    requireFinite(constraint.rhs, "solveNnm");
    if (constraint.matrix.cols() != rows * cols)
        throw InvalidInput("solveNnm: constraint width != rows*cols");
    if (constraint.matrix.rows() != constraint.rhs.size())
        throw InvalidInput("solveNnm: rhs size mismatch");

    SolverReport rep;
    const double bscale = 1.0 + constraint.rhs.norm();
    detail::AffineProjector proj(constraint.matrix, constraint.rhs);
    const Vector vls = proj.leastNorm();
    if (proj.residualOf(vls) > 1e-7 * bscale) {
        // no feasible point: never a silent wrong answer
        rep.solution = unvec(vls, rows, cols);
        rep.primalResidual = proj.residualOf(vls);
        rep.converged = false;
        return rep;
    }

    double tau = opts.svtStep;
    if (tau <= 0.0) {
        const double top = spectralNorm(unvec(vls, rows, cols));
        tau = std::max(1e-8, 0.1 * top);
    }

    Vector z = vls;
    Matrix x;
    // monotone safeguard: best feasible iterate seen so far; its objective
    // is the solver's nonincreasing progress measure
    double bestObj = nuclearNorm(unvec(vls, rows, cols));
    for (int k = 0; k < opts.maxIter; ++k) {
        x = detail::svtShrink(unvec(z, rows, cols), tau, nullptr);
        const Vector w = vec(x);
        const Vector y = proj.project(2.0 * w - z);
        z += y - w;
        rep.iterations = k + 1;
        rep.primalResidual = proj.residualOf(w);
        rep.dualResidual = (y - w).norm();
        if (opts.recordObjective) {
            bestObj = std::min(bestObj, nuclearNorm(unvec(y, rows, cols)));
            rep.objectiveTrace.push_back(bestObj);
        }
        if (rep.primalResidual <= opts.tol * bscale &&
            rep.dualResidual <= opts.tol * std::max(1.0, w.norm())) {
            rep.converged = true;
            break;
        }
    }
    rep.solution = x;
    return rep;
}

// Spectral-norm minimization over an affine slice of T^perp:
//   min ||Z||  subject to  N vec(Z) = -N vec(E0),  Z in span(Tperp).
// Outer bisection on the norm level; inner alternating projections between
// the affine set (exact, via least squares) and the spectral ball (singular
// value clipping).
class SpectralMinProblem {
public:
    SpectralMinProblem(const Matrix& nullOp, const Matrix& e0,
                       const SubspaceBasis& tperp)
        : rows_(e0.rows()), cols_(e0.cols()), basis_(tperp.basis) {
        requireFinite(nullOp, "SpectralMinProblem");
        requireFinite(e0, "SpectralMinProblem");
        const Eigen::Index q = static_cast<Eigen::Index>(basis_.size());
        Matrix nd(nullOp.rows(), q);
        for (Eigen::Index j = 0; j < q; ++j)
            nd.col(j) = nullOp * vec(basis_[j]);
        Vector c = nullOp.rows() ? Vector(-nullOp * vec(e0)) : Vector(0);
        proj_ = detail::AffineProjector(nd, c);
        uls_ = proj_.leastNorm();
        feasible_ = proj_.residualOf(uls_) <= 1e-8 * (1.0 + c.norm());
        gapEps_ = 1e-9 * (1.0 + uls_.norm());
    }

    bool systemFeasible() const { return feasible_; }

    Matrix compose(const Vector& u) const {
        Matrix z = Matrix::Zero(rows_, cols_);
        for (size_t k = 0; k < basis_.size(); ++k) z += u[k] * basis_[k];
        return z;
    }

    Vector coords(const Matrix& z) const {
        Vector u(basis_.size());
        for (size_t k = 0; k < basis_.size(); ++k)
            u[k] = (basis_[k].array() * z.array()).sum();
        return u;
    }

    // Distance from the affine point u to the spectral ball of radius rho.
    double ballGap(const Vector& u, double rho) const {
        const Vector s = singularValues(compose(u));
        double g2 = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double ex = std::max(0.0, s[i] - rho);
            g2 += ex * ex;
        }
        return std::sqrt(g2);
    }

    Vector pocsStep(const Vector& u, double rho) const {
        Matrix z = compose(u);
        Eigen::JacobiSVD<Matrix> s(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Vector sig = s.singularValues().cwiseMin(rho);
        z = s.matrixU() * sig.asDiagonal() * s.matrixV().transpose();
        return proj_.project(coords(z));
    }

    // Alternating-projection feasibility oracle at a given norm level, with
    // Aitken vector extrapolation to cut through the slow tangential regime.
    // Infeasibility is certified at a near-stationary configuration with a
    // substantial residual gap: that is a minimal-distance pair of the two
    // sets, so they do not intersect at this level.
    bool feasibility(double rho, Vector& u, int cap = 5000) const {
        if (!feasible_) return false;
        if (basis_.empty()) return true;  // Z = 0 is the only point
        u = proj_.project(u);
        Vector uPrev = u, uPrev2 = u;
        for (int k = 0; k < cap; ++k) {
            uPrev2 = uPrev;
            uPrev = u;
            u = pocsStep(u, rho);
            const double g = ballGap(u, rho);
            if (g <= gapEps_) return true;
            if (k >= 2 && k % 40 == 0) {
                const Vector d1 = u - uPrev;
                const Vector d0 = uPrev - uPrev2;
                const double denom = d0.squaredNorm();
                if (denom > 0.0) {
                    const double q =
                        std::clamp(d1.dot(d0) / denom, 0.0, 0.9995);
                    const Vector cand = proj_.project(u + q / (1.0 - q) * d1);
                    if (ballGap(cand, rho) < g) u = cand;
                }
                const Vector next = pocsStep(u, rho);
                const double g2 = ballGap(u, rho);
                if (g2 <= gapEps_) return true;
                if ((next - u).norm() <= 1e-7 * std::max(g2, gapEps_) &&
                    g2 > 10.0 * gapEps_)
                    return false;
                u = next;
                ++k;
            }
        }
        return ballGap(u, rho) <= 10.0 * gapEps_;
    }

    struct Result {
        Matrix z0;
        double rho = 0.0;
        SolverReport report;
    };

    Result solve(double e0Nuclear, int bisectionSteps = 40, int cap = 5000) const {
        Result out;
        if (!feasible_)
            throw CertificateInfeasible(
                "spectral-norm minimization: affine system has no solution; "
                "no dual certificate exists");
        Vector u = uls_;
        if (basis_.empty() || spectralNorm(compose(uls_)) <= gapEps_) {
            out.z0 = compose(uls_);
            out.rho = spectralNorm(out.z0);
            out.report.converged = true;
            out.report.solution = out.z0;
            return out;
        }
        double lo = 0.0;
        double hi = std::max(e0Nuclear + 1.0, spectralNorm(compose(uls_)));
        Vector uFeas = uls_;
        int iters = 0;
        for (int step = 0; step < bisectionSteps; ++step) {
            const double mid = 0.5 * (lo + hi);
            Vector uTrial = uFeas;
            if (feasibility(mid, uTrial, cap)) {
                hi = mid;
                uFeas = uTrial;
            } else {
                lo = mid;
            }
            ++iters;
        }
        // settle on the last feasible level
        feasibility(hi, uFeas, cap);
        out.z0 = compose(uFeas);
        out.rho = spectralNorm(out.z0);
        out.report.solution = out.z0;
        out.report.primalResidual = proj_.residualOf(uFeas);
        out.report.dualResidual = hi - lo;
        out.report.iterations = iters;
        out.report.converged = true;
        return out;
    }

private:
    Eigen::Index rows_, cols_;
    std::vector<Matrix> basis_;
    detail::AffineProjector proj_;
    Vector uls_;
    bool feasible_ = false;
    double gapEps_ = 1e-9;
};

inline SpectralMinProblem::Result solveSpectralMin(const Matrix& nullOp,
                                                   const Matrix& e0,
                                                   const SubspaceBasis& tperp) {
    SpectralMinProblem prob(nullOp, e0, tperp);
    return prob.solve(nuclearNorm(e0));
}

// ---------------------------------------------------------------------------
// The convex (A, C, D) subproblem of the multiblock verifier:
//
//   min  -<linA, A> - <linC, C> - <linD, D>
//        + beta/2 ||Ek - D||_F^2 + beta/2 ||Ek - Bk C||_F^2
//        + eps/2 (||A - pA||^2 + ||C - pC||^2 + ||D - pD||^2)
//   s.t. Phi(U [A D 0; D^T C 0; 0 0 0] V^T) = 0,  A symmetric,  C PSD.
//
// The tiny proximal term keeps the problem bounded when the linear A-part
// has feasible recession directions. Solved by Douglas-Rachford between the
// affine-constrained quadratic prox (KKT solve) and the cone projection.
// ---------------------------------------------------------------------------

struct AcdParams {
    Matrix linA, linC, linD;
    Matrix proxA, proxC, proxD;
    Matrix Bk;  // empty: drop the Bk C coupling term entirely
    Matrix Ek;
    double beta = 1.0;
    double eps = 1e-8;
};

struct AcdResult {
    Matrix A, C, D;
    double feasResidual = 0.0;      // raw Phi-constraint residual
    double fixedPointResidual = 0.0;
    int iterations = 0;
    bool converged = false;
};

class AcdSubproblem {
public:
    AcdSubproblem(const Matrix& phi, const OrthogonalPair& frame,
                  Eigen::Index r, Eigen::Index p)
        : r_(r), p_(p), q_(p - r) {
        if (p < r || r < 0) throw InvalidInput("AcdSubproblem: need p >= r >= 0");
        dimA_ = r_ * r_;
        dimD_ = r_ * q_;
        dimC_ = q_ * q_;
        dim_ = dimA_ + dimD_ + dimC_;
        psiRaw_.resize(phi.rows(), dim_);
        Eigen::Index col = 0;
        for (Eigen::Index j = 0; j < r_; ++j)
            for (Eigen::Index i = 0; i < r_; ++i)
                psiRaw_.col(col++) =
                    phi * vec(frame.U.col(i) * frame.V.col(j).transpose());
        for (Eigen::Index j = 0; j < q_; ++j)
            for (Eigen::Index i = 0; i < r_; ++i)
                psiRaw_.col(col++) =
                    phi * vec(frame.U.col(i) * frame.V.col(r_ + j).transpose() +
                              frame.U.col(r_ + j) * frame.V.col(i).transpose());
        for (Eigen::Index j = 0; j < q_; ++j)
            for (Eigen::Index i = 0; i < q_; ++i)
                psiRaw_.col(col++) =
                    phi * vec(frame.U.col(r_ + i) * frame.V.col(r_ + j).transpose());
        // orthonormal row basis of the constraint operator
        if (dim_ > 0 && psiRaw_.rows() > 0) {
            detail::ThinSvd s = detail::thinSvd(psiRaw_);
            const double cut = s.sigma.size() ? 1e-11 * s.sigma[0] : 0.0;
            Eigen::Index k = 0;
            while (k < s.sigma.size() && s.sigma[k] > cut) ++k;
            psi_ = s.V.leftCols(k).transpose();
        } else {
            psi_.resize(0, dim_);
        }
    }

    Eigen::Index kernelDim() const { return dim_ - psi_.rows(); }
    Eigen::Index dim() const { return dim_; }

    Vector stack(const Matrix& a, const Matrix& d, const Matrix& c) const {
        Vector x(dim_);
        x.head(dimA_) = vec(a);
        x.segment(dimA_, dimD_) = vec(d);
        x.tail(dimC_) = vec(c);
        return x;
    }

    void unstack(const Vector& x, Matrix& a, Matrix& d, Matrix& c) const {
        a = unvec(x.head(dimA_), r_, r_);
        d = unvec(x.segment(dimA_, dimD_), r_, q_);
        c = unvec(x.tail(dimC_), q_, q_);
    }

    double rawResidual(const Matrix& a, const Matrix& d, const Matrix& c) const {
        if (psiRaw_.rows() == 0) return 0.0;
        return (psiRaw_ * stack(a, d, c)).norm();
    }

    // gradient of the smooth objective (for stationarity diagnostics)
    Vector gradient(const AcdParams& prm, const Vector& x) const {
        Matrix a, d, c;
        unstack(x, a, d, c);
        Matrix ga = -prm.linA + prm.eps * (a - prm.proxA);
        Matrix gd = -prm.linD + prm.beta * (d - prm.Ek) + prm.eps * (d - prm.proxD);
        Matrix gc = -prm.linC + prm.eps * (c - prm.proxC);
        if (prm.Bk.size() > 0)
            gc += prm.beta * prm.Bk.transpose() * (prm.Bk * c - prm.Ek);
        return stack(ga, gd, gc);
    }

    Vector projectCone(const Vector& x) const {
        Matrix a, d, c;
        unstack(x, a, d, c);
        a = Matrix(0.5 * (a + a.transpose()).eval());
        if (q_ > 0) {
            const Matrix csym = 0.5 * (c + c.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> eig(csym);
            c = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                eig.eigenvectors().transpose();
        }
        return stack(a, d, c);
    }

    Vector projectAffine(const Vector& x) const {
        if (psi_.rows() == 0) return x;
        return x - psi_.transpose() * (psi_ * x);
    }

    AcdResult solve(const AcdParams& prm, int innerCap = 2000,
                    double innerTol = 1e-10) const {
        AcdResult out;
        if (dim_ == 0) {
            out.A.resize(0, 0);
            out.D.resize(r_, 0);
            out.C.resize(0, 0);
            out.converged = true;
            return out;
        }
        const double t = 1.0 / (prm.beta + 1.0);
        const double mA = prm.eps + 1.0 / t;
        const double mD = prm.beta + prm.eps + 1.0 / t;
        const double mC0 = prm.eps + 1.0 / t;

        // eigen-decomposed left factor for the C-block inverse
        Matrix qc;
        Vector lamInv;
        if (q_ > 0 && prm.Bk.size() > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(prm.Bk.transpose() * prm.Bk);
            qc = eig.eigenvectors();
            lamInv = (prm.beta * eig.eigenvalues().array() + mC0).inverse();
        }
        auto minvApply = [&](const Vector& v) {
            Vector out2(dim_);
            out2.head(dimA_) = v.head(dimA_) / mA;
            out2.segment(dimA_, dimD_) = v.segment(dimA_, dimD_) / mD;
            if (q_ > 0) {
                Matrix c = unvec(v.tail(dimC_), q_, q_);
                if (prm.Bk.size() > 0)
                    c = qc * (lamInv.asDiagonal() * (qc.transpose() * c));
                else
                    c /= mC0;
                out2.tail(dimC_) = vec(c);
            }
            return out2;
        };

        // linear part of the objective
        Matrix gA = -(prm.linA + prm.eps * prm.proxA);
        Matrix gD = -(prm.linD + prm.beta * prm.Ek + prm.eps * prm.proxD);
        Matrix gC = -(prm.linC + prm.eps * prm.proxC);
        if (prm.Bk.size() > 0) gC -= prm.beta * prm.Bk.transpose() * prm.Ek;
        const Vector g0 = stack(gA, gD, gC);

        // Schur complement of the KKT system on the orthonormal rows
        Eigen::LLT<Matrix> schur;
        if (psi_.rows() > 0) {
            Matrix w(dim_, psi_.rows());
            for (Eigen::Index i = 0; i < psi_.rows(); ++i)
                w.col(i) = minvApply(psi_.row(i).transpose());
            schur.compute(psi_ * w);
        }
        auto proxAffineQuad = [&](const Vector& v) {
            const Vector rhs = v / t - g0;
            Vector x = minvApply(rhs);
            if (psi_.rows() > 0) {
                const Vector lambda = schur.solve(psi_ * x);
                x -= minvApply(psi_.transpose() * lambda);
            }
            return x;
        };

        Vector z = stack(prm.proxA, prm.proxD, prm.proxC);
        Vector x = z, y = z;
        for (int k = 0; k < innerCap; ++k) {
            x = proxAffineQuad(z);
            y = projectCone(2.0 * x - z);
            z += y - x;
            out.iterations = k + 1;
            out.fixedPointResidual = (y - x).norm();
            if (out.fixedPointResidual <= innerTol * std::max(1.0, x.norm())) {
                out.converged = true;
                break;
            }
        }
        // x is affine-exact; settle the cone blocks and re-project once
        Vector xc = projectCone(x);
        xc = projectAffine(xc);
        Matrix a, d, c;
        unstack(xc, a, d, c);
        out.A = 0.5 * (a + a.transpose());
        out.D = d;
        out.C = c;
        out.feasResidual = rawResidual(out.A, out.D, out.C);
        return out;
    }

private:
    Eigen::Index r_, p_, q_;
    Eigen::Index dimA_ = 0, dimD_ = 0, dimC_ = 0, dim_ = 0;
    Matrix psiRaw_;  // m x dim constraint operator on stacked (A, D, C)
    Matrix psi_;     // orthonormal row basis of the same operator
};

} // namespace conecert

#endif // CONECERT_SOLVERS_HPP

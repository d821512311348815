#ifndef CONECERT_CERTIFICATE_HPP
#define CONECERT_CERTIFICATE_HPP

#include "conecert/geometry.hpp"
#include "conecert/linalg.hpp"
#include "conecert/solvers.hpp"
#include "conecert/types.hpp"

#include <cmath>
#include <limits>

namespace conecert {

// Rows span the orthogonal complement of Im Phi^*, i.e. N Phi^T = 0 and
// rank(N) = n1*n2 - rank(Phi). Empty when Phi is surjective onto vec-space.
inline Matrix nullBasis(const Matrix& phi) {
    requireFinite(phi, "nullBasis");
    const Eigen::Index d = phi.cols();
    if (phi.rows() == 0) return Matrix::Identity(d, d);
    Eigen::BDCSVD<Matrix> s(phi, Eigen::ComputeFullV);
    const Vector& sig = s.singularValues();
    const double cut = sig.size() ? 1e-10 * sig[0] : 0.0;
    Eigen::Index k = 0;
    while (k < sig.size() && sig[k] > cut) ++k;
    return s.matrixV().rightCols(d - k).transpose();
}

struct DualCertificate {
    Matrix Y;
    double rho = std::numeric_limits<double>::infinity();
    Eigen::Index p = 0;
    bool nondegenerate = false;
    bool optimal = false;
    SolverReport solver;
};

// Build the minimum-spectral-norm dual certificate Y = Z0 + E0 with
// E0 = U0 V0^T from the compact SVD and Z0 solving the T^perp slice problem.
// optimal <=> rho <= optimalBound; nondegenerate <=> rho < 1 - nscBand.
inline DualCertificate dualCertificate(const Matrix& phi, const Matrix& x0,
                                       const Tolerances& tol = defaultTol()) {
    requireFinite(phi, "dualCertificate");
    requireFinite(x0, "dualCertificate");
    if (phi.cols() != x0.size())
        throw InvalidInput("dualCertificate: Phi width != n1*n2");

    DualCertificate cert;
    if (frob(x0) == 0.0) {
        // Y = 0 certifies the zero solution
        cert.Y = Matrix::Zero(x0.rows(), x0.cols());
        cert.rho = 0.0;
        cert.p = 0;
        cert.nondegenerate = true;
        cert.optimal = true;
        return cert;
    }

    const SvdFactors f = svd(x0);
    const Eigen::Index r = rankTol(x0, tol.rankRel);
    const Eigen::Index n1 = x0.rows();
    const Eigen::Index n2 = x0.cols();
    const Matrix e0 = f.U.leftCols(r) * f.V.leftCols(r).transpose();

    SubspaceBasis tperp;
    for (Eigen::Index j = r; j < n2; ++j)
        for (Eigen::Index i = r; i < n1; ++i)
            tperp.basis.push_back(f.U.col(i) * f.V.col(j).transpose());
    tperp.dimension = static_cast<Eigen::Index>(tperp.basis.size());

    const Matrix n = nullBasis(phi);
    try {
        SpectralMinProblem::Result res = solveSpectralMin(n, e0, tperp);
        cert.Y = res.z0 + e0;
        cert.rho = res.rho;
        cert.solver = res.report;
        cert.p = countUnitSigma(cert.Y, tol.sigmaOneBand);
        cert.nondegenerate = cert.rho < 1.0 - tol.nscBand;
        cert.optimal = cert.rho <= tol.optimalBound;
    } catch (const CertificateInfeasible&) {
        cert.Y = e0;
        cert.rho = std::numeric_limits<double>::infinity();
        cert.p = r;
        cert.nondegenerate = false;
        cert.optimal = false;
    }
    return cert;
}

// Composite least-squares certificate: Y = -Phi^*(Phi vec(Xbar) - b),
// reshaped. Optimality is exactly subgradient membership of Y at Xbar;
// rho records the spectral norm of the T^perp block for the nondegeneracy
// flag.
inline DualCertificate compositeCertificate(const Matrix& phi, const Vector& b,
                                            const Matrix& xbar,
                                            const Tolerances& tol = defaultTol()) {
    requireFinite(phi, "compositeCertificate");
    requireFinite(b, "compositeCertificate");
    requireFinite(xbar, "compositeCertificate");
    if (phi.cols() != xbar.size() || phi.rows() != b.size())
        throw InvalidInput("compositeCertificate: shape mismatch");
    const Vector resid = phi * vec(xbar) - b;
    DualCertificate cert;
    cert.Y = unvec(-phi.transpose() * resid, xbar.rows(), xbar.cols());
    cert.optimal = subdiffMembership(xbar, cert.Y, tol.membership);
    const SvdFactors f = svd(xbar);
    const Eigen::Index r = rankTol(xbar, tol.rankRel);
    const Matrix block = (f.U.transpose() * cert.Y * f.V)
                             .bottomRightCorner(xbar.rows() - r, xbar.cols() - r);
    cert.rho = spectralNorm(block);
    cert.p = countUnitSigma(cert.Y, tol.sigmaOneBand);
    cert.nondegenerate = cert.optimal && cert.rho < 1.0 - tol.nscBand;
    return cert;
}

// General smooth-loss interface: the caller supplies the gradient of f at
// Phi vec(Xbar). Only the least-squares specialization above is exercised
// by the pipeline.
template <typename GradF>
DualCertificate compositeCertificateGeneral(const Matrix& phi, GradF&& gradLoss,
                                     const Matrix& xbar,
                                     const Tolerances& tol = defaultTol()) {
    const Vector g = gradLoss(Vector(phi * vec(xbar)));
    DualCertificate cert;
    cert.Y = unvec(-phi.transpose() * g, xbar.rows(), xbar.cols());
    cert.optimal = subdiffMembership(xbar, cert.Y, tol.membership);
    const SvdFactors f = svd(xbar);
    const Eigen::Index r = rankTol(xbar, tol.rankRel);
    const Matrix block = (f.U.transpose() * cert.Y * f.V)
                             .bottomRightCorner(xbar.rows() - r, xbar.cols() - r);
    cert.rho = spectralNorm(block);
    cert.p = countUnitSigma(cert.Y, tol.sigmaOneBand);
    cert.nondegenerate = cert.optimal && cert.rho < 1.0 - tol.nscBand;
    return cert;
}

} // namespace conecert

#endif // CONECERT_CERTIFICATE_HPP

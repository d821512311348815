#ifndef CONECERT_VERIFIER_HPP
#define CONECERT_VERIFIER_HPP

#include "conecert/certificate.hpp"
#include "conecert/geometry.hpp"
#include "conecert/problem.hpp"
#include "conecert/rng.hpp"
#include "conecert/solvers.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace conecert {

struct MalbumCaps {
    int outerCap = 500;
    int innerCap = 2000;
    double blockTol = 1e-9;
    double innerTol = 1e-10;
    double residBound = 1e5;  // M in the adaptive beta rule
    double betaGrowth = 1.2;  // nu
    double beta0 = 1.0;
    int restarts = 5;
    double witnessTol = defaultTol().witness;
    double divergeBound = 1e8;
};

// One observed iteration of the multiplier loop, for instrumentation.
struct MalbumTraceEntry {
    int iter = 0;
    double beta = 0.0;
    double residSum = 0.0;  // ||E - D|| + ||E - BC||, spectral norms
    bool betaFired = false;
    double phiResidual = 0.0;  // constraint residual of the accepted (A, D, C)
    Matrix A, D, C, B, E, F, G;
};

using MalbumObserver = std::function<void(const MalbumTraceEntry&)>;

struct VerifierOutcome {
    double objective = 0.0;    // 1/2 ||A||_F^2 + 1/2 ||C||_F^2
    double witnessNorm = 0.0;  // ||A|| + ||C|| in spectral norms
    double feasResidual = 0.0;
    int iterations = 0;
    bool verdictZero = false;
    bool reliable = true;
    Matrix Abar, Cbar;
};

namespace detail {

// Kernel intersection test for a finite orthonormal family of directions:
// returns a coefficient vector of a kernel element when one exists.
inline std::optional<Vector> kernelWitness(const Matrix& phi,
                                           const std::vector<Matrix>& basis,
                                           double tol) {
    const Eigen::Index k = static_cast<Eigen::Index>(basis.size());
    if (k == 0) return std::nullopt;
    Matrix g(phi.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) g.col(j) = phi * vec(basis[j]);
    if (phi.rows() < k) {
        // dimension shortfall: some kernel direction exists for sure
        Eigen::JacobiSVD<Matrix> s(g, Eigen::ComputeFullV);
        return Vector(s.matrixV().col(k - 1));
    }
    Eigen::JacobiSVD<Matrix> s(g, Eigen::ComputeFullV);
    const Vector& sig = s.singularValues();
    if (sig[sig.size() - 1] > tol * sig[0]) return std::nullopt;
    return Vector(s.matrixV().col(k - 1));
}

inline std::vector<Matrix> symmetricLeadingBasis(const OrthogonalPair& frame,
                                                 Eigen::Index r) {
    std::vector<Matrix> basis;
    const double inv = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = i; j < r; ++j) {
            Matrix b = frame.U.col(i) * frame.V.col(j).transpose();
            if (i != j) b = inv * (b + frame.U.col(j) * frame.V.col(i).transpose());
            basis.push_back(b);
        }
    return basis;
}

inline std::vector<Matrix> couplingBasis(const OrthogonalPair& frame,
                                         Eigen::Index r, Eigen::Index p) {
    std::vector<Matrix> basis;
    const double inv = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = r; j < p; ++j)
            basis.push_back(inv * (frame.U.col(i) * frame.V.col(j).transpose() +
                                   frame.U.col(j) * frame.V.col(i).transpose()));
    return basis;
}

struct MalbumRun {
    Matrix A, B, C, D, E, F, G;
    double beta = 1.0;
    int iterations = 0;
    bool reliable = true;
    double feasResidual = 0.0;
};

inline VerifierOutcome outcomeFrom(const Matrix& a, const Matrix& c,
                                   double feasResidual, int iterations,
                                   bool reliable, double witnessTol) {
    VerifierOutcome out;
    out.Abar = a;
    out.Cbar = c;
    out.objective = 0.5 * a.squaredNorm() + 0.5 * c.squaredNorm();
    out.witnessNorm = spectralNorm(a) + spectralNorm(c);
    out.feasResidual = feasResidual;
    out.iterations = iterations;
    out.reliable = reliable;
    out.verdictZero = out.witnessNorm < witnessTol;
    return out;
}

inline VerifierOutcome aggregateRestarts(std::vector<VerifierOutcome> runs,
                                         double witnessTol) {
    VerifierOutcome out = runs.front();
    double maxWitness = 0.0;
    int totalIters = 0;
    bool reliable = true;
    size_t best = 0;
    for (size_t i = 0; i < runs.size(); ++i) {
        maxWitness = std::max(maxWitness, runs[i].witnessNorm);
        totalIters += runs[i].iterations;
        reliable = reliable && runs[i].reliable;
        if (runs[i].objective > runs[best].objective) best = i;
    }
    out = runs[best];
    out.objective = runs[best].objective;
    out.witnessNorm = maxWitness;
    out.iterations = totalIters;
    out.reliable = reliable;
    out.verdictZero = maxWitness < witnessTol;
    return out;
}

// Shared multiblock loop. Radial mode keeps the E = BC coupling; tangent
// mode drops the B and G blocks and leaves D constrained only by the
// measurement operator.
inline VerifierOutcome malbumLoop(const AcdSubproblem& sub, Eigen::Index r,
                                  Eigen::Index p, bool radial, std::uint64_t seed,
                                  const MalbumCaps& caps,
                                  const MalbumObserver& observer) {
    const Eigen::Index q = p - r;
    std::vector<VerifierOutcome> runs;
    for (int restart = 0; restart < std::max(1, caps.restarts); ++restart) {
        Rng rng(hashSeed(seed, 0x6d616c62756dULL, restart));
        MalbumRun s;
        const Matrix v1 = rng.gaussianMatrix(r, r);
        s.A = v1 + v1.transpose();
        s.B = rng.gaussianMatrix(r, q);
        const Matrix v2 = rng.gaussianMatrix(q, q);
        s.C = v2 * v2.transpose();
        s.D = s.B * s.C;
        s.E = s.D;
        s.F = Matrix::Zero(r, q);
        s.G = Matrix::Zero(r, q);
        s.beta = caps.beta0;

        for (int k = 0; k < caps.outerCap; ++k) {
            AcdParams prm;
            prm.linA = s.A;
            prm.linD = s.F;
            prm.linC = radial ? Matrix(s.C + s.B.transpose() * s.G) : s.C;
            prm.proxA = s.A;
            prm.proxC = s.C;
            prm.proxD = s.D;
            if (radial) prm.Bk = s.B;
            prm.Ek = s.E;
            prm.beta = s.beta;
            const AcdResult acd = sub.solve(prm, caps.innerCap, caps.innerTol);
            s.reliable = s.reliable && acd.converged;

            Matrix bNew = s.B, eNew, fNew = s.F, gNew = s.G;
            double residSum = 0.0;
            if (radial) {
                // min-norm B solving the BC subproblem; singular values of C
                // below an absolute floor count as zero so B stays bounded
                // when C collapses
                Matrix cpinv = Matrix::Zero(q, q);
                if (q > 0 && spectralNorm(acd.C) > 1e-9)
                    cpinv = pinv(acd.C, 1e-10);
                bNew = (s.E + s.G / s.beta) * cpinv;
                eNew = (-s.F - s.G) / (2.0 * s.beta) +
                       0.5 * (acd.D + bNew * acd.C);
                fNew = s.F + s.beta * (eNew - acd.D);
                gNew = s.G + s.beta * (eNew - bNew * acd.C);
                residSum = spectralNorm(eNew - acd.D) +
                           spectralNorm(eNew - bNew * acd.C);
            } else {
                eNew = acd.D - s.F / s.beta;
                fNew = s.F + s.beta * (eNew - acd.D);
                residSum = spectralNorm(eNew - acd.D);
            }
            const bool fired = residSum > caps.residBound;

            const double move =
                std::max({frob(acd.A - s.A), frob(acd.C - s.C), frob(acd.D - s.D),
                          frob(bNew - s.B), frob(eNew - s.E), frob(fNew - s.F),
                          frob(gNew - s.G)});
            s.A = acd.A;
            s.C = acd.C;
            s.D = acd.D;
            s.B = bNew;
            s.E = eNew;
            s.F = fNew;
            s.G = gNew;
            s.feasResidual = acd.feasResidual;
            s.iterations = k + 1;

            if (observer) {
                MalbumTraceEntry entry;
                entry.iter = k;
                entry.beta = s.beta;
                entry.residSum = residSum;
                entry.betaFired = fired;
                entry.phiResidual = acd.feasResidual;
                entry.A = s.A;
                entry.D = s.D;
                entry.C = s.C;
                entry.B = s.B;
                entry.E = s.E;
                entry.F = s.F;
                entry.G = s.G;
                observer(entry);
            }
            if (fired) s.beta *= caps.betaGrowth;
            if (!s.A.allFinite() || !s.B.allFinite() || !s.C.allFinite() ||
                !s.D.allFinite() || !s.E.allFinite()) {
                s.reliable = false;
                break;
            }
            if (move <= caps.blockTol) break;
            if (std::max({frob(s.A), frob(s.B), frob(s.C), frob(s.D), frob(s.E),
                          frob(s.F), frob(s.G)}) > caps.divergeBound)
                break;  // witness blow-up; no need to iterate further
        }
        runs.push_back(outcomeFrom(s.A, s.C,
                                   s.feasResidual + frob(s.E - s.D) +
                                       (radial ? frob(s.E - s.B * s.C) : 0.0),
                                   s.iterations, s.reliable, caps.witnessTol));
    }
    return aggregateRestarts(std::move(runs), caps.witnessTol);
}

inline VerifierOutcome degenerateFastPath(const Matrix& phi,
                                          const OrthogonalPair& frame,
                                          Eigen::Index r, double rankTest,
                                          double witnessTol) {
    // p = r: the cone collapses to the symmetric leading block, decided by
    // Strict Restricted Injectivity without any iteration.
    const auto basis = symmetricLeadingBasis(frame, r);
    const auto witness = kernelWitness(phi, basis, rankTest);
    VerifierOutcome out;
    out.Abar = Matrix::Zero(r, r);
    out.Cbar = Matrix::Zero(0, 0);
    if (witness) {
        Matrix a = Matrix::Zero(r, r);
        const double inv = 1.0 / std::sqrt(2.0);
        Eigen::Index idx = 0;
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = i; j < r; ++j, ++idx) {
                if (i == j)
                    a(i, i) += (*witness)[idx];
                else {
                    a(i, j) += inv * (*witness)[idx];
                    a(j, i) += inv * (*witness)[idx];
                }
            }
        const double nrm = spectralNorm(a);
        if (nrm > 0) a /= nrm;
        out.Abar = a;
    }
    return outcomeFrom(out.Abar, out.Cbar, 0.0, 0, true, witnessTol);
}

} // namespace detail

// Radial-cone kernel test: maximize 1/2||A||_F^2 + 1/2||C||_F^2 over
//   Phi(U [A D 0; D^T C 0; 0 0 0] V^T) = 0, D = E, E = BC,
//   A symmetric, C PSD,
// by the adaptive multiblock multiplier scheme. The verdict is zero iff
// every restart ends with ||A|| + ||C|| below the witness threshold.
inline VerifierOutcome malbumRadial(const Matrix& phi, const OrthogonalPair& frame,
                                    Eigen::Index r, Eigen::Index p,
                                    std::uint64_t seed, const MalbumCaps& caps = {},
                                    const MalbumObserver& observer = nullptr,
                                    const Tolerances& tol = defaultTol()) {
    if (r < 1 || p < r) throw InvalidInput("malbumRadial: need p >= r >= 1");
    if (p == r)
        return detail::degenerateFastPath(phi, frame, r, tol.rankTest,
                                          caps.witnessTol);
    AcdSubproblem sub(phi, frame, r, p);
    if (sub.kernelDim() == 0) {
        // only the zero triple satisfies the measurement constraint
        return detail::outcomeFrom(Matrix::Zero(r, r),
                                   Matrix::Zero(p - r, p - r), 0.0, 0, true,
                                   caps.witnessTol);
    }
    return detail::malbumLoop(sub, r, p, /*radial=*/true, seed, caps, observer);
}

// Tangent-cone variant: the E = BC coupling is removed (off-diagonal block
// free), used for the strong-minima test together with the lineality-space
// rank test in certify().
inline VerifierOutcome malbumTangent(const Matrix& phi, const OrthogonalPair& frame,
                                     Eigen::Index r, Eigen::Index p,
                                     std::uint64_t seed, const MalbumCaps& caps = {},
                                     const MalbumObserver& observer = nullptr,
                                     const Tolerances& tol = defaultTol()) {
    if (r < 1 || p < r) throw InvalidInput("malbumTangent: need p >= r >= 1");
    if (p == r)
        return detail::degenerateFastPath(phi, frame, r, tol.rankTest,
                                          caps.witnessTol);
    AcdSubproblem sub(phi, frame, r, p);
    if (sub.kernelDim() == 0)
        return detail::outcomeFrom(Matrix::Zero(r, r),
                                   Matrix::Zero(p - r, p - r), 0.0, 0, true,
                                   caps.witnessTol);
    return detail::malbumLoop(sub, r, p, /*radial=*/false, seed, caps, observer);
}

struct Diagnostics {
    double certificateResidual = 0.0;  // ||N vec(Y)|| of the certificate
    double nnmResidual = 0.0;
    int nnmIterations = 0;
    int radialIterations = 0;
    int tangentIterations = 0;
    double runtimeMs = 0.0;
    bool verifierConverged = true;
    bool fastPath = false;
    bool tiltStableKnown = false;  // nondegeneracy ties tilt stability to uniqueness
    bool tiltStable = false;
    std::string note;
};

struct CertificationReport {
    bool optimal = false;
    bool unique = false;
    bool strong = false;
    bool sharp = false;
    bool sri = false;
    bool ri = false;
    bool nsc = false;
    double rho = std::numeric_limits<double>::infinity();
    Eigen::Index r = 0, p = 0, m = 0;
    Diagnostics diag;
};

struct CertifyConfig {
    std::uint64_t seed = 1;
    MalbumCaps caps;
    NnmOptions nnm;
    Tolerances tol;
};

namespace detail {

inline void enforceReportOrder(const CertificationReport& rep) {
    if (rep.sharp && !rep.strong)
        throw InternalError("report invariant violated: sharp without strong");
    if (rep.strong && !rep.unique)
        throw InternalError("report invariant violated: strong without unique");
    if (rep.nsc && rep.optimal && rep.unique != rep.strong)
        throw InternalError(
            "report invariant violated: nondegenerate optimal with unique != strong");
}

} // namespace detail

// Full certification pipeline: dual certificate -> optimality -> frame ->
// injectivity tests -> nondegeneracy fast path or multiplier verification.
inline CertificationReport certify(const ProblemInstance& problem,
                                   const CertifyConfig& config = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    validate(problem);
    const Tolerances& tol = config.tol;

    CertificationReport rep;
    rep.m = problem.m;

    Matrix x0;
    if (problem.x0) {
        x0 = *problem.x0;
    } else {
        const SolverReport nnm =
            solveNnm({problem.phi, problem.observation}, problem.n1, problem.n2,
                     config.nnm);
        rep.diag.nnmResidual = nnm.primalResidual;
        rep.diag.nnmIterations = nnm.iterations;
        if (!nnm.converged) {
            rep.diag.verifierConverged = false;
            rep.diag.note = "nuclear-norm solve did not converge";
            return rep;
        }
        x0 = nnm.solution;
    }

    const auto finish = [&](CertificationReport& r2) -> CertificationReport& {
        const auto t1 = std::chrono::steady_clock::now();
        r2.diag.runtimeMs =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        detail::enforceReportOrder(r2);
        return r2;
    };

    rep.r = rankTol(x0, tol.rankRel);

    if (frob(x0) == 0.0) {
        // zero matrix: optimal iff the observation vanishes, and then it is
        // the unique, strong and sharp solution
        const bool zeroData =
            problem.observation.norm() <= 1e-9 * (1.0 + frob(problem.phi));
        rep.optimal = zeroData;
        rep.unique = rep.strong = rep.sharp = zeroData;
        rep.sri = rep.ri = true;
        rep.nsc = zeroData;
        rep.rho = 0.0;
        rep.diag.tiltStableKnown = true;
        rep.diag.tiltStable = zeroData;
        return finish(rep);
    }

    const DualCertificate cert = dualCertificate(problem.phi, x0, tol);
    rep.rho = cert.rho;
    rep.p = cert.p;
    rep.optimal = cert.optimal;
    if (!cert.optimal) {
        rep.diag.note = "no admissible dual certificate: not an optimal solution";
        return finish(rep);
    }
    const Matrix n = nullBasis(problem.phi);
    rep.diag.certificateResidual = n.rows() ? (n * vec(cert.Y)).norm() : 0.0;

    rep.sri = sriCheck(problem.phi, x0, tol.rankTest, tol);
    rep.ri = riCheck(problem.phi, x0, tol.rankTest, tol);
    rep.nsc = cert.nondegenerate;

    if (rep.nsc) {
        // closed radial cone: uniqueness reduces to Strict Restricted
        // Injectivity, and unique coincides with strong
        rep.unique = rep.sri;
        rep.strong = rep.unique;
        rep.diag.fastPath = true;
    } else {
        const OrthogonalPair frame = simultaneousSvd(x0, cert.Y, tol);
        VerifierOutcome radial;
        if (!rep.sri) {
            rep.unique = false;  // necessary condition already failed
            rep.diag.fastPath = true;
        } else {
            radial = malbumRadial(problem.phi, frame, rep.r, rep.p, config.seed,
                                  config.caps, nullptr, tol);
            rep.diag.radialIterations = radial.iterations;
            rep.diag.verifierConverged =
                rep.diag.verifierConverged && radial.reliable;
            rep.unique = radial.verdictZero && radial.reliable;
        }

        if (!rep.unique) {
            rep.strong = false;
        } else {
            // strong minima: the whole tangent block must miss Ker Phi;
            // the lineality part (C = 0) is an exact rank test
            auto lineality = detail::symmetricLeadingBasis(frame, rep.r);
            auto coupling = detail::couplingBasis(frame, rep.r, rep.p);
            lineality.insert(lineality.end(), coupling.begin(), coupling.end());
            const bool linealityOk =
                !detail::kernelWitness(problem.phi, lineality, tol.rankTest);
            if (!linealityOk) {
                rep.strong = false;
            } else {
                const VerifierOutcome tan =
                    malbumTangent(problem.phi, frame, rep.r, rep.p,
                                  hashSeed(config.seed, 0x7461ULL), config.caps,
                                  nullptr, tol);
                rep.diag.tangentIterations = tan.iterations;
                rep.diag.verifierConverged =
                    rep.diag.verifierConverged && tan.reliable;
                rep.strong = tan.verdictZero && tan.reliable;
            }
        }
    }

    rep.sharp = rep.ri && rep.nsc;
    rep.diag.tiltStableKnown = rep.nsc;
    rep.diag.tiltStable = rep.nsc && rep.unique;
    return finish(rep);
}

} // namespace conecert

#endif // CONECERT_VERIFIER_HPP

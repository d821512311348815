#ifndef CONECERT_TYPES_HPP
#define CONECERT_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace conecert {

// Dense column-major doubles throughout. vec() stacks columns.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PreconditionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Signals a bug in the artifact itself, not bad user data.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Central numeric tolerances. Defaults are referenced all over the test
// suite; change them here or nowhere.
struct Tolerances {
    double svdOrtho = 1e-10;        // ||U^T U - I||_F bound
    double svdRecon = 1e-10;        // relative reconstruction error bound
    double ssvd = 1e-9;             // simultaneous-SVD identity bound
    double rankRel = 1e-9;          // relative singular value cutoff for rank
    double pinvIdentity = 1e-8;     // Penrose identity bound
    double symmetry = 1e-9;         // symmetric-input check for psd_project
    double membership = 1e-6;       // subgradient membership slack
    double coneMembership = 1e-7;   // block tests in radial/tangent membership
    double sigmaOneBand = 1e-6;     // |sigma - 1| band for p(Y)
    double witness = 1e-5;          // ||A|| + ||C|| uniqueness threshold
    double optimalBound = 1.001;    // rho(X0) acceptance bound
    double nscBand = 1e-6;          // rho < 1 - nscBand for nondegeneracy
    double recovery = 1e-3;         // relative recovery error threshold
    double solverTol = 1e-7;        // first-order solver residual target
    double rankTest = 1e-8;         // sigma_min/sigma_max cutoff in injectivity tests
};

inline const Tolerances& defaultTol() {
    static const Tolerances t{};
    return t;
}

inline void requireFinite(const Matrix& x, const char* what) {
    if (!x.allFinite())
        throw InvalidInput(std::string(what) + ": non-finite entries");
}

inline void requireFinite(const Vector& x, const char* what) {
    if (!x.allFinite())
        throw InvalidInput(std::string(what) + ": non-finite entries");
}

// vec(X): columns stacked top to bottom.
inline Vector vec(const Matrix& x) {
    return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw InvalidInput("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline double frob(const Matrix& x) { return x.norm(); }

} // namespace conecert

#endif // CONECERT_TYPES_HPP

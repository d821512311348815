#ifndef CONECERT_PROBLEM_HPP
#define CONECERT_PROBLEM_HPP

#include "conecert/types.hpp"

#include <optional>

namespace conecert {

// One certification instance: min ||X||_* s.t. phi vec(X) = observation,
// with an optional candidate solution.
struct ProblemInstance {
    Eigen::Index n1 = 0, n2 = 0, m = 0;
    Matrix phi;
    Vector observation;
    std::optional<Matrix> x0;
};

inline void validate(const ProblemInstance& p) {
    if (p.n1 <= 0 || p.n2 <= 0) throw InvalidInput("problem: empty shape");
    if (p.m < 0) throw InvalidInput("problem: negative measurement count");
    if (p.phi.rows() != p.m || p.phi.cols() != p.n1 * p.n2)
        throw InvalidInput("problem: phi shape inconsistent with n1, n2, m");
    if (p.observation.size() != p.m)
        throw InvalidInput("problem: observation length != m");
    requireFinite(p.phi, "problem.phi");
    requireFinite(p.observation, "problem.observation");
    if (p.x0) {
        if (p.x0->rows() != p.n1 || p.x0->cols() != p.n2)
            throw InvalidInput("problem: x0 shape mismatch");
        requireFinite(*p.x0, "problem.x0");
        const double resid = (p.phi * vec(*p.x0) - p.observation).norm();
        if (resid > 1e-6 * (1.0 + p.observation.norm()))
            throw InvalidInput("problem: x0 is not feasible for the constraint");
    }
}

} // namespace conecert

#endif // CONECERT_PROBLEM_HPP

#ifndef CONECERT_RNG_HPP
#define CONECERT_RNG_HPP

#include "conecert/types.hpp"

#include <cmath>
#include <cstdint>

namespace conecert {

// splitmix64 step; also used to combine seeds so per-trial streams are
// independent of scheduling order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hashSeed(std::uint64_t a) {
    std::uint64_t s = a;
    return splitmix64(s);
}

inline std::uint64_t hashSeed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s = h ^ (b + 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

template <typename... Rest>
std::uint64_t hashSeed(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return hashSeed(hashSeed(a, b), rest...);
}

// Deterministic Gaussian stream, identical on every platform. std::normal_
// distribution is not pinned by the standard, so we roll Box-Muller here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        splitmix64(state_);
    }

    std::uint64_t nextU64() { return splitmix64(state_); }

    // uniform in [0, 1) with 53 random bits
    double uniform() {
        return static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = mag * std::sin(ang);
        hasSpare_ = true;
        return mag * std::cos(ang);
    }

    Matrix gaussianMatrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = gaussian();
        return m;
    }

    Vector gaussianVector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

} // namespace conecert

#endif // CONECERT_RNG_HPP

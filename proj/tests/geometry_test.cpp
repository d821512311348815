#include "conecert/geometry.hpp"
#include "conecert/rng.hpp"

#include <gtest/gtest.h>

using namespace conecert;

namespace {

Matrix fixtureX0() {
    Matrix x0(2, 2);
    x0 << 1, 0, 0, 0;
    return x0;
}

// random rank-r matrix with a subgradient Y whose p(Y) exceeds r by `extra`
struct Scene {
    Matrix x0, y;
    OrthogonalPair frame;
    Eigen::Index r, p, n1, n2;
};

Scene makeScene(Eigen::Index n1, Eigen::Index n2, Eigen::Index r,
                Eigen::Index extra, Rng& rng) {
    Scene s;
    s.n1 = n1;
    s.n2 = n2;
    s.r = r;
    s.x0 = rng.gaussianMatrix(n1, r) * rng.gaussianMatrix(n2, r).transpose();
    const SvdFactors f = svd(s.x0);
    Matrix w = Matrix::Zero(n1 - r, n2 - r);
    if (n1 - r > 0) {
        w = rng.gaussianMatrix(n1 - r, n2 - r);
        w /= 2.0 * (spectralNorm(w) + 1e-9);
        const SvdFactors fw = svd(w);
        Vector sig = fw.sigma;
        for (Eigen::Index i = 0; i < extra && i < sig.size(); ++i) sig[i] = 1.0;
        Matrix d = Matrix::Zero(n1 - r, n2 - r);
        for (Eigen::Index i = 0; i < sig.size(); ++i) d(i, i) = sig[i];
        w = fw.U * d * fw.V.transpose();
    }
    Matrix inner = Matrix::Zero(n1, n2);
    inner.topLeftCorner(r, r).setIdentity();
    inner.bottomRightCorner(n1 - r, n2 - r) = w;
    s.y = f.U * inner * f.V.transpose();
    s.frame = simultaneousSvd(s.x0, s.y);
    s.p = pOf(s.y);
    EXPECT_EQ(s.p, r + extra);
    return s;
}

} // namespace

TEST(Norms, BasicValues) {
    EXPECT_NEAR(nuclearNorm(Matrix::Identity(2, 2)), 2.0, 1e-12);
    EXPECT_NEAR(spectralNorm(Matrix::Identity(2, 2)), 1.0, 1e-12);
    EXPECT_NEAR(nuclearNorm(fixtureX0()), 1.0, 1e-12);
}

TEST(Norms, NuclearDominatesSpectral) {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const Matrix x = rng.gaussianMatrix(4, 5);
        EXPECT_GE(nuclearNorm(x), spectralNorm(x) - 1e-12);
    }
    // equality exactly on rank <= 1 matrices
    const Matrix rank1 = rng.gaussianVector(4) * rng.gaussianVector(5).transpose();
    EXPECT_NEAR(nuclearNorm(rank1), spectralNorm(rank1), 1e-10);
    const Matrix full = rng.gaussianMatrix(4, 5);
    ASSERT_GT(rankTol(full, 1e-9), 1);
    EXPECT_GT(nuclearNorm(full), spectralNorm(full) + 1e-9);
}

TEST(SubdiffMembership, Examples) {
    EXPECT_TRUE(subdiffMembership(fixtureX0(), Matrix::Identity(2, 2)));
    // at zero the subdifferential is the unit spectral ball
    Rng rng(7);
    Matrix y = rng.gaussianMatrix(3, 3);
    y /= spectralNorm(y) + 1.0;
    EXPECT_TRUE(subdiffMembership(Matrix::Zero(3, 3), y));
    Matrix bad(2, 2);
    bad << 1, 0, 0, -1;
    EXPECT_FALSE(subdiffMembership(Matrix::Identity(2, 2), bad));
}

TEST(SubdiffMembership, FormulaBuiltPassesScaledFails) {
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        const Matrix x0 = rng.gaussianMatrix(4, 2) * rng.gaussianMatrix(5, 2).transpose();
        const SvdFactors f = svd(x0);
        Matrix w = rng.gaussianMatrix(2, 3);
        w /= spectralNorm(w) + 1e-6;
        Matrix inner = Matrix::Zero(4, 5);
        inner.topLeftCorner(2, 2).setIdentity();
        inner.bottomRightCorner(2, 3) = w;
        const Matrix y = f.U * inner * f.V.transpose();
        EXPECT_TRUE(subdiffMembership(x0, y));
        EXPECT_FALSE(subdiffMembership(x0, 1.5 * y));
    }
}

TEST(POf, Cases) {
    EXPECT_EQ(pOf(Matrix::Identity(2, 2)), 2);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 0.5;
    EXPECT_EQ(pOf(d), 1);
    EXPECT_EQ(pOf(Matrix::Zero(2, 2)), 0);
    Matrix big = 2.0 * Matrix::Identity(2, 2);
    EXPECT_THROW(pOf(big), PreconditionViolation);
}

TEST(RadialMembership, FixtureCone) {
    // cone elements at the fixture look like [a bc; bc c] with c >= 0
    const Matrix x0 = fixtureX0();
    const Matrix y = Matrix::Identity(2, 2);
    for (double a : {-1.0, 0.3}) {
        for (double b : {-0.7, 1.2}) {
            for (double c : {0.0, 0.5, 2.0}) {
                Matrix w(2, 2);
                w << a, b * c, b * c, c;
                EXPECT_TRUE(radialMembership(x0, y, w))
                    << "a=" << a << " b=" << b << " c=" << c;
                EXPECT_TRUE(tangentMembership(x0, y, w));
            }
        }
    }
    EXPECT_TRUE(radialMembership(x0, y, Matrix::Zero(2, 2)));
}

TEST(RadialMembership, CounterexampleDirectionFailsRadialPassesTangent) {
    // off-diagonal limit direction: in the tangent cone, not in the radial
    const Matrix x0 = fixtureX0();
    const Matrix y = Matrix::Identity(2, 2);
    Matrix w(2, 2);
    w << 0, 1, 1, 0;
    EXPECT_FALSE(radialMembership(x0, y, w));
    EXPECT_TRUE(tangentMembership(x0, y, w));
}

TEST(TangentMembership, NegativeCurvatureFails) {
    const Matrix x0 = fixtureX0();
    const Matrix y = Matrix::Identity(2, 2);
    Matrix w(2, 2);
    w << 0.5, 0, 0, -0.1;  // C block has a negative eigenvalue
    EXPECT_FALSE(tangentMembership(x0, y, w));
    EXPECT_FALSE(radialMembership(x0, y, w));
}

TEST(ConeSampling, RadialSamplesPassBothTests) {
    Rng rng(11);
    int checked = 0;
    for (int t = 0; t < 60; ++t) {
        Scene s = makeScene(5, 6, 2, 2, rng);
        for (int k = 0; k < 20; ++k) {
            const ConeElement e = sampleRadialElement(s.frame, s.r, s.p, rng);
            const Matrix w = e.compose(s.n1, s.n2);
            EXPECT_TRUE(radialMembership(s.x0, s.y, w));
            EXPECT_TRUE(tangentMembership(s.x0, s.y, w));
            ++checked;
        }
    }
    EXPECT_GE(checked, 1000);
}

TEST(ConeSampling, HomogeneityOfMembership) {
    Rng rng(13);
    Scene s = makeScene(5, 6, 2, 2, rng);
    for (int k = 0; k < 25; ++k) {
        const ConeElement e = sampleRadialElement(s.frame, s.r, s.p, rng);
        const Matrix w = e.compose(s.n1, s.n2);
        for (double lam : {0.5, 2.0, 10.0}) {
            EXPECT_TRUE(radialMembership(s.x0, s.y, lam * w));
            EXPECT_TRUE(tangentMembership(s.x0, s.y, lam * w));
        }
    }
}

TEST(ConeSampling, DegenerateCaseTestsAgree) {
    // p = r: radial and tangent agree on arbitrary (member or not) inputs
    Rng rng(17);
    Scene s = makeScene(5, 6, 2, 0, rng);
    ASSERT_EQ(s.p, s.r);
    for (int k = 0; k < 1000; ++k) {
        Matrix w = rng.gaussianMatrix(5, 6);
        if (k % 3 == 0) {
            // make some draws members so both branches get exercised
            Matrix inner = Matrix::Zero(5, 6);
            Matrix a = rng.gaussianMatrix(2, 2);
            inner.topLeftCorner(2, 2) = a + a.transpose();
            w = s.frame.U * inner * s.frame.V.transpose();
        }
        EXPECT_EQ(radialMembership(s.x0, s.y, w), tangentMembership(s.x0, s.y, w));
    }
}

TEST(RadialMembership, ImpliesFiniteStepIntoConjugateSubdifferential) {
    // Schur-complement oracle: X0 + tW stays in the conjugate subdifferential
    // for some positive t found by bisection
    Rng rng(19);
    Scene s = makeScene(5, 6, 2, 2, rng);
    const Vector sx = singularValues(s.x0);
    for (int k = 0; k < 50; ++k) {
        const ConeElement e = sampleRadialElement(s.frame, s.r, s.p, rng);
        const Matrix w = e.compose(s.n1, s.n2);
        ASSERT_TRUE(radialMembership(s.x0, s.y, w));
        // blocks of X0 + tW inside the leading p x p window
        bool found = false;
        double t = 1.0;
        for (int step = 0; step < 60 && !found; ++step, t *= 0.5) {
            Matrix blocks = Matrix::Zero(s.p, s.p);
            blocks.topLeftCorner(s.r, s.r) = Matrix(sx.head(s.r).asDiagonal());
            const Matrix m = s.frame.U.transpose() * (t * w) * s.frame.V;
            blocks += m.topLeftCorner(s.p, s.p);
            if (minEigenvalue(blocks) >= -1e-10) found = true;
        }
        EXPECT_TRUE(found);
    }
}

TEST(DirDerivative, FixtureValues) {
    const Matrix x0 = fixtureX0();
    EXPECT_NEAR(dirDerivative(x0, Matrix::Identity(2, 2)), 2.0, 1e-10);
    EXPECT_NEAR(dirDerivative(x0, x0), 1.0, 1e-10);
    EXPECT_NEAR(dirDerivative(x0, -x0), -1.0, 1e-10);
}

TEST(DirDerivative, MatchesNumericalLimit) {
    Rng rng(23);
    for (int t = 0; t < 25; ++t) {
        const Matrix x0 = rng.gaussianMatrix(4, 5);
        const Matrix w = rng.gaussianMatrix(4, 5);
        const double lhs = dirDerivative(x0, w);
        const double h = 1e-6;
        const double rhs = (nuclearNorm(x0 + h * w) - nuclearNorm(x0)) / h;
        EXPECT_NEAR(lhs, rhs, 1e-4);
    }
}

TEST(ModelTangentBasis, Dimensions) {
    EXPECT_EQ(modelTangentBasis(fixtureX0()).dimension, 3);
    Rng rng(29);
    const Matrix full = rng.gaussianMatrix(3, 3);
    ASSERT_EQ(rankTol(full, 1e-9), 3);
    EXPECT_EQ(modelTangentBasis(full).dimension, 9);
    EXPECT_EQ(modelTangentBasis(Matrix::Zero(3, 4)).dimension, 0);
}

TEST(ModelTangentBasis, Orthonormal) {
    Rng rng(31);
    const Matrix x0 = rng.gaussianMatrix(4, 2) * rng.gaussianMatrix(4, 2).transpose();
    const SubspaceBasis basis = modelTangentBasis(x0);
    EXPECT_EQ(basis.dimension, 2 * (4 + 4 - 2));
    for (size_t i = 0; i < basis.basis.size(); ++i)
        for (size_t j = i; j < basis.basis.size(); ++j) {
            const double ip = (basis.basis[i].array() * basis.basis[j].array()).sum();
            EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-10);
        }
}

TEST(SampleDescent, ReturnsVerifiedDirections) {
    Rng rng(37);
    const Matrix x0 = rng.gaussianMatrix(4, 2) * rng.gaussianMatrix(5, 2).transpose();
    const double nuc = nuclearNorm(x0);
    for (int k = 0; k < 40; ++k) {
        const Matrix w = sampleDescent(x0, rng);
        EXPECT_GT(frob(w), 1e-9);
        bool descent = false;
        double t = frob(x0) / std::max(1.0, frob(w));
        for (int step = 0; step < 80 && !descent; ++step, t *= 0.5)
            if (nuclearNorm(x0 + t * w) <= nuc * (1.0 + 1e-10) + 1e-12)
                descent = true;
        EXPECT_TRUE(descent);
    }
}

TEST(SriRiChecks, FixtureValues) {
    // measurements (X11 + X22, X12 - X21 + X22)
    Matrix phi(2, 4);
    phi << 1, 0, 0, 1,
           0, -1, 1, 1;
    const Matrix x0 = fixtureX0();
    EXPECT_TRUE(sriCheck(phi, x0));
    EXPECT_FALSE(riCheck(phi, x0));
}

TEST(SriRiChecks, DimensionBounds) {
    Rng rng(41);
    const int n = 5;
    for (int r = 1; r <= 3; ++r) {
        const Matrix x0 =
            rng.gaussianMatrix(n, r) * rng.gaussianMatrix(n, r).transpose();
        const int sriDim = r * (r + 1) / 2;
        const int riDim = r * (2 * n - r);
        for (int m = 1; m < sriDim; ++m) {
            const Matrix phi = rng.gaussianMatrix(m, n * n);
            EXPECT_FALSE(sriCheck(phi, x0));
        }
        {
            const Matrix phi = rng.gaussianMatrix(riDim - 1, n * n);
            EXPECT_FALSE(riCheck(phi, x0));
        }
        {
            // enough generic measurements succeed with overwhelming probability
            const Matrix phi = rng.gaussianMatrix(sriDim + 3, n * n);
            EXPECT_TRUE(sriCheck(phi, x0));
        }
    }
    // full measurements: both hold
    const Matrix x0 = rng.gaussianMatrix(n, 2) * rng.gaussianMatrix(n, 2).transpose();
    EXPECT_TRUE(riCheck(Matrix::Identity(n * n, n * n), x0));
    EXPECT_TRUE(sriCheck(Matrix::Identity(n * n, n * n), x0));
}

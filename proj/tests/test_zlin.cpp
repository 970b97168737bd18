#include "rkcq/zlin.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rkcq;
using zlin::ComplexMatrix;
using zlin::RealMatrix;

namespace {

RealMatrix random_matrix(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    RealMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a(i, j) = nd(rng);
        }
    }
    return a;
}

} // namespace

TEST(Matrix, RejectsBadShapesAndNonFinite)
{
    EXPECT_THROW(RealMatrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
    EXPECT_THROW(RealMatrix(1, 1, std::vector<double>{std::nan("")}), std::invalid_argument);
    EXPECT_THROW((RealMatrix{{1.0, 2.0}, {3.0}}), std::invalid_argument);
    EXPECT_THROW(RealMatrix(2, 3) * RealMatrix(2, 3), std::invalid_argument);
}

TEST(Lu, SolvesAgainstKnownInverse)
{
    // [[4, 7], [2, 6]]^{-1} = [[0.6, -0.7], [-0.2, 0.4]]
    const RealMatrix a{{4.0, 7.0}, {2.0, 6.0}};
    const RealMatrix inv = zlin::inverse(a);
    EXPECT_NEAR(inv(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(inv(0, 1), -0.7, 1e-15);
    EXPECT_NEAR(inv(1, 0), -0.2, 1e-15);
    EXPECT_NEAR(inv(1, 1), 0.4, 1e-15);
}

TEST(Lu, RandomResidualsAreSmall)
{
    std::mt19937_64 rng(7);
    for (std::size_t n : {1u, 3u, 8u, 20u}) {
        const RealMatrix a = random_matrix(n, rng);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(i) - 1.5;
        }
        const std::vector<double> b = a * x;
        const std::vector<double> y = zlin::solve(a, b);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(y[i], x[i], 1e-10);
        }
    }
}

TEST(Lu, SingularMatrixThrows)
{
    const RealMatrix a{{1.0, 2.0}, {2.0, 4.0}};
    EXPECT_THROW(zlin::inverse(a), zlin::SingularMatrixError);
}

TEST(Eig, CompanionMatrixRecoversRoots)
{
    // roots 1, 2, 3, 4: x^4 - 10x^3 + 35x^2 - 50x + 24
    const ComplexMatrix c{{10.0, -35.0, 50.0, -24.0}, {1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}};
    const auto ed = zlin::eig(c);
    ASSERT_EQ(ed.values.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(ed.values[i].real(), static_cast<double>(i + 1), 1e-10);
        EXPECT_NEAR(ed.values[i].imag(), 0.0, 1e-10);
    }
}

TEST(Eig, RotationHasConjugatePair)
{
    const double th = 0.3;
    const ComplexMatrix r{{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}};
    const auto ed = zlin::eig(r);
    EXPECT_NEAR(ed.values[0].real(), std::cos(th), 1e-14);
    EXPECT_NEAR(std::abs(ed.values[0].imag()), std::sin(th), 1e-14);
    EXPECT_NEAR(ed.values[0].imag(), -ed.values[1].imag(), 1e-14);
}

TEST(Eig, EigenpairsSatisfyDefinition)
{
    std::mt19937_64 rng(11);
    for (std::size_t n : {2u, 5u, 8u, 12u}) {
        const ComplexMatrix a = zlin::to_complex(random_matrix(n, rng));
        const auto ed = zlin::eig(a);
        const ComplexMatrix av = a * ed.vectors;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                EXPECT_LT(std::abs(av(i, j) - ed.values[j] * ed.vectors(i, j)), 1e-10 * zlin::frobenius_norm(a));
            }
        }
        EXPECT_GE(ed.cond_estimate, 1.0);
    }
}

TEST(Eig, DefectiveJordanBlockIsRejected)
{
    const ComplexMatrix j{{1.0, 1.0}, {0.0, 1.0}};
    EXPECT_THROW(zlin::eig(j, 1e8), zlin::EigenError);
}

TEST(SpectralNorm, MatchesSingularValueOracle)
{
    // [[3, 0], [4, 5]] has singular values sqrt(45) and sqrt(5)
    const RealMatrix a{{3.0, 0.0}, {4.0, 5.0}};
    EXPECT_NEAR(zlin::spectral_norm(a), std::sqrt(45.0), 1e-13);
    const ComplexMatrix c = zlin::to_complex(a);
    EXPECT_NEAR(zlin::spectral_norm(c), std::sqrt(45.0), 1e-13);
}

TEST(SymmetricEigenvalues, DiscreteLaplacianClosedForm)
{
    const std::size_t n = 9;
    RealMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 2.0;
        if (i + 1 < n) {
            a(i, i + 1) = -1.0;
            a(i + 1, i) = -1.0;
        }
    }
    const auto ev = zlin::symmetric_eigenvalues(a);
    for (std::size_t j = 1; j <= n; ++j) {
        const double expect = 4.0 * std::pow(std::sin(j * std::numbers::pi / (2.0 * (n + 1))), 2);
        EXPECT_NEAR(ev[j - 1], expect, 1e-13);
    }
}

TEST(Fft, MatchesDirectDft)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t n = 64;
    std::vector<cplx> x(n);
    for (auto& v : x) {
        v = cplx(nd(rng), nd(rng));
    }
    const std::vector<cplx> y = zlin::fft(x, zlin::FftDirection::forward);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k) / n);
        }
        EXPECT_LT(std::abs(acc - y[k]), 1e-12);
    }
    const std::vector<cplx> back = zlin::fft(y, zlin::FftDirection::inverse);
    for (std::size_t j = 0; j < n; ++j) {
        EXPECT_LT(std::abs(back[j] - x[j]), 1e-14);
    }
}

TEST(Fft, RejectsNonPowerOfTwo)
{
    std::vector<cplx> x(12);
    EXPECT_THROW(zlin::fft_in_place(x, zlin::FftDirection::forward), std::invalid_argument);
    EXPECT_EQ(zlin::next_power_of_two(1025), 2048u);
    EXPECT_TRUE(zlin::is_power_of_two(1));
    EXPECT_FALSE(zlin::is_power_of_two(0));
}

#include "rkcq/heat_sphere.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rkcq;

namespace {

void expect_rel(cplx got, cplx want, double tol)
{
    EXPECT_LE(std::abs(got - want), tol * std::abs(want)) << "got " << got << " want " << want;
}

} // namespace

// Reference values from tests/oracles/spherical_functions.py (mpmath, 40 digits)
TEST(SphericalBessel, MatchesHighPrecisionOracle)
{
    expect_rel(spherical_bessel_j(0, 1.0), 0.84147098480789651, 1e-14);
    expect_rel(spherical_bessel_j(2, cplx(0.0, 1.0)), -0.071562870129474492, 1e-13);
    expect_rel(spherical_bessel_j(3, cplx(0.3, 0.2)), cplx(-8.2560914161973662e-5, 0.00043744186754270734), 1e-12);
    expect_rel(spherical_bessel_j(5, cplx(2.0, -1.0)), cplx(-0.0026727447719204118, -0.0039814394887741504), 1e-11);
    expect_rel(spherical_bessel_j(10, cplx(0.5, 3.0)), cplx(8.5933397628727364e-7, 5.8872582827865435e-6), 1e-10);
    expect_rel(spherical_bessel_j(10, cplx(25.0, 4.0)), cplx(-0.63108086880375947, 0.47229778562323609), 1e-10);
    expect_rel(spherical_bessel_j(1, 1e-3), 0.0003333333000000012, 1e-14);
}

TEST(SphericalBessel, ValueAtOrigin)
{
    EXPECT_EQ(spherical_bessel_j(0, 0.0), cplx(1.0));
    EXPECT_EQ(spherical_bessel_j(4, 0.0), cplx(0.0));
    EXPECT_THROW(spherical_bessel_j(11, 1.0), std::invalid_argument);
    EXPECT_THROW(spherical_bessel_j(-1, 1.0), std::invalid_argument);
}

TEST(SphericalHankel, MatchesHighPrecisionOracle)
{
    expect_rel(spherical_hankel_h1(0, cplx(0.0, 1.0)), -std::exp(-1.0), 1e-15);
    expect_rel(spherical_hankel_h1(2, cplx(0.0, 1.0)), 2.5751560882000963, 1e-14);
    expect_rel(spherical_hankel_h1(0, 1.0), cplx(0.84147098480789651, -0.54030230586813972), 1e-14);
    expect_rel(spherical_hankel_h1(3, cplx(0.3, 0.2)), cplx(-640.87853541873687, 620.41461215248745), 1e-12);
    expect_rel(spherical_hankel_h1(5, cplx(2.0, -1.0)), cplx(4.9588894672822941, 7.3644201038298374), 1e-12);
    expect_rel(spherical_hankel_h1(10, cplx(25.0, 4.0)), cplx(-0.0010343961027941452, -0.0003131974696653083), 1e-10);
    EXPECT_THROW(spherical_hankel_h1(1, 0.0), std::domain_error);
}

TEST(SphericalHankel, DecayAlongImaginaryAxis)
{
    for (double y : {1.0, 10.0, 100.0, 500.0}) {
        const cplx h = spherical_hankel_h1(0, cplx(0.0, y));
        EXPECT_NEAR(std::abs(h), std::exp(-y) / y, 1e-10 * std::exp(-y) / y);
    }
}

TEST(SphericalFunctions, WronskianIdentity)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> re(0.2, 15.0);
    std::uniform_real_distribution<double> im(-3.0, 3.0);
    std::uniform_int_distribution<int> deg(0, 9);
    for (int s = 0; s < 20; ++s) {
        const cplx z(re(rng), im(rng));
        const int n = deg(rng);
        const cplx w = spherical_bessel_j(n, z) * spherical_hankel_h1_derivative(n, z) -
                       spherical_bessel_j_derivative(n, z) * spherical_hankel_h1(n, z);
        const cplx expect = cplx(0.0, 1.0) / (z * z);
        EXPECT_LE(std::abs(w - expect), 1e-9 * std::abs(expect)) << "n=" << n << " z=" << z;
    }
}

TEST(Mu, ClosedFormForDegreeZero)
{
    for (double kappa : {1e-6, 0.01, 1.0, 7.5, 40.0, 800.0}) {
        const double expect = -std::expm1(-2.0 * kappa) / (2.0 * kappa);
        expect_rel(mu_n(0, kappa), expect, 1e-13);
    }
    EXPECT_NEAR(mu_n(0, 1.0).real(), 0.43233235838169365, 1e-15);
}

TEST(Mu, MatchesHighPrecisionOracle)
{
    expect_rel(mu_n(2, cplx(1.0, 1.0)), cplx(0.18945421037762378, -0.031056869426525901), 1e-13);
    expect_rel(mu_n(4, cplx(0.01, 0.02)), cplx(0.11111197690265175, -1.1544331228671872e-6), 1e-13);
    expect_rel(mu_n(7, cplx(30.0, -5.0)), cplx(0.015792795074852032, 0.0024812693960963468), 1e-12);
    expect_rel(mu_n(2, cplx(3.0, 40.0)), cplx(0.00090616564486713739, -0.012453923747811364), 1e-11);
}

TEST(Mu, SmallArgumentLimitAndZeroError)
{
    for (int n = 0; n <= 10; ++n) {
        EXPECT_NEAR(mu_n(n, 1e-7).real(), 1.0 / (2 * n + 1), 1e-6);
    }
    EXPECT_THROW(mu_n(2, 0.0), std::domain_error);
}

// Re mu_n(s) > 0 does not hold on the whole half-plane (checked with mpmath);
// it holds on |arg s| < pi/4, which is where sqrt(s) lands for Re s > 0.
TEST(Mu, ConjugateSymmetryAndPositiveRealPartOnHeatSector)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> re(0.01, 50.0);
    std::uniform_real_distribution<double> im(-50.0, 50.0);
    for (int s = 0; s < 200; ++s) {
        const cplx z(re(rng), im(rng));
        for (int n : {0, 2, 5}) {
            const cplx a = mu_n(n, z);
            EXPECT_LE(std::abs(mu_n(n, std::conj(z)) - std::conj(a)), 1e-12 * std::abs(a));
            EXPECT_GT(mu_n(n, std::sqrt(z)).real(), 0.0);
        }
    }
}

TEST(HeatDensity, ZeroProfileGivesZeroDensity)
{
    HeatExperimentConfig cfg;
    cfg.psi = [](double) { return 0.0; };
    const StageSequence d = solve_heat_density(cfg, 0.25);
    EXPECT_EQ(d.max_abs_stage(), 0.0);
}

TEST(HeatDensity, SymbolRoundTripAndReality)
{
    HeatExperimentConfig cfg;
    cfg.tableau = builtin_tableau("radau_iia_3");
    const double k = 6.0 / 64;
    CqDiagnostics diag;
    const StageSequence lambda = solve_heat_density(cfg, k, &diag);
    EXPECT_LT(diag.max_imaginary, 1e-9);
    const CqContext ctx = CqContext::make(cfg.tableau, k, 64);
    const StageSequence g = apply_transfer_function(
        ctx, TransferFunction::from([](cplx s) { return mu_n(2, std::sqrt(s)); }), lambda);
    const StageSequence psi = StageSequence::sample_scalar(cfg.tableau, k, 64, cfg.psi);
    EXPECT_LT(max_stage_difference(g, psi), 1e-7 * std::max(1.0, psi.max_abs_stage()));
}

TEST(HeatDensity, RejectsProfilesThatDoNotVanish)
{
    HeatExperimentConfig cfg;
    cfg.tableau = builtin_tableau("radau_iia_5");
    cfg.psi = [](double t) { return std::pow(t, 6); };
    EXPECT_THROW(solve_heat_density(cfg, 0.1), std::invalid_argument);
    cfg.psi = default_heat_profile;
    EXPECT_THROW(solve_heat_density(cfg, 0.7), std::invalid_argument); // does not divide T
}

TEST(HeatConvergence, BackwardEulerIsFirstOrder)
{
    HeatExperimentConfig cfg;
    cfg.tableau = builtin_tableau("radau_iia_1");
    cfg.psi = [](double t) { return std::pow(t, 4) * std::exp(-2.0 * t); };
    cfg.ks = HeatExperimentConfig::steps_from_levels(6.0, {32, 64, 128, 256});
    const ConvergenceReport rep = run_heat_convergence(cfg);
    EXPECT_NEAR(*rep.median_tail_eoc(), 1.0, 0.1);
    EXPECT_TRUE(rep.errors_strictly_decreasing());
    EXPECT_EQ(rep.metadata.at("degree"), "2");
}

TEST(HeatConvergence, RoundoffFloorLevelsAreExcluded)
{
    HeatExperimentConfig cfg;
    cfg.tableau = builtin_tableau("radau_iia_5");
    cfg.ks = HeatExperimentConfig::steps_from_levels(6.0, {32, 64});
    cfg.roundoff_floor = 1e-3; // both levels sit below this artificial floor
    const ConvergenceReport rep = run_heat_convergence(cfg);
    EXPECT_TRUE(rep.levels[1].excluded);
    EXPECT_FALSE(rep.median_tail_eoc().has_value());
}

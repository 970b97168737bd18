#include "rkcq/semigroup_lab.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rkcq;

TEST(HeatTestbed, InvariantsHold)
{
    for (std::size_t n : {3u, 10u, 40u}) {
        const ConstrainedOperator op = heat_fd_testbed(n);
        const OperatorInvariants inv = check_invariants(op);
        const double scale = 4.0 * (n + 1.0) * (n + 1.0);
        EXPECT_EQ(inv.right_inverse_defect, 0.0);
        EXPECT_LE(inv.lifting_defect, 1e-15 * scale);
        EXPECT_EQ(inv.kernel_defect, 0.0);
        EXPECT_LE(inv.max_symmetric_eigenvalue, 0.0);
    }
    EXPECT_THROW(heat_fd_testbed(2), std::invalid_argument);
}

TEST(HeatTestbed, DirichletEigenvaluesMatchClosedForm)
{
    const std::size_t n = 12;
    const double h = heat_fd_spacing(n);
    const auto ev = zlin::symmetric_eigenvalues(heat_fd_testbed(n).restricted_generator());
    std::vector<double> expect;
    for (std::size_t j = 1; j <= n; ++j) {
        expect.push_back(-4.0 / (h * h) * std::pow(std::sin(j * std::numbers::pi * h / 2.0), 2));
    }
    std::sort(expect.begin(), expect.end());
    for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(ev[j], expect[j], 1e-10 * std::abs(expect[j]));
    }
}

TEST(HeatTestbed, LiftingOfUnitDataIsSymmetricAndBounded)
{
    const std::size_t n = 15;
    const ConstrainedOperator op = heat_fd_testbed(n);
    const Vector v = op.lifting * Vector{1.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_GT(v[i], 0.0);
        EXPECT_LE(v[i], 1.0);
        EXPECT_NEAR(v[i], v[n - 1 - i], 1e-14);
    }
    // continuous oracle: cosh(x - 1/2) / cosh(1/2), close for fine grids
    const double h = heat_fd_spacing(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (i + 1.0) * h;
        EXPECT_NEAR(v[i], std::cosh(x - 0.5) / std::cosh(0.5), 1e-3);
    }
}

TEST(Stepper, ZeroDataGivesZeroTrajectory)
{
    EvolutionProblem p = boundary_driven_heat_problem(8, 1.0);
    p.constraint_data = [](double) { return Vector{0.0, 0.0}; };
    const StageSequence run = rk_step_constrained(p, builtin_tableau("radau_iia_3"), 0.1, 10);
    EXPECT_EQ(run.max_abs_stage(), 0.0);
    EXPECT_EQ(run.max_abs_step(), 0.0);
}

TEST(Stepper, ScalarStepIsStabilityFunction)
{
    const double a = -3.0;
    const double k = 0.2;
    EvolutionProblem p;
    p.op = ConstrainedOperator::unconstrained(zlin::RealMatrix{{a}});
    p.volume_data = [](double) { return Vector{0.0}; };
    p.constraint_data = [](double) { return Vector{}; };
    p.u0 = {1.5};
    for (auto name : builtin_tableau_names) {
        const ButcherTableau t = builtin_tableau(name);
        const StageSequence run = rk_step_constrained(p, t, k, 1);
        EXPECT_NEAR(run.step(1)[0], stability_function(t, k * a).real() * 1.5, 1e-14) << name;
    }
}

TEST(Stepper, ManufacturedSolutionConverges)
{
    const double T = 1.0;
    const EvolutionProblem p = manufactured_heat_problem(20, T);
    const ButcherTableau t = builtin_tableau("radau_iia_3");
    double prev = 0.0;
    for (std::size_t n : {20u, 40u, 80u}) {
        StepperDiagnostics diag;
        const StageSequence run = rk_step_constrained(p, t, T / n, n, &diag);
        EXPECT_LT(diag.max_stage_residual, 1e-11 * std::max(1.0, diag.data_scale));
        EXPECT_EQ(diag.max_constraint_residual, 0.0);
        double err = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            const Vector ex = p.exact(j * T / n);
            double s = 0.0;
            for (std::size_t c = 0; c < ex.size(); ++c) {
                s += std::pow(run.step(j)[c] - ex[c], 2);
            }
            err = std::max(err, std::sqrt(s) * p.norm_weight);
        }
        if (prev > 0.0) {
            const double eoc = std::log2(prev / err);
            EXPECT_GT(eoc, 3.5);
            EXPECT_LT(eoc, 5.3);
        }
        prev = err;
    }
}

TEST(Stepper, ClassicalAndRInfinityStepUpdatesAgree)
{
    const EvolutionProblem p = manufactured_heat_problem(16, 2.0);
    for (auto name : {"radau_iia_2", "gauss_2", "lobatto_iiic_2"}) {
        const ButcherTableau t = builtin_tableau(name);
        const double k = 0.05;
        const StageSequence run = rk_step_constrained(p, t, k, 40);
        const StageSequence classical = classical_step_update(p, t, k, run);
        double scale = std::max(1.0, run.max_abs_step());
        for (std::size_t n = 0; n <= 40; ++n) {
            for (std::size_t idx : p.op.domain_indices) {
                EXPECT_NEAR(run.step(n)[idx], classical.step(n)[idx], 1e-11 * scale) << name;
            }
        }
    }
}

TEST(Stepper, DerivativeOfStagesMatchesVectorField)
{
    // V = k^{-1} Q^{-1}(U - 1 u_n) equals A_star U + F on the domain rows
    const EvolutionProblem p = manufactured_heat_problem(10, 1.0);
    const ButcherTableau t = builtin_tableau("radau_iia_3");
    const double k = 0.05;
    const StageSequence run = rk_step_constrained(p, t, k, 20);
    const StageSequence v = discrete_derivative(CqContext::make(t, k, 20), run);
    for (std::size_t n = 0; n < 20; ++n) {
        for (std::size_t i = 0; i < t.stages(); ++i) {
            const Vector au = p.op.a_star * run.stage(n, i);
            const Vector f = p.volume_data(n * k + k * t.c()[i]);
            for (std::size_t idx : p.op.domain_indices) {
                EXPECT_NEAR(v.stage(n, i)[idx], au[idx] + f[idx], 1e-8 * std::max(1.0, std::abs(au[idx])));
            }
        }
    }
}

TEST(Stepper, ShapeErrors)
{
    EvolutionProblem p = manufactured_heat_problem(5, 1.0);
    p.u0 = {0.0};
    EXPECT_THROW(rk_step_constrained(p, builtin_tableau("radau_iia_1"), 0.1, 2), std::invalid_argument);
    p = manufactured_heat_problem(5, 1.0);
    EXPECT_THROW(rk_step_constrained(p, builtin_tableau("radau_iia_1"), -0.1, 2), std::invalid_argument);
}

TEST(Quantities, ParseAndPrint)
{
    for (auto q : {Quantity::step, Quantity::integrated, Quantity::differentiated, Quantity::strong}) {
        EXPECT_EQ(parse_quantity(to_string(q)), q);
    }
    EXPECT_THROW(parse_quantity("energy"), std::invalid_argument);
}

TEST(Quantities, StrongEqualsAStarTimesStepWhenVolumeDataVanishes)
{
    const EvolutionProblem p = boundary_driven_heat_problem(12, 1.0);
    const ButcherTableau t = builtin_tableau("radau_iia_2");
    const double k = 0.05;
    const StageSequence run = rk_step_constrained(p, t, k, 20);
    const auto strong = tracked_quantity(p, t, k, run, Quantity::strong);
    const auto diff = tracked_quantity(p, t, k, run, Quantity::differentiated);
    for (std::size_t n = 1; n <= 20; ++n) {
        EXPECT_EQ(strong[n], diff[n]);
        const Vector au = p.op.a_star * run.step(n);
        for (std::size_t idx : p.op.domain_indices) {
            EXPECT_NEAR(strong[n][idx], au[idx], 1e-9 * std::max(1.0, std::abs(au[idx])));
        }
    }
}

TEST(Quantities, DifferentiatedRequiresStifflyAccurate)
{
    const EvolutionProblem p = manufactured_heat_problem(6, 1.0);
    EXPECT_THROW(measure_theorem_rates(p, builtin_tableau("gauss_2"), {0.1, 0.05}, Quantity::differentiated),
                 NotStifflyAccurateError);
}

TEST(Rates, IntegratedDoesNotLoseOrder)
{
    const EvolutionProblem p = manufactured_heat_problem(20, 2.0);
    const ButcherTableau t = builtin_tableau("radau_iia_2");
    const std::vector<double> ks{2.0 / 16, 2.0 / 32, 2.0 / 64, 2.0 / 128};
    const auto step = measure_theorem_rates(p, t, ks, Quantity::step);
    const auto integ = measure_theorem_rates(p, t, ks, Quantity::integrated);
    ASSERT_TRUE(step.valid) << step.invalid_reason;
    ASSERT_TRUE(integ.valid) << integ.invalid_reason;
    EXPECT_GE(*integ.median_tail_eoc(), *step.median_tail_eoc() - 0.1);
    EXPECT_EQ(step.eoc.size(), 3u);
}

TEST(Rates, LevelsMustDivideFinalTime)
{
    const EvolutionProblem p = manufactured_heat_problem(6, 1.0);
    EXPECT_THROW(measure_theorem_rates(p, builtin_tableau("radau_iia_2"), {0.3}, Quantity::step),
                 std::invalid_argument);
}

TEST(StageDefect, VanishesOnPolynomialsOfDegreeStageOrder)
{
    for (auto name : {"radau_iia_2", "radau_iia_3", "radau_iia_5"}) {
        const ButcherTableau t = builtin_tableau(name);
        const int q = t.stage_order();
        const auto y = [q](double s) { return Vector{std::pow(s, q), 1.0 + s}; };
        const auto dy = [q](double s) { return Vector{q * std::pow(s, q - 1), 1.0}; };
        EXPECT_LT(defect_norm(stage_defect(t, y, dy, 0.4, 0.1)), 1e-14) << name;
    }
}

TEST(StageDefect, LeadingConstantForNextPower)
{
    // y = t^{q+1} at t0 = 0: D = k^{q+1} (c^{q+1} - (q+1) Q c^q)
    const ButcherTableau t = builtin_tableau("radau_iia_2");
    const int q = t.stage_order();
    const double k = 0.1;
    const auto d = stage_defect(
        t, [q](double s) { return Vector{std::pow(s, q + 1)}; },
        [q](double s) { return Vector{(q + 1) * std::pow(s, q)}; }, 0.0, k);
    for (std::size_t i = 0; i < t.stages(); ++i) {
        double qc = 0.0;
        for (std::size_t j = 0; j < t.stages(); ++j) {
            qc += t.q()(i, j) * std::pow(t.c()[j], q);
        }
        const double expect = std::pow(k, q + 1) * (std::pow(t.c()[i], q + 1) - (q + 1) * qc);
        EXPECT_NEAR(d[i][0], expect, 1e-17);
    }
}

TEST(Contraction, SkewMatrixWithGaussIsUnitary)
{
    const zlin::RealMatrix s{{0.0, 2.0, -1.0}, {-2.0, 0.0, 0.5}, {1.0, -0.5, 0.0}};
    const zlin::RealMatrix r = stability_matrix(builtin_tableau("gauss_1"), s, 0.7);
    const zlin::RealMatrix rtr = r.transpose() * r;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(rtr(i, j), i == j ? 1.0 : 0.0, 1e-12);
        }
    }
    EXPECT_NEAR(contraction_diagnostics(builtin_tableau("gauss_1"), s, {0.7}).worst_norm, 1.0, 1e-12);
}

TEST(Contraction, BackwardEulerOnMinusIdentity)
{
    const zlin::RealMatrix a{{-1.0, 0.0}, {0.0, -1.0}};
    const zlin::RealMatrix r = stability_matrix(builtin_tableau("radau_iia_1"), a, 1.0);
    EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(r(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
    const auto rep = contraction_diagnostics(builtin_tableau("radau_iia_1"), a, {1.0}, 3.0);
    EXPECT_NEAR(rep.samples[0].norm, 0.5, 1e-15);
    EXPECT_EQ(rep.samples[0].powers, 3u);
}

TEST(Contraction, RandomDissipativeHasNonPositiveSymmetricPart)
{
    std::mt19937_64 rng(21);
    for (int i = 0; i < 20; ++i) {
        const zlin::RealMatrix a = random_dissipative(6, rng);
        zlin::RealMatrix sym = a + a.transpose();
        EXPECT_LE(zlin::symmetric_eigenvalues(sym).back(), 1e-12);
    }
}

#ifndef RKCQ_DIAGNOSTICS_HPP
#define RKCQ_DIAGNOSTICS_HPP

// Property checks on the discretization: delta spectrum, operational
// calculus pairing, CQ/stepping agreement, contraction, quadrature and
// stage-defect orders. Each returns raw measurements; thresholds are up to
// the caller.

#include "rkcq/convergence.hpp"
#include "rkcq/opcalc.hpp"
#include "rkcq/semigroup_lab.hpp"
#include "rkcq/tableau.hpp"
#include "rkcq/zlin.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace rkcq {

/// Uniform sample of the closed disk |z| <= radius.
template <class Rng>
cplx random_disk_point(Rng& rng, double radius)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = radius * std::sqrt(u(rng));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    return std::polar(r, phi);
}

struct DeltaSpectrumResult {
    std::string method;
    double min_real_eigenvalue = 0.0;
    std::size_t samples = 0;
};

/// min Re sigma(delta(z)) over random z in |z| <= radius.
inline DeltaSpectrumResult delta_spectrum(const ButcherTableau& t, std::size_t samples, double radius,
                                          std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    DeltaSpectrumResult r{t.name(), std::numeric_limits<double>::infinity(), samples};
    for (std::size_t s = 0; s < samples; ++s) {
        const cplx z = random_disk_point(rng, radius);
        for (const cplx& ev : zlin::eig(delta(t, z), std::numeric_limits<double>::infinity()).values) {
            r.min_real_eigenvalue = std::min(r.min_real_eigenvalue, ev.real());
        }
    }
    return r;
}

struct PairingResult {
    std::string method;
    double derivative_of_antiderivative = 0.0; ///< max |d(d^{-1} U) - U|
    double antiderivative_of_derivative = 0.0; ///< max |d^{-1}(d U) - U|
    std::optional<double> shortcut_vs_recurrence; ///< stiffly accurate methods only
};

/// Random stage sequence with step values generated by the r(inf) update,
/// so the sequence is consistent with the step post-processing.
template <class Rng>
StageSequence random_consistent_sequence(const ButcherTableau& t, std::size_t n_steps, std::size_t dim, Rng& rng)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    StageSequence u(n_steps, t.stages(), dim);
    for (std::size_t n = 0; n < n_steps; ++n) {
        for (std::size_t i = 0; i < t.stages(); ++i) {
            for (double& v : u.stage(n, i)) {
                v = nd(rng);
            }
        }
    }
    detail::postprocess_steps(t, u);
    return u;
}

inline double max_sequence_difference(const StageSequence& a, const StageSequence& b)
{
    return std::max(max_stage_difference(a, b), max_step_difference(a, b));
}

/// Operational-calculus pairing on a random sequence, and for stiffly
/// accurate methods the direct derivative formula against the recurrence on
/// stage samples of f (f(0) must vanish).
inline PairingResult operational_pairing(const ButcherTableau& t, std::size_t n_steps, double k, std::uint64_t seed,
                                         const std::function<double(double)>& f)
{
    std::mt19937_64 rng(seed);
    const CqContext ctx = CqContext::make(t, k, n_steps);
    const StageSequence u = random_consistent_sequence(t, n_steps, 2, rng);
    PairingResult r;
    r.method = t.name();
    r.derivative_of_antiderivative = max_sequence_difference(discrete_derivative(ctx, discrete_antiderivative(ctx, u)), u);
    r.antiderivative_of_derivative = max_sequence_difference(discrete_antiderivative(ctx, discrete_derivative(ctx, u)), u);
    if (is_stiffly_accurate(t)) {
        const StageSequence samples = StageSequence::sample_scalar(t, k, n_steps, f);
        const StageSequence rec = discrete_derivative(ctx, samples);
        const StageSequence direct =
            stiffly_accurate_derivative(ctx, 1, [&f](double time) { return std::vector<double>{f(time)}; });
        r.shortcut_vs_recurrence = max_sequence_difference(rec, direct);
    }
    return r;
}

struct CqEquivalenceResult {
    std::string method;
    double max_scalar_error = 0.0; ///< over all random scalar cases
    double matrix_error = 0.0;     ///< eigenbasis case
    std::size_t scalar_cases = 0;
    std::size_t fallback_frequencies = 0;
};

namespace detail {

// 2x2 real realization of y' = a y on (Re y, Im y).
inline zlin::RealMatrix complex_as_real(cplx a)
{
    return zlin::RealMatrix{{a.real(), -a.imag()}, {a.imag(), a.real()}};
}

} // namespace detail

/// (d^k - a)^{-1} g by the contour method against RK stepping of
/// y' = a y + g, y(0) = 0, for random a with Re a <= 0 and for one random
/// dissipative matrix handled componentwise in its eigenbasis.
inline CqEquivalenceResult cq_stepping_equivalence(const ButcherTableau& t, double k, std::size_t n_steps,
                                                   std::size_t scalar_cases, std::size_t matrix_dim,
                                                   std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> re(-5.0, 0.0);
    std::uniform_real_distribution<double> im(-5.0, 5.0);
    const CqContext ctx = CqContext::make(t, k, n_steps);
    const cplx gshape(1.0, 0.5);
    auto g_scalar = [gshape](double time) { return gshape * time * time * std::exp(-time) * std::cos(2.0 * time); };

    CqEquivalenceResult r;
    r.method = t.name();
    r.scalar_cases = scalar_cases;
    const ComplexStageSequence g = ComplexStageSequence::sample_scalar(t, k, n_steps, g_scalar);
    for (std::size_t c = 0; c < scalar_cases; ++c) {
        const cplx a(re(rng), im(rng));
        CqDiagnostics diag;
        const ComplexStageSequence y = apply_transfer_function(ctx, TransferFunction::resolvent(a), g, &diag);
        r.fallback_frequencies += diag.fallback_frequencies;

        EvolutionProblem prob;
        prob.op = ConstrainedOperator::unconstrained(detail::complex_as_real(a));
        prob.volume_data = [&g_scalar](double time) {
            const cplx v = g_scalar(time);
            return Vector{v.real(), v.imag()};
        };
        prob.constraint_data = [](double) { return Vector{}; };
        prob.u0 = {0.0, 0.0};
        const StageSequence step = rk_step_constrained(prob, t, k, n_steps);
        for (std::size_t n = 0; n < n_steps; ++n) {
            for (std::size_t i = 0; i < t.stages(); ++i) {
                const cplx ref(step.stage(n, i)[0], step.stage(n, i)[1]);
                r.max_scalar_error = std::max(r.max_scalar_error, std::abs(y.stage(n, i)[0] - ref));
            }
        }
        for (std::size_t n = 0; n <= n_steps; ++n) {
            const cplx ref(step.step(n)[0], step.step(n)[1]);
            r.max_scalar_error = std::max(r.max_scalar_error, std::abs(y.step(n)[0] - ref));
        }
    }

    if (matrix_dim > 0) {
        const zlin::RealMatrix a = random_dissipative(matrix_dim, rng);
        const zlin::EigenDecomposition ed = zlin::eig(zlin::to_complex(a));
        const zlin::LuFactorization<cplx> vlu(ed.vectors);
        auto g_vec = [matrix_dim](double time) {
            Vector v(matrix_dim);
            for (std::size_t c = 0; c < matrix_dim; ++c) {
                v[c] = std::pow(time, 2) * std::exp(-time) * std::sin(static_cast<double>(c + 1) * time);
            }
            return v;
        };
        // coordinates w = V^{-1} g, one scalar resolvent per eigenvalue
        const ComplexStageSequence w = ComplexStageSequence::sample(t, k, n_steps, matrix_dim, [&](double time) {
            const Vector gv = g_vec(time);
            std::vector<cplx> rhs(gv.begin(), gv.end());
            vlu.solve_in_place(rhs);
            return rhs;
        });
        ComplexStageSequence yw(n_steps, t.stages(), matrix_dim);
        for (std::size_t c = 0; c < matrix_dim; ++c) {
            ComplexStageSequence wc(n_steps, t.stages(), 1);
            for (std::size_t n = 0; n < n_steps; ++n) {
                for (std::size_t i = 0; i < t.stages(); ++i) {
                    wc.stage(n, i)[0] = w.stage(n, i)[c];
                }
            }
            for (std::size_t n = 0; n <= n_steps; ++n) {
                wc.step(n)[0] = w.step(n)[c];
            }
            CqDiagnostics diag;
            const ComplexStageSequence yc =
                apply_transfer_function(ctx, TransferFunction::resolvent(ed.values[c]), wc, &diag);
            r.fallback_frequencies += diag.fallback_frequencies;
            for (std::size_t n = 0; n < n_steps; ++n) {
                for (std::size_t i = 0; i < t.stages(); ++i) {
                    yw.stage(n, i)[c] = yc.stage(n, i)[0];
                }
            }
            for (std::size_t n = 0; n <= n_steps; ++n) {
                yw.step(n)[c] = yc.step(n)[0];
            }
        }

        EvolutionProblem prob;
        prob.op = ConstrainedOperator::unconstrained(a, true);
        prob.volume_data = g_vec;
        prob.constraint_data = [](double) { return Vector{}; };
        prob.u0.assign(matrix_dim, 0.0);
        const StageSequence step = rk_step_constrained(prob, t, k, n_steps);
        auto compare = [&](std::span<const cplx> coords, std::span<const double> ref) {
            const std::vector<cplx> y = ed.vectors * coords;
            for (std::size_t c = 0; c < matrix_dim; ++c) {
                r.matrix_error = std::max(r.matrix_error, std::abs(y[c] - ref[c]));
            }
        };
        for (std::size_t n = 0; n < n_steps; ++n) {
            for (std::size_t i = 0; i < t.stages(); ++i) {
                compare(yw.stage(n, i), step.stage(n, i));
            }
        }
        for (std::size_t n = 0; n <= n_steps; ++n) {
            compare(yw.step(n), step.step(n));
        }
    }
    return r;
}

struct ContractionSweepResult {
    std::string method;
    std::size_t matrices = 0;
    double worst_norm = 0.0;
    double worst_power_norm = 0.0;
};

/// contraction_diagnostics over random dissipative matrices of dimension
/// 2..max_dim.
inline ContractionSweepResult contraction_sweep(const ButcherTableau& t, std::size_t matrices, std::size_t max_dim,
                                                const std::vector<double>& ks, double horizon, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dims(2, std::max<std::size_t>(2, max_dim));
    ContractionSweepResult r{t.name(), matrices, 0.0, 0.0};
    for (std::size_t s = 0; s < matrices; ++s) {
        const zlin::RealMatrix a = random_dissipative(dims(rng), rng);
        const ContractionReport rep = contraction_diagnostics(t, a, ks, horizon);
        r.worst_norm = std::max(r.worst_norm, rep.worst_norm);
        r.worst_power_norm = std::max(r.worst_power_norm, rep.worst_power_norm);
    }
    return r;
}

/// Step error of the discrete antiderivative of stage samples of f against
/// the exact antiderivative, max over steps, one level per entry of
/// `levels` (k = T / level).
inline ConvergenceReport quadrature_order_study(const ButcherTableau& t, const std::function<double(double)>& f,
                                                const std::function<double(double)>& antiderivative,
                                                double final_time, const std::vector<int>& levels)
{
    ConvergenceReport rep;
    rep.experiment = "quadrature";
    rep.method = t.name();
    rep.quantity = "antiderivative";
    for (int level : levels) {
        const auto n_steps = static_cast<std::size_t>(level);
        const double k = final_time / static_cast<double>(level);
        const CqContext ctx = CqContext::make(t, k, n_steps);
        const StageSequence x = discrete_antiderivative(ctx, StageSequence::sample_scalar(t, k, n_steps, f));
        double err = 0.0;
        for (std::size_t n = 0; n <= n_steps; ++n) {
            err = std::max(err, std::abs(x.step(n)[0] - antiderivative(static_cast<double>(n) * k)));
        }
        rep.levels.push_back({k, err, false});
    }
    rep.compute_eoc();
    rep.metadata["T"] = format_real(final_time);
    return rep;
}

/// Norm of D^k(y; t0) for k = k0 / 2^j, j = 0..count-1, for scalar y.
inline ConvergenceReport stage_defect_study(const ButcherTableau& t, const std::function<double(double)>& y,
                                            const std::function<double(double)>& y_dot, double t0, double k0,
                                            std::size_t count)
{
    ConvergenceReport rep;
    rep.experiment = "stage_defect";
    rep.method = t.name();
    rep.quantity = "defect";
    double k = k0;
    for (std::size_t j = 0; j < count; ++j, k *= 0.5) {
        const auto d = stage_defect(
            t, [&y](double s) { return Vector{y(s)}; }, [&y_dot](double s) { return Vector{y_dot(s)}; }, t0, k);
        rep.levels.push_back({k, defect_norm(d), false});
    }
    rep.compute_eoc();
    rep.metadata["t0"] = format_real(t0);
    return rep;
}

} // namespace rkcq

#endif // RKCQ_DIAGNOSTICS_HPP

#ifndef RKCQ_OPCALC_HPP
#define RKCQ_OPCALC_HPP

// Runge-Kutta discrete operational calculus: the symbol delta(z), the
// discrete derivative / antiderivative recurrences, and F(d^k) applied to a
// stage sequence by evaluating the Z-transform on a scaled FFT contour.

#include "rkcq/parallel.hpp"
#include "rkcq/tableau.hpp"
#include "rkcq/zlin.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace rkcq {

/// Stage vectors U_n (n = 0..n_steps-1), each an m-tuple of d-vectors,
/// plus step values u_n (n = 0..n_steps).
template <class T>
class BasicStageSequence {
public:
    using value_type = T;

    BasicStageSequence() = default;

    BasicStageSequence(std::size_t n_steps, std::size_t stages, std::size_t dim)
        : n_steps_(n_steps), m_(stages), d_(dim), stages_(n_steps * stages * dim, T{}), steps_((n_steps + 1) * dim, T{})
    {
    }

    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t stages() const noexcept { return m_; }
    std::size_t dim() const noexcept { return d_; }

    std::span<T> stage(std::size_t n, std::size_t i) { return {stages_.data() + (n * m_ + i) * d_, d_}; }
    std::span<const T> stage(std::size_t n, std::size_t i) const { return {stages_.data() + (n * m_ + i) * d_, d_}; }
    std::span<T> step(std::size_t n) { return {steps_.data() + n * d_, d_}; }
    std::span<const T> step(std::size_t n) const { return {steps_.data() + n * d_, d_}; }

    std::span<const T> stage_data() const noexcept { return stages_; }
    std::span<const T> step_data() const noexcept { return steps_; }

    /// Stage samples f(t_n + k c_i); step values f(t_n) for n >= 1, u_0 = 0.
    template <class Fn>
    static BasicStageSequence sample(const ButcherTableau& t, double k, std::size_t n_steps, std::size_t dim, Fn&& f)
    {
        BasicStageSequence s(n_steps, t.stages(), dim);
        for (std::size_t n = 0; n < n_steps; ++n) {
            for (std::size_t i = 0; i < t.stages(); ++i) {
                assign(s.stage(n, i), f(static_cast<double>(n) * k + k * t.c()[i]));
            }
        }
        for (std::size_t n = 1; n <= n_steps; ++n) {
            assign(s.step(n), f(static_cast<double>(n) * k));
        }
        return s;
    }

    /// Scalar convenience overload of sample().
    template <class Fn>
    static BasicStageSequence sample_scalar(const ButcherTableau& t, double k, std::size_t n_steps, Fn&& f)
    {
        return sample(t, k, n_steps, 1, [&](double time) { return std::vector<T>{T(f(time))}; });
    }

    /// Largest absolute stage entry difference; shapes must agree.
    friend double max_stage_difference(const BasicStageSequence& a, const BasicStageSequence& b)
    {
        check_shape(a, b);
        double best = 0.0;
        for (std::size_t i = 0; i < a.stages_.size(); ++i) {
            best = std::max(best, std::abs(a.stages_[i] - b.stages_[i]));
        }
        return best;
    }

    friend double max_step_difference(const BasicStageSequence& a, const BasicStageSequence& b)
    {
        check_shape(a, b);
        double best = 0.0;
        for (std::size_t i = 0; i < a.steps_.size(); ++i) {
            best = std::max(best, std::abs(a.steps_[i] - b.steps_[i]));
        }
        return best;
    }

    double max_abs_stage() const
    {
        double best = 0.0;
        for (const T& v : stages_) {
            best = std::max(best, std::abs(v));
        }
        return best;
    }

    double max_abs_step() const
    {
        double best = 0.0;
        for (const T& v : steps_) {
            best = std::max(best, std::abs(v));
        }
        return best;
    }

private:
    template <class Vec>
    static void assign(std::span<T> dst, const Vec& src)
    {
        if constexpr (std::is_arithmetic_v<std::decay_t<Vec>> || std::is_same_v<std::decay_t<Vec>, cplx>) {
            dst[0] = T(src);
        } else {
            if (src.size() != dst.size()) {
                throw std::invalid_argument("StageSequence::sample: sample has wrong dimension");
            }
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }

    static void check_shape(const BasicStageSequence& a, const BasicStageSequence& b)
    {
        if (a.n_steps_ != b.n_steps_ || a.m_ != b.m_ || a.d_ != b.d_) {
            throw std::invalid_argument("StageSequence: shape mismatch");
        }
    }

    std::size_t n_steps_ = 0;
    std::size_t m_ = 0;
    std::size_t d_ = 0;
    std::vector<T> stages_;
    std::vector<T> steps_;
};

using StageSequence = BasicStageSequence<double>;
using ComplexStageSequence = BasicStageSequence<cplx>;

struct CqOptions {
    /// N is the next power of two >= oversampling * (n_steps + 1).
    std::size_t oversampling = 4;
    /// Contour radius lambda = eps_target^{1/(N + n_steps + 1)}: balances the
    /// aliased tail lambda^N against roundoff amplified by lambda^{-n_steps}.
    double eps_target = 1e-15;
    /// Eigenvector condition number above which a frequency falls back to
    /// direct resolvent solves.
    double cond_threshold = 1e8;
    /// Worker cap for the frequency loop (0 = serial).
    unsigned threads = configured_threads();
};

/// Everything needed to apply F(d^k): tableau, step size k, number of
/// steps, transform length N and contour radius lambda.
struct CqContext {
    ButcherTableau tableau;
    double k;
    std::size_t n_steps;
    std::size_t transform_length;
    double lambda;
    double cond_threshold = 1e8;
    unsigned threads = 0;

    static CqContext make(ButcherTableau t, double k, std::size_t n_steps, const CqOptions& opt = {})
    {
        if (!(k > 0.0)) {
            throw std::invalid_argument("CqContext: step size must be positive");
        }
        if (n_steps < 1) {
            throw std::invalid_argument("CqContext: need at least one step");
        }
        const std::size_t n = zlin::next_power_of_two(std::max<std::size_t>(opt.oversampling, 1) * (n_steps + 1));
        const double lambda = std::pow(opt.eps_target, 1.0 / static_cast<double>(n + n_steps + 1));
        CqContext ctx{std::move(t), k, n_steps, n, lambda, opt.cond_threshold, opt.threads};
        ctx.validate();
        return ctx;
    }

    void validate() const
    {
        if (!(k > 0.0)) {
            throw std::invalid_argument("CqContext: step size must be positive");
        }
        if (transform_length < n_steps + 1) {
            throw std::invalid_argument("CqContext: transform length " + std::to_string(transform_length) +
                                        " < n_steps + 1 = " + std::to_string(n_steps + 1));
        }
        if (!zlin::is_power_of_two(transform_length)) {
            throw std::invalid_argument("CqContext: transform length must be a power of two");
        }
        if (!(lambda > 0.0 && lambda < 1.0)) {
            throw std::invalid_argument("CqContext: contour radius must lie in (0, 1)");
        }
    }
};

class DeltaPoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// delta(z) = Q^{-1} - z/(1 - r(inf) z) Q^{-1} 1 b^T Q^{-1}.
inline zlin::ComplexMatrix delta(const ButcherTableau& t, cplx z)
{
    const cplx denom = 1.0 - t.r_infinity() * z;
    if (std::abs(denom) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) {
        throw DeltaPoleError("delta: z = 1/r(inf) is a pole");
    }
    const cplx f = z / denom;
    const std::size_t m = t.stages();
    zlin::ComplexMatrix d(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            d(i, j) = t.q_inverse()(i, j) - f * t.q_inverse_one()[i] * t.b_q_inverse()[j];
        }
    }
    return d;
}

namespace detail {

template <class T>
void require_zero_start(const BasicStageSequence<T>& u, const char* who)
{
    for (const T& v : u.step(0)) {
        if (v != T{}) {
            throw std::invalid_argument(std::string(who) + ": initial step value must be zero");
        }
    }
}

template <class T>
void require_stage_count(const CqContext& ctx, const BasicStageSequence<T>& u, const char* who)
{
    if (u.stages() != ctx.tableau.stages()) {
        throw std::invalid_argument(std::string(who) + ": stage count does not match tableau");
    }
}

// v_{n+1} = r(inf) v_n + b^T Q^{-1} V_n, v_0 = 0.
template <class T>
void postprocess_steps(const ButcherTableau& t, BasicStageSequence<T>& s)
{
    const std::size_t d = s.dim();
    const auto& w = t.b_q_inverse();
    auto first = s.step(0);
    std::fill(first.begin(), first.end(), T{});
    for (std::size_t n = 0; n < s.n_steps(); ++n) {
        auto cur = s.step(n);
        auto next = s.step(n + 1);
        for (std::size_t c = 0; c < d; ++c) {
            T acc = t.r_infinity() * cur[c];
            for (std::size_t i = 0; i < t.stages(); ++i) {
                acc += w[i] * s.stage(n, i)[c];
            }
            next[c] = acc;
        }
    }
}

} // namespace detail

/// X = (d^k)^{-1} U by the recurrence X_n = 1 x_n + k Q U_n,
/// x_{n+1} = r(inf) x_n + b^T Q^{-1} X_n, x_0 = 0.
template <class T>
BasicStageSequence<T> discrete_antiderivative(const CqContext& ctx, const BasicStageSequence<T>& u)
{
    detail::require_stage_count(ctx, u, "discrete_antiderivative");
    detail::require_zero_start(u, "discrete_antiderivative");
    const auto& t = ctx.tableau;
    const std::size_t m = t.stages();
    const std::size_t d = u.dim();
    const double k = ctx.k;
    BasicStageSequence<T> x(u.n_steps(), m, d);
    for (std::size_t n = 0; n < u.n_steps(); ++n) {
        const auto xn = x.step(n);
        for (std::size_t i = 0; i < m; ++i) {
            auto xi = x.stage(n, i);
            for (std::size_t c = 0; c < d; ++c) {
                T acc{};
                for (std::size_t j = 0; j < m; ++j) {
                    acc += t.q()(i, j) * u.stage(n, j)[c];
                }
                xi[c] = xn[c] + k * acc;
            }
        }
        // equals x_n + k b^T U_n; this form is the one discrete_derivative
        // inverts, so the pair round-trips to rounding
        auto next = x.step(n + 1);
        for (std::size_t c = 0; c < d; ++c) {
            T acc = t.r_infinity() * xn[c];
            for (std::size_t j = 0; j < m; ++j) {
                acc += t.b_q_inverse()[j] * x.stage(n, j)[c];
            }
            next[c] = acc;
        }
    }
    return x;
}

/// V = d^k U by V_n = k^{-1} Q^{-1}(U_n - 1 u_n) with
/// u_{n+1} = r(inf) u_n + b^T Q^{-1} U_n, u_0 = 0. Step values of the
/// result are post-processed the same way from V.
template <class T>
BasicStageSequence<T> discrete_derivative(const CqContext& ctx, const BasicStageSequence<T>& u)
{
    detail::require_stage_count(ctx, u, "discrete_derivative");
    detail::require_zero_start(u, "discrete_derivative");
    const auto& t = ctx.tableau;
    const std::size_t m = t.stages();
    const std::size_t d = u.dim();
    const double inv_k = 1.0 / ctx.k;
    BasicStageSequence<T> v(u.n_steps(), m, d);
    std::vector<T> un(d, T{});
    std::vector<T> next(d);
    for (std::size_t n = 0; n < u.n_steps(); ++n) {
        for (std::size_t i = 0; i < m; ++i) {
            auto vi = v.stage(n, i);
            for (std::size_t c = 0; c < d; ++c) {
                T acc{};
                for (std::size_t j = 0; j < m; ++j) {
                    acc += t.q_inverse()(i, j) * (u.stage(n, j)[c] - un[c]);
                }
                vi[c] = inv_k * acc;
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            T acc = t.r_infinity() * un[c];
            for (std::size_t j = 0; j < m; ++j) {
                acc += t.b_q_inverse()[j] * u.stage(n, j)[c];
            }
            next[c] = acc;
        }
        un.swap(next);
    }
    detail::postprocess_steps(t, v);
    return v;
}

class NotStifflyAccurateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shortcut for stiffly accurate methods: G_n = k^{-1} Q^{-1}(f(t_n + k c) - 1 f(t_n)).
/// Agrees with discrete_derivative of the stage samples when f(0) = 0.
/// f maps a time to a std::vector<double> of length `dim`.
template <class Fn>
StageSequence stiffly_accurate_derivative(const CqContext& ctx, std::size_t dim, Fn&& f)
{
    const auto& t = ctx.tableau;
    if (!is_stiffly_accurate(t)) {
        throw NotStifflyAccurateError("stiffly_accurate_derivative: " + t.name() + " is not stiffly accurate");
    }
    const std::size_t m = t.stages();
    const double k = ctx.k;
    StageSequence g(ctx.n_steps, m, dim);
    std::vector<std::vector<double>> samples(m);
    for (std::size_t n = 0; n < ctx.n_steps; ++n) {
        const double tn = static_cast<double>(n) * k;
        const std::vector<double> base = f(tn);
        for (std::size_t i = 0; i < m; ++i) {
            samples[i] = f(tn + k * t.c()[i]);
            if (samples[i].size() != dim || base.size() != dim) {
                throw std::invalid_argument("stiffly_accurate_derivative: sample has wrong dimension");
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto gi = g.stage(n, i);
            for (std::size_t c = 0; c < dim; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    acc += t.q_inverse()(i, j) * (samples[j][c] - base[c]);
                }
                gi[c] = acc / k;
            }
        }
    }
    detail::postprocess_steps(t, g);
    return g;
}

/// Scalar transfer function F(s), analytic for Re s > 0. When F is the
/// resolvent (s - a)^{-1}, `resolvent_pole` holds a and enables a direct
/// solve on frequencies where delta(z) is too close to defective.
struct TransferFunction {
    std::function<cplx(cplx)> symbol;
    std::optional<cplx> resolvent_pole;

    static TransferFunction resolvent(cplx a)
    {
        return {[a](cplx s) { return 1.0 / (s - a); }, a};
    }

    template <class Fn>
    static TransferFunction from(Fn&& f)
    {
        return {std::function<cplx(cplx)>(std::forward<Fn>(f)), std::nullopt};
    }
};

class TransferFunctionPoleError : public std::domain_error {
public:
    TransferFunctionPoleError(const std::string& what, std::size_t frequency)
        : std::domain_error(what), frequency_(frequency)
    {
    }
    std::size_t frequency() const noexcept { return frequency_; }

private:
    std::size_t frequency_;
};

struct CqDiagnostics {
    double max_imaginary = 0.0; ///< largest |Im| of the rescaled inverse transform (real input only)
    double max_abs_real = 0.0;
    std::size_t fallback_frequencies = 0;
};

namespace detail {

// F(delta(z_l)/k) applied to the columns of rhs (m x d) at one frequency.
inline zlin::ComplexMatrix apply_symbol_at(const CqContext& ctx, const TransferFunction& tf, cplx z, std::size_t l,
                                          const zlin::ComplexMatrix& rhs, bool& fell_back)
{
    const std::size_t m = ctx.tableau.stages();
    zlin::ComplexMatrix symbol = delta(ctx.tableau, z);
    symbol *= cplx(1.0 / ctx.k);

    std::optional<zlin::EigenDecomposition> ed;
    try {
        ed = zlin::eig(symbol, std::numeric_limits<double>::infinity());
    } catch (const zlin::EigenError&) {
        ed.reset();
    }

    if (ed && ed->cond_estimate <= ctx.cond_threshold) {
        std::vector<cplx> fvals(m);
        for (std::size_t i = 0; i < m; ++i) {
            fvals[i] = tf.symbol(ed->values[i]);
            if (!std::isfinite(fvals[i].real()) || !std::isfinite(fvals[i].imag())) {
                throw TransferFunctionPoleError(
                    "apply_transfer_function: transfer function is not finite on the symbol spectrum at frequency "
                    "index " + std::to_string(l),
                    l);
            }
        }
        zlin::ComplexMatrix coeff = zlin::LuFactorization<cplx>(ed->vectors).solve(rhs);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t c = 0; c < rhs.cols(); ++c) {
                coeff(i, c) *= fvals[i];
            }
        }
        return ed->vectors * coeff;
    }
    if (tf.resolvent_pole) {
        for (std::size_t i = 0; i < m; ++i) {
            symbol(i, i) -= *tf.resolvent_pole;
        }
        fell_back = true;
        try {
            return zlin::solve(symbol, rhs);
        } catch (const zlin::SingularMatrixError&) {
            throw TransferFunctionPoleError(
                "apply_transfer_function: resolvent pole on the symbol spectrum at frequency index " +
                    std::to_string(l),
                l);
        }
    }
    throw TransferFunctionPoleError("apply_transfer_function: symbol is near-defective at frequency index " +
                                        std::to_string(l) + " and the transfer function is not a resolvent",
                                    l);
}

} // namespace detail

/// F(d^k) g = Z^{-1}[F(delta(z)/k) g^(z)], evaluated on the circle
/// |z| = lambda at N equispaced points and applied componentwise when
/// d > 1. Matrix functions of delta use its eigendecomposition; resolvents
/// fall back to a direct solve where the eigenbasis is ill-conditioned.
/// For real input the imaginary part of the inverse transform is discarded
/// and reported in `diag`. Step values are post-processed with r(inf) and
/// b^T Q^{-1}.
template <class T>
BasicStageSequence<T> apply_transfer_function(const CqContext& ctx, const TransferFunction& tf,
                                              const BasicStageSequence<T>& g, CqDiagnostics* diag = nullptr)
{
    ctx.validate();
    detail::require_stage_count(ctx, g, "apply_transfer_function");
    if (g.n_steps() != ctx.n_steps) {
        throw std::invalid_argument("apply_transfer_function: sequence length does not match context");
    }
    const auto& t = ctx.tableau;
    const std::size_t m = t.stages();
    const std::size_t d = g.dim();
    const std::size_t len = ctx.n_steps;
    const std::size_t big_n = ctx.transform_length;
    const double lambda = ctx.lambda;

    // spectra[i*d + c][l]: transform of stage i, component c
    std::vector<std::vector<cplx>> spectra(m * d, std::vector<cplx>(big_n));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            auto& s = spectra[i * d + c];
            double scale = 1.0;
            for (std::size_t n = 0; n < len; ++n) {
                s[n] = cplx(g.stage(n, i)[c]) * scale;
                scale *= lambda;
            }
            zlin::fft_in_place(s, zlin::FftDirection::forward);
        }
    }

    std::vector<unsigned char> fell_back(big_n, 0);
    parallel_for(big_n, ctx.threads, [&](std::size_t l) {
        const cplx z =
            std::polar(lambda, -2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(big_n));
        zlin::ComplexMatrix rhs(m, d);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t c = 0; c < d; ++c) {
                rhs(i, c) = spectra[i * d + c][l];
            }
        }
        bool fb = false;
        const zlin::ComplexMatrix out = detail::apply_symbol_at(ctx, tf, z, l, rhs, fb);
        fell_back[l] = fb ? 1 : 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t c = 0; c < d; ++c) {
                spectra[i * d + c][l] = out(i, c);
            }
        }
    });

    BasicStageSequence<T> v(len, m, d);
    CqDiagnostics local;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            auto& s = spectra[i * d + c];
            zlin::fft_in_place(s, zlin::FftDirection::inverse);
            double scale = 1.0;
            for (std::size_t n = 0; n < len; ++n) {
                const cplx val = s[n] * scale;
                if constexpr (std::is_same_v<T, cplx>) {
                    v.stage(n, i)[c] = val;
                } else {
                    v.stage(n, i)[c] = val.real();
                    local.max_imaginary = std::max(local.max_imaginary, std::abs(val.imag()));
                }
                local.max_abs_real = std::max(local.max_abs_real, std::abs(val.real()));
                scale /= lambda;
            }
        }
    }
    for (unsigned char f : fell_back) {
        local.fallback_frequencies += f;
    }
    if (diag != nullptr) {
        *diag = local;
    }
    detail::postprocess_steps(t, v);
    return v;
}

} // namespace rkcq

#endif // RKCQ_OPCALC_HPP

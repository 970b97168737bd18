#ifndef RKCQ_HEAT_SPHERE_HPP
#define RKCQ_HEAT_SPHERE_HPP

// Heat conduction on the unit sphere reduced to one spherical harmonic of
// degree n: the single-layer density solves mu_n(sqrt(d_t)) lambda = psi.

#include "rkcq/convergence.hpp"
#include "rkcq/opcalc.hpp"
#include "rkcq/tableau.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkcq {

namespace detail {

inline void require_degree(int n, const char* who)
{
    if (n < 0 || n > 10) {
        throw std::invalid_argument(std::string(who) + ": degree must lie in [0, 10]");
    }
}

inline double double_factorial(int n)
{
    double r = 1.0;
    for (int i = n; i > 1; i -= 2) {
        r *= i;
    }
    return r;
}

// Polynomial factors of h^(1) = e^{iz} p1(z) and h^(2) = e^{-iz} p2(z):
//   p1 = (-i)^{n+1}/z sum_k i^k a_k (2z)^{-k},  p2 = i^{n+1}/z sum_k (-i)^k a_k (2z)^{-k},
//   a_k = (n+k)! / (k! (n-k)!).
inline void hankel_factors(int n, cplx z, cplx& p1, cplx& p2)
{
    const cplx i(0.0, 1.0);
    cplx s1 = 0.0;
    cplx s2 = 0.0;
    double a = 1.0;
    cplx inv2z_pow = 1.0;
    cplx ipow = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            a *= static_cast<double>((n + k) * (n - k + 1)) / static_cast<double>(k);
            inv2z_pow /= 2.0 * z;
            ipow *= i;
        }
        s1 += ipow * a * inv2z_pow;
        s2 += std::conj(ipow) * a * inv2z_pow;
    }
    cplx pref1 = 1.0;
    cplx pref2 = 1.0;
    for (int k = 0; k <= n; ++k) {
        pref1 *= -i;
        pref2 *= i;
    }
    p1 = pref1 * s1 / z;
    p2 = pref2 * s2 / z;
}

// Cancellation estimates for the two evaluation paths of j_n.
inline bool use_series(int n, cplx z)
{
    const double r = std::abs(z);
    if (r == 0.0) {
        return true;
    }
    if (r > 40.0) {
        return false;
    }
    const double series_loss = std::exp(r - std::abs(z.imag()));
    const double closed_loss =
        double_factorial(2 * n + 1) * double_factorial(2 * n - 1) / std::pow(r, 2 * n + 1) + 1.0;
    return series_loss <= closed_loss;
}

// j_n(z) = z^n sum_k (-z^2/2)^k / (k! (2n+2k+1)!!)
inline cplx bessel_j_series(int n, cplx z)
{
    const cplx w = -0.5 * z * z;
    cplx term = 1.0 / double_factorial(2 * n + 1);
    cplx sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= w / (static_cast<double>(k) * static_cast<double>(2 * n + 2 * k + 1));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) {
            break;
        }
    }
    return std::pow(z, n) * sum;
}

} // namespace detail

/// Spherical Bessel function j_n(z), 0 <= n <= 10. Uses the power series
/// where the closed form would cancel, otherwise (h^(1) + h^(2)) / 2.
inline cplx spherical_bessel_j(int n, cplx z)
{
    detail::require_degree(n, "spherical_bessel_j");
    if (z == cplx(0.0)) {
        return n == 0 ? 1.0 : 0.0;
    }
    if (detail::use_series(n, z)) {
        return detail::bessel_j_series(n, z);
    }
    cplx p1;
    cplx p2;
    detail::hankel_factors(n, z, p1, p2);
    const cplx i(0.0, 1.0);
    return 0.5 * (std::exp(i * z) * p1 + std::exp(-i * z) * p2);
}

/// Spherical Hankel function of the first kind, elementary closed form.
inline cplx spherical_hankel_h1(int n, cplx z)
{
    detail::require_degree(n, "spherical_hankel_h1");
    if (z == cplx(0.0)) {
        throw std::domain_error("spherical_hankel_h1: z = 0 is a pole");
    }
    cplx p1;
    cplx p2;
    detail::hankel_factors(n, z, p1, p2);
    return std::exp(cplx(0.0, 1.0) * z) * p1;
}

/// f_n' = f_{n-1} - (n+1)/z f_n for n >= 1 and f_0' = -f_1, valid for both kinds.
inline cplx spherical_bessel_j_derivative(int n, cplx z)
{
    detail::require_degree(n, "spherical_bessel_j_derivative");
    if (n == 10) {
        throw std::invalid_argument("spherical_bessel_j_derivative: degree must lie in [0, 9]");
    }
    if (n == 0) {
        return -spherical_bessel_j(1, z);
    }
    if (z == cplx(0.0)) {
        return n == 1 ? 1.0 / 3.0 : 0.0;
    }
    return spherical_bessel_j(n - 1, z) - static_cast<double>(n + 1) / z * spherical_bessel_j(n, z);
}

inline cplx spherical_hankel_h1_derivative(int n, cplx z)
{
    detail::require_degree(n, "spherical_hankel_h1_derivative");
    if (n == 10) {
        throw std::invalid_argument("spherical_hankel_h1_derivative: degree must lie in [0, 9]");
    }
    if (n == 0) {
        return -spherical_hankel_h1(1, z);
    }
    return spherical_hankel_h1(n - 1, z) - static_cast<double>(n + 1) / z * spherical_hankel_h1(n, z);
}

/// mu_n(s) = -s j_n(i s) h_n^(1)(i s). The exponentials are combined before
/// evaluation so large Re s does not overflow.
inline cplx mu_n(int n, cplx s)
{
    detail::require_degree(n, "mu_n");
    if (s == cplx(0.0)) {
        throw std::domain_error("mu_n: s = 0 (the limit is 1/(2n+1))");
    }
    const cplx i(0.0, 1.0);
    const cplx z = i * s;
    cplx p1;
    cplx p2;
    detail::hankel_factors(n, z, p1, p2);
    if (detail::use_series(n, z)) {
        return -s * detail::bessel_j_series(n, z) * std::exp(i * z) * p1;
    }
    return -s * 0.5 * (std::exp(2.0 * i * z) * p1 * p1 + p1 * p2);
}

/// Temporal profile t^12 e^{-2t}.
inline double default_heat_profile(double t)
{
    return std::pow(t, 12) * std::exp(-2.0 * t);
}

struct HeatExperimentConfig {
    int degree = 2;
    std::function<double(double)> psi = default_heat_profile;
    double final_time = 6.0;
    ButcherTableau tableau = builtin_tableau("radau_iia_3");
    std::vector<double> ks; ///< strictly decreasing
    CqOptions cq;
    double roundoff_floor = 1e-11;
    std::string psi_label = "t^12 exp(-2t)";

    static std::vector<double> steps_from_levels(double final_time, const std::vector<int>& levels)
    {
        std::vector<double> ks;
        for (int l : levels) {
            if (l <= 0) {
                throw std::invalid_argument("level counts must be positive");
            }
            ks.push_back(final_time / static_cast<double>(l));
        }
        return ks;
    }
};

/// Observed vanishing order of psi at 0 from log2(|psi(2h)| / |psi(h)|) at
/// small h. Infinite for psi vanishing identically near 0.
inline double vanishing_order(const std::function<double(double)>& psi, double h = 1e-3)
{
    const double a = std::abs(psi(h));
    const double b = std::abs(psi(2.0 * h));
    if (a == 0.0 && b == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (a == 0.0) {
        return 0.0;
    }
    return std::log2(b / a);
}

inline void validate_heat_config(const HeatExperimentConfig& cfg)
{
    detail::require_degree(cfg.degree, "heat-sphere");
    if (!cfg.psi) {
        throw std::invalid_argument("heat-sphere: psi is not set");
    }
    if (!(cfg.final_time > 0.0)) {
        throw std::invalid_argument("heat-sphere: final time must be positive");
    }
    for (std::size_t i = 1; i < cfg.ks.size(); ++i) {
        if (!(cfg.ks[i] < cfg.ks[i - 1])) {
            throw std::invalid_argument("heat-sphere: step sizes must be strictly decreasing");
        }
    }
    // psi^{(j)}(0) = 0 for j <= p + 2 means psi = O(t^{p+3})
    const double needed = static_cast<double>(cfg.tableau.classical_order() + 3);
    const double order = vanishing_order(cfg.psi);
    if (order < needed - 0.5) {
        throw std::invalid_argument("heat-sphere: psi vanishes to order " + format_real(order) + " at 0, need " +
                                    format_real(needed) + " for " + cfg.tableau.name());
    }
}

inline TransferFunction heat_density_symbol(int degree)
{
    return TransferFunction::from([degree](cplx s) { return 1.0 / mu_n(degree, std::sqrt(s)); });
}

/// Lambda^k = mu_n(sqrt(d^k))^{-1} psi, stage and step values.
inline StageSequence solve_heat_density(const HeatExperimentConfig& cfg, double k, CqDiagnostics* diag = nullptr)
{
    validate_heat_config(cfg);
    if (!(k > 0.0)) {
        throw std::invalid_argument("solve_heat_density: step size must be positive");
    }
    const double ratio = cfg.final_time / k;
    const auto n_steps = static_cast<std::size_t>(std::llround(ratio));
    if (n_steps == 0 || std::abs(ratio - static_cast<double>(n_steps)) > 1e-9 * ratio) {
        throw std::invalid_argument("solve_heat_density: step size does not divide the final time");
    }
    const CqContext ctx = CqContext::make(cfg.tableau, k, n_steps, cfg.cq);
    const StageSequence g = StageSequence::sample_scalar(cfg.tableau, k, n_steps, cfg.psi);
    return apply_transfer_function(ctx, heat_density_symbol(cfg.degree), g, diag);
}

/// Error per level: max over step times of |lambda^k_n - lambda^{k/4}_{4n}|.
/// Levels whose error falls below the roundoff floor are excluded from the
/// tail statistics.
inline ConvergenceReport run_heat_convergence(const HeatExperimentConfig& cfg)
{
    validate_heat_config(cfg);
    if (cfg.ks.empty()) {
        throw std::invalid_argument("run_heat_convergence: no step sizes given");
    }
    ConvergenceReport rep;
    rep.experiment = "heat_sphere";
    rep.method = cfg.tableau.name();
    rep.quantity = "density";
    double max_imag = 0.0;
    for (double k : cfg.ks) {
        CqDiagnostics d1;
        CqDiagnostics d2;
        const StageSequence coarse = solve_heat_density(cfg, k, &d1);
        const StageSequence fine = solve_heat_density(cfg, k / 4.0, &d2);
        double err = 0.0;
        for (std::size_t n = 0; n <= coarse.n_steps(); ++n) {
            err = std::max(err, std::abs(coarse.step(n)[0] - fine.step(4 * n)[0]));
        }
        max_imag = std::max({max_imag, d1.max_imaginary, d2.max_imaginary});
        rep.levels.push_back({k, err, err < cfg.roundoff_floor});
    }
    rep.compute_eoc();
    rep.metadata["degree"] = std::to_string(cfg.degree);
    rep.metadata["psi"] = cfg.psi_label;
    rep.metadata["T"] = format_real(cfg.final_time);
    rep.metadata["reference"] = "k/4, same method";
    rep.metadata["roundoff_floor"] = format_real(cfg.roundoff_floor);
    rep.metadata["max_imaginary"] = format_real(max_imag);
    std::size_t excluded = 0;
    for (const auto& l : rep.levels) {
        excluded += l.excluded ? 1 : 0;
    }
    rep.metadata["excluded_levels"] = std::to_string(excluded);
    return rep;
}

} // namespace rkcq

#endif // RKCQ_HEAT_SPHERE_HPP

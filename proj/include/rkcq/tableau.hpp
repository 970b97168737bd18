#ifndef RKCQ_TABLEAU_HPP
#define RKCQ_TABLEAU_HPP

#include "rkcq/zlin.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rkcq {

/// Implicit Runge-Kutta method given by its coefficient matrix Q, weights b
/// and abscissae c, together with its declared stage order q and classical
/// order p. Immutable after construction.
class ButcherTableau {
public:
    ButcherTableau(std::string name, zlin::RealMatrix q_matrix, std::vector<double> b, std::vector<double> c,
                   int stage_order, int classical_order)
        : name_(std::move(name)), q_(std::move(q_matrix)), b_(std::move(b)), c_(std::move(c)),
          stage_order_(stage_order), classical_order_(classical_order)
    {
        const std::size_t m = q_.rows();
        if (m == 0 || !q_.square() || b_.size() != m || c_.size() != m) {
            throw std::invalid_argument("ButcherTableau: inconsistent shapes for " + name_);
        }
        if (stage_order_ < 1 || classical_order_ < 1) {
            throw std::invalid_argument("ButcherTableau: orders must be positive");
        }
        q_inv_ = zlin::inverse(q_);
        b_q_inv_.assign(m, 0.0);
        q_inv_one_.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                b_q_inv_[j] += b_[i] * q_inv_(i, j);
                q_inv_one_[i] += q_inv_(i, j);
            }
        }
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            s += b_q_inv_[j];
        }
        r_inf_ = 1.0 - s;
    }

    const std::string& name() const noexcept { return name_; }
    std::size_t stages() const noexcept { return q_.rows(); }
    const zlin::RealMatrix& q() const noexcept { return q_; }
    const std::vector<double>& b() const noexcept { return b_; }
    const std::vector<double>& c() const noexcept { return c_; }
    int stage_order() const noexcept { return stage_order_; }
    int classical_order() const noexcept { return classical_order_; }

    const zlin::RealMatrix& q_inverse() const noexcept { return q_inv_; }
    /// Row vector b^T Q^{-1}.
    const std::vector<double>& b_q_inverse() const noexcept { return b_q_inv_; }
    /// Column vector Q^{-1} 1.
    const std::vector<double>& q_inverse_one() const noexcept { return q_inv_one_; }
    /// r(infinity) = 1 - b^T Q^{-1} 1.
    double r_infinity() const noexcept { return r_inf_; }

private:
    std::string name_;
    zlin::RealMatrix q_;
    std::vector<double> b_;
    std::vector<double> c_;
    int stage_order_;
    int classical_order_;
    zlin::RealMatrix q_inv_;
    std::vector<double> b_q_inv_;
    std::vector<double> q_inv_one_;
    double r_inf_ = 0.0;
};

inline constexpr std::array<std::string_view, 7> builtin_tableau_names{
    "radau_iia_1", "radau_iia_2", "radau_iia_3", "radau_iia_5", "gauss_1", "gauss_2", "lobatto_iiic_2"};

/// Built-in methods. The Radau IIA and Gauss coefficients are collocation
/// tableaux: abscissae are the roots of d^{m-1}/dx^{m-1}[x^{m-1}(x-1)^m]
/// (Radau, right endpoint included) or of the shifted Legendre polynomial
/// (Gauss), and Q_ij = int_0^{c_i} l_j, b_j = int_0^1 l_j with l_j the
/// Lagrange basis on c. Values were computed at 50 digits by
/// tests/oracles/collocation_tableaux.py and rounded to double.
inline ButcherTableau builtin_tableau(std::string_view name)
{
    using zlin::RealMatrix;
    if (name == "radau_iia_1") {
        return {"radau_iia_1", RealMatrix{{1.0}}, {1.0}, {1.0}, 1, 1};
    }
    if (name == "radau_iia_2") {
        return {"radau_iia_2", RealMatrix{{5.0 / 12.0, -1.0 / 12.0}, {3.0 / 4.0, 1.0 / 4.0}}, {3.0 / 4.0, 1.0 / 4.0},
                {1.0 / 3.0, 1.0}, 2, 3};
    }
    if (name == "radau_iia_3") {
        return {"radau_iia_3",
                RealMatrix{{1.9681547722366042587e-1, -6.5535425850198388109e-2, 2.377097434822015242e-2},
                           {3.94424314739087277e-1, 2.9207341166522846302e-1, -4.1548752125997930198e-2},
                           {3.7640306270046727505e-1, 5.1248582618842161384e-1, 1.1111111111111111111e-1}},
                {3.7640306270046727505e-1, 5.1248582618842161384e-1, 1.1111111111111111111e-1},
                {1.5505102572168219018e-1, 6.4494897427831780982e-1, 1.0},
                3,
                5};
    }
    if (name == "radau_iia_5") {
        return {"radau_iia_5",
                RealMatrix{{7.2998864317903324306e-2, -2.6735331107945571878e-2, 1.8676929763984354412e-2,
                            -1.2879106093306439854e-2, 5.0428392338820152067e-3},
                           {1.5377523147918246867e-1, 1.4621486784749350665e-1, -3.6444568905128089527e-2,
                            2.1233063119304719422e-2, -7.9355799027287775326e-3},
                           {1.4006304568480987151e-1, 2.989671294912834794e-1, 1.6758507013524896344e-1,
                            -3.3969101686617746572e-2, 1.0944288744192252274e-2},
                           {1.4489430810953475754e-1, 2.7650006876015922756e-1, 3.2579792291042102998e-1,
                            1.2875675325490976116e-1, -1.5708917378805328388e-2},
                           {1.4371356079122594132e-1, 2.8135601514946206019e-1, 3.1182652297574125408e-1,
                            2.231039010835707444e-1, 4.0e-2}},
                {1.4371356079122594132e-1, 2.8135601514946206019e-1, 3.1182652297574125408e-1, 2.231039010835707444e-1,
                 4.0e-2},
                {5.7104196114517682193e-2, 2.7684301363812382768e-1, 5.8359043236891682006e-1, 8.6024013565621944785e-1,
                 1.0},
                5,
                9};
    }
    if (name == "gauss_1") {
        return {"gauss_1", RealMatrix{{0.5}}, {1.0}, {0.5}, 1, 2};
    }
    if (name == "gauss_2") {
        return {"gauss_2", RealMatrix{{0.25, -3.8675134594812882255e-2}, {5.3867513459481288225e-1, 0.25}},
                {0.5, 0.5}, {2.1132486540518711775e-1, 7.8867513459481288225e-1}, 2, 4};
    }
    if (name == "lobatto_iiic_2") {
        return {"lobatto_iiic_2", RealMatrix{{0.5, -0.5}, {0.5, 0.5}}, {0.5, 0.5}, {0.0, 1.0}, 1, 2};
    }
    std::string known;
    for (auto n : builtin_tableau_names) {
        known += known.empty() ? "" : ", ";
        known += n;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (known: " + known + ")");
}

struct ConditionResidual {
    enum class Kind { quadrature, stage };
    Kind kind;
    int j; ///< power of Q (quadrature conditions only)
    int l; ///< power of c
    double residual;
};

struct OrderConditionReport {
    std::vector<ConditionResidual> residuals;
    std::vector<ConditionResidual> failures;
    double max_residual = 0.0;
    bool ok() const noexcept { return failures.empty(); }
};

/// Residuals of b^T Q^j c^l = l!/(j+l+1)! for j+l <= p-1 and of the stage
/// conditions c^l = l Q c^{l-1} for 1 <= l <= q.
inline OrderConditionReport validate_order_conditions(const ButcherTableau& t, double tol = 1e-10)
{
    const std::size_t m = t.stages();
    const auto& q = t.q();
    auto cpow = [&](int l) {
        std::vector<double> v(m);
        for (std::size_t i = 0; i < m; ++i) {
            v[i] = std::pow(t.c()[i], l);
        }
        return v;
    };
    auto factorial = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) {
            f *= i;
        }
        return f;
    };

    OrderConditionReport report;
    auto record = [&](ConditionResidual r) {
        report.residuals.push_back(r);
        report.max_residual = std::max(report.max_residual, r.residual);
        if (!(r.residual <= tol)) {
            report.failures.push_back(r);
        }
    };

    const int p = t.classical_order();
    for (int total = 0; total <= p - 1; ++total) {
        for (int l = 0; l <= total; ++l) {
            const int j = total - l;
            std::vector<double> v = l == 0 ? std::vector<double>(m, 1.0) : cpow(l);
            for (int rep = 0; rep < j; ++rep) {
                v = q * v;
            }
            double lhs = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                lhs += t.b()[i] * v[i];
            }
            const double rhs = factorial(l) / factorial(j + l + 1);
            record({ConditionResidual::Kind::quadrature, j, l, std::abs(lhs - rhs)});
        }
    }
    for (int l = 1; l <= t.stage_order(); ++l) {
        const std::vector<double> prev = l == 1 ? std::vector<double>(m, 1.0) : cpow(l - 1);
        const std::vector<double> qc = q * prev;
        const std::vector<double> cl = cpow(l);
        double r = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            r = std::max(r, std::abs(cl[i] - l * qc[i]));
        }
        record({ConditionResidual::Kind::stage, 0, l, r});
    }
    return report;
}

/// Raised when I - zQ is singular (z is the reciprocal of an eigenvalue of Q).
class StabilityPoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// r(z) = 1 + z b^T (I - zQ)^{-1} 1.
inline cplx stability_function(const ButcherTableau& t, cplx z)
{
    if (z == cplx{}) {
        return 1.0;
    }
    const std::size_t m = t.stages();
    zlin::ComplexMatrix a = zlin::ComplexMatrix::identity(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            a(i, j) -= z * t.q()(i, j);
        }
    }
    std::vector<cplx> y;
    try {
        y = zlin::solve(a, std::vector<cplx>(m, cplx(1.0)));
    } catch (const zlin::SingularMatrixError& e) {
        throw StabilityPoleError("stability function: I - zQ is singular at z = (" + std::to_string(z.real()) + ", " +
                                 std::to_string(z.imag()) + ")");
    }
    cplx s{};
    for (std::size_t i = 0; i < m; ++i) {
        s += t.b()[i] * y[i];
    }
    return 1.0 + z * s;
}

inline double r_infinity(const ButcherTableau& t)
{
    return t.r_infinity();
}

/// Imaginary-axis sample grid: t = +-10^e for e log-spaced in
/// [log10(t_min), log10(t_max)] plus t = 0.
struct AxisGrid {
    double t_min = 1e-3;
    double t_max = 1e6;
    int points = 400;
    /// Strict contractivity |r(it)| < 1 - margin is checked for |t| >= strict_from;
    /// closer to the origin 1 - |r(it)| = O(t^{2p+2}) drops below rounding.
    double strict_from = 1.0;
    double margin = 1e-12;
    double tol = 1e-12;

    std::vector<double> samples() const
    {
        std::vector<double> out{0.0};
        const double lo = std::log10(t_min);
        const double hi = std::log10(t_max);
        for (int i = 0; i < points; ++i) {
            const double e = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
            const double v = std::pow(10.0, e);
            out.push_back(v);
            out.push_back(-v);
        }
        return out;
    }
};

struct MethodClassReport {
    bool a_stable = false;
    double max_abs_r_on_axis = 0.0;
    bool poles_in_right_half_plane = false;
    bool strongly_a_stable = false;
    double max_abs_r_away_from_origin = 0.0;
    bool stiffly_accurate = false;
    double stiff_accuracy_defect = 0.0; ///< max |b^T Q^{-1} - e_m^T|
    double r_at_infinity = 0.0;
};

/// Numerical evidence for A-stability, the strict imaginary-axis bound
/// with r(inf) < 1, and stiff accuracy.
inline MethodClassReport classify_method(const ButcherTableau& t, const AxisGrid& grid = {})
{
    MethodClassReport rep;
    const std::size_t m = t.stages();

    // poles of r are reciprocals of eigenvalues of Q
    const auto ev = zlin::eig(zlin::to_complex(t.q()), std::numeric_limits<double>::infinity()).values;
    rep.poles_in_right_half_plane = true;
    for (const cplx& lam : ev) {
        if (!(lam.real() > 0.0)) {
            rep.poles_in_right_half_plane = false;
        }
    }

    bool strict = true;
    for (double s : grid.samples()) {
        const double a = std::abs(stability_function(t, cplx(0.0, s)));
        rep.max_abs_r_on_axis = std::max(rep.max_abs_r_on_axis, a);
        if (std::abs(s) >= grid.strict_from) {
            rep.max_abs_r_away_from_origin = std::max(rep.max_abs_r_away_from_origin, a);
            if (!(a < 1.0 - grid.margin)) {
                strict = false;
            }
        }
    }
    rep.a_stable = rep.poles_in_right_half_plane && rep.max_abs_r_on_axis <= 1.0 + grid.tol;
    rep.r_at_infinity = t.r_infinity();
    rep.strongly_a_stable = rep.a_stable && strict && std::abs(rep.r_at_infinity) < 1.0;

    double defect = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double target = j + 1 == m ? 1.0 : 0.0;
        defect = std::max(defect, std::abs(t.b_q_inverse()[j] - target));
    }
    rep.stiff_accuracy_defect = defect;
    rep.stiffly_accurate = defect <= grid.tol;
    return rep;
}

inline bool is_stiffly_accurate(const ButcherTableau& t, double tol = 1e-12)
{
    double defect = 0.0;
    for (std::size_t j = 0; j < t.stages(); ++j) {
        defect = std::max(defect, std::abs(t.b_q_inverse()[j] - (j + 1 == t.stages() ? 1.0 : 0.0)));
    }
    return defect <= tol;
}

} // namespace rkcq

#endif // RKCQ_TABLEAU_HPP

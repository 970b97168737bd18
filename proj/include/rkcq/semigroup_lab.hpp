#ifndef RKCQ_SEMIGROUP_LAB_HPP
#define RKCQ_SEMIGROUP_LAB_HPP

// Finite-dimensional constrained evolution problems
//     u' = A_star u + F,  B u = Xi,  u(0) = u0
// and their Runge-Kutta discretization with the lifting split U = Y + Z.

#include "rkcq/convergence.hpp"
#include "rkcq/opcalc.hpp"
#include "rkcq/tableau.hpp"
#include "rkcq/zlin.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rkcq {

using Vector = std::vector<double>;
using VectorFunction = std::function<Vector(double)>;

/// The triple (A_star, B, E). ker B is the span of the unit vectors listed
/// in `domain_indices`; every other index is a constraint slot.
struct ConstrainedOperator {
    zlin::RealMatrix a_star;
    zlin::RealMatrix constraint; ///< B, d_c x d
    zlin::RealMatrix lifting;    ///< E, d x d_c
    std::vector<std::size_t> domain_indices;
    bool promises_dissipative = false;

    std::size_t dim() const noexcept { return a_star.rows(); }
    std::size_t constraint_dim() const noexcept { return constraint.rows(); }

    /// A = A_star restricted to ker B, as a |D| x |D| matrix.
    zlin::RealMatrix restricted_generator() const
    {
        const std::size_t nd = domain_indices.size();
        zlin::RealMatrix a(nd, nd);
        for (std::size_t r = 0; r < nd; ++r) {
            for (std::size_t c = 0; c < nd; ++c) {
                a(r, c) = a_star(domain_indices[r], domain_indices[c]);
            }
        }
        return a;
    }

    static ConstrainedOperator unconstrained(zlin::RealMatrix a, bool dissipative = false)
    {
        const std::size_t d = a.rows();
        ConstrainedOperator op;
        op.a_star = std::move(a);
        op.constraint = zlin::RealMatrix(0, d);
        op.lifting = zlin::RealMatrix(d, 0);
        op.domain_indices.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            op.domain_indices[i] = i;
        }
        op.promises_dissipative = dissipative;
        return op;
    }
};

struct OperatorInvariants {
    double right_inverse_defect = 0.0; ///< max |B E - I|
    double lifting_defect = 0.0;       ///< max |(I - A_star) E|
    double kernel_defect = 0.0;        ///< max |B e_i| over domain indices
    double max_symmetric_eigenvalue = 0.0; ///< of (A + A^T)/2 on ker B
    bool ok(double tol = 1e-12) const
    {
        return right_inverse_defect <= tol && lifting_defect <= tol && kernel_defect <= tol;
    }
};

inline OperatorInvariants check_invariants(const ConstrainedOperator& op)
{
    OperatorInvariants inv;
    const std::size_t d = op.dim();
    const std::size_t dc = op.constraint_dim();
    if (dc > 0) {
        const zlin::RealMatrix be = op.constraint * op.lifting;
        for (std::size_t i = 0; i < dc; ++i) {
            for (std::size_t j = 0; j < dc; ++j) {
                inv.right_inverse_defect = std::max(inv.right_inverse_defect, std::abs(be(i, j) - (i == j ? 1.0 : 0.0)));
            }
        }
        const zlin::RealMatrix ae = op.a_star * op.lifting;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < dc; ++j) {
                inv.lifting_defect = std::max(inv.lifting_defect, std::abs(op.lifting(i, j) - ae(i, j)));
            }
        }
        for (std::size_t idx : op.domain_indices) {
            for (std::size_t i = 0; i < dc; ++i) {
                inv.kernel_defect = std::max(inv.kernel_defect, std::abs(op.constraint(i, idx)));
            }
        }
    }
    const zlin::RealMatrix a = op.restricted_generator();
    if (a.rows() > 0 && a.rows() <= 16) {
        zlin::ComplexMatrix sym(a.rows(), a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < a.rows(); ++j) {
                sym(i, j) = 0.5 * (a(i, j) + a(j, i));
            }
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const cplx& ev : zlin::eig(sym, std::numeric_limits<double>::infinity()).values) {
            best = std::max(best, ev.real());
        }
        inv.max_symmetric_eigenvalue = best;
    } else if (a.rows() > 16) {
        // Gershgorin bound on the symmetric part
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double radius = 0.0;
            for (std::size_t j = 0; j < a.rows(); ++j) {
                if (j != i) {
                    radius += std::abs(0.5 * (a(i, j) + a(j, i)));
                }
            }
            best = std::max(best, a(i, i) + radius);
        }
        inv.max_symmetric_eigenvalue = best;
    }
    return inv;
}

/// Finite-difference surrogate of the heat equation on [0,1] with Dirichlet
/// data. State: n_grid interior nodes x_i = (i+1)h followed by the left and
/// right boundary slots, h = 1/(n_grid+1). A_star is the 3-point Laplacian on
/// interior rows and the identity on boundary rows; B reads the boundary
/// slots; E xi solves (I - Delta_h) v = 0 with boundary values xi.
inline ConstrainedOperator heat_fd_testbed(std::size_t n_grid)
{
    if (n_grid < 3) {
        throw std::invalid_argument("heat_fd_testbed: n_grid must be at least 3");
    }
    const std::size_t n = n_grid;
    const std::size_t d = n + 2;
    const std::size_t left = n;
    const std::size_t right = n + 1;
    const double h = 1.0 / static_cast<double>(n + 1);
    const double inv_h2 = 1.0 / (h * h);

    ConstrainedOperator op;
    op.a_star = zlin::RealMatrix(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        op.a_star(i, i) = -2.0 * inv_h2;
        op.a_star(i, i == 0 ? left : i - 1) += inv_h2;
        op.a_star(i, i + 1 == n ? right : i + 1) += inv_h2;
    }
    op.a_star(left, left) = 1.0;
    op.a_star(right, right) = 1.0;

    op.constraint = zlin::RealMatrix(2, d);
    op.constraint(0, left) = 1.0;
    op.constraint(1, right) = 1.0;

    // (I - Delta_h) on interior nodes: tridiagonal, solved by Thomas sweep
    auto harmonic_extension = [&](double xl, double xr) {
        const double diag = 1.0 + 2.0 * inv_h2;
        const double off = -inv_h2;
        Vector rhs(n, 0.0);
        rhs[0] += inv_h2 * xl;
        rhs[n - 1] += inv_h2 * xr;
        Vector cprime(n);
        Vector dprime(n);
        cprime[0] = off / diag;
        dprime[0] = rhs[0] / diag;
        for (std::size_t i = 1; i < n; ++i) {
            const double den = diag - off * cprime[i - 1];
            cprime[i] = off / den;
            dprime[i] = (rhs[i] - off * dprime[i - 1]) / den;
        }
        Vector v(n);
        v[n - 1] = dprime[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) {
            v[i] = dprime[i] - cprime[i] * v[i + 1];
        }
        return v;
    };
    op.lifting = zlin::RealMatrix(d, 2);
    const Vector vl = harmonic_extension(1.0, 0.0);
    const Vector vr = harmonic_extension(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        op.lifting(i, 0) = vl[i];
        op.lifting(i, 1) = vr[i];
    }
    op.lifting(left, 0) = 1.0;
    op.lifting(right, 1) = 1.0;

    op.domain_indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        op.domain_indices[i] = i;
    }
    op.promises_dissipative = true;
    return op;
}

inline double heat_fd_spacing(std::size_t n_grid)
{
    return 1.0 / static_cast<double>(n_grid + 1);
}

/// u' = A_star u + F, B u = Xi, u(0) = u0 on [0, T].
struct EvolutionProblem {
    ConstrainedOperator op;
    VectorFunction volume_data;     ///< F: t -> d-vector
    VectorFunction constraint_data; ///< Xi: t -> d_c-vector
    Vector u0;
    double final_time = 1.0;
    /// Error norms are Euclidean norms scaled by this factor (sqrt(h) for
    /// grid functions).
    double norm_weight = 1.0;
    std::string label;
    /// Exact solution of the (semi-discrete) system, when known.
    VectorFunction exact;
};

/// Smooth temporal profile t^9 e^{-t} and its first derivative; nine
/// derivatives vanish at t = 0.
inline double vanishing_profile(double t)
{
    return std::pow(t, 9) * std::exp(-t);
}

inline double vanishing_profile_derivative(double t)
{
    return (9.0 * std::pow(t, 8) - std::pow(t, 9)) * std::exp(-t);
}

/// Heat testbed with manufactured solution u(x,t) = sin(pi x) eta(t) + x^2 eta(t),
/// eta = t^9 e^{-t}. F is chosen so the grid samples of u solve the
/// semi-discrete system exactly; Xi = (0, eta(t)).
inline EvolutionProblem manufactured_heat_problem(std::size_t n_grid, double final_time)
{
    EvolutionProblem p;
    p.op = heat_fd_testbed(n_grid);
    const std::size_t n = n_grid;
    const double h = heat_fd_spacing(n);
    const double laplace_sin = (2.0 * std::cos(std::numbers::pi * h) - 2.0) / (h * h);
    p.volume_data = [n, h, laplace_sin](double t) {
        const double eta = vanishing_profile(t);
        const double deta = vanishing_profile_derivative(t);
        Vector f(n + 2, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i + 1) * h;
            f[i] = std::sin(std::numbers::pi * x) * (deta - laplace_sin * eta) + x * x * deta - 2.0 * eta;
        }
        return f;
    };
    p.constraint_data = [](double t) { return Vector{0.0, vanishing_profile(t)}; };
    p.exact = [n, h](double t) {
        const double eta = vanishing_profile(t);
        Vector u(n + 2, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i + 1) * h;
            u[i] = std::sin(std::numbers::pi * x) * eta + x * x * eta;
        }
        u[n] = 0.0;
        u[n + 1] = eta;
        return u;
    };
    p.u0.assign(n + 2, 0.0);
    p.final_time = final_time;
    p.norm_weight = std::sqrt(h);
    p.label = "heat_fd_manufactured";
    return p;
}

/// Heat testbed driven only by boundary data: F = 0, Xi = (0, eta(t)).
inline EvolutionProblem boundary_driven_heat_problem(std::size_t n_grid, double final_time)
{
    EvolutionProblem p;
    p.op = heat_fd_testbed(n_grid);
    const std::size_t d = n_grid + 2;
    p.volume_data = [d](double) { return Vector(d, 0.0); };
    p.constraint_data = [](double t) { return Vector{0.0, vanishing_profile(t)}; };
    p.u0.assign(d, 0.0);
    p.final_time = final_time;
    p.norm_weight = std::sqrt(heat_fd_spacing(n_grid));
    p.label = "heat_fd_boundary_driven";
    return p;
}

class StageSystemSingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StepperDiagnostics {
    double max_stage_residual = 0.0;      ///< stage equation on the domain rows
    double max_constraint_residual = 0.0; ///< B U - Xi
    double data_scale = 0.0;
};

/// Runge-Kutta approximation with side constraint: on each step
///   Y = (I x E) Xi(t_n + k c),
///   Z - k (Q x A) Z = 1 u_n - Y + k Q (A_star Y + F(t_n + k c))  on ker B,
///   U = Y + Z,  u_{n+1} = r(inf) u_n + b^T Q^{-1} U.
/// The stage matrix is factored once per call.
inline StageSequence rk_step_constrained(const EvolutionProblem& prob, const ButcherTableau& t, double k,
                                         std::size_t n_steps, StepperDiagnostics* diag = nullptr)
{
    const ConstrainedOperator& op = prob.op;
    const std::size_t d = op.dim();
    const std::size_t dc = op.constraint_dim();
    const std::size_t m = t.stages();
    const auto& dom = op.domain_indices;
    const std::size_t nd = dom.size();
    if (prob.u0.size() != d) {
        throw std::invalid_argument("rk_step_constrained: initial state has wrong dimension");
    }
    if (!(k > 0.0)) {
        throw std::invalid_argument("rk_step_constrained: step size must be positive");
    }

    zlin::RealMatrix sys(m * nd, m * nd);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double kq = k * t.q()(i, j);
            for (std::size_t r = 0; r < nd; ++r) {
                for (std::size_t c = 0; c < nd; ++c) {
                    sys(i * nd + r, j * nd + c) = (i == j && r == c ? 1.0 : 0.0) - kq * op.a_star(dom[r], dom[c]);
                }
            }
        }
    }
    std::optional<zlin::LuFactorization<double>> lu;
    try {
        lu.emplace(std::move(sys));
    } catch (const zlin::SingularMatrixError& e) {
        throw StageSystemSingularError(std::string("rk_step_constrained: stage system is singular, try a smaller k (") +
                                       e.what() + ")");
    }

    StageSequence out(n_steps, m, d);
    std::copy(prob.u0.begin(), prob.u0.end(), out.step(0).begin());

    std::vector<Vector> xi(m);
    std::vector<Vector> y(m, Vector(d));
    std::vector<Vector> f(m);
    std::vector<Vector> w(m);
    Vector rhs(m * nd);
    StepperDiagnostics local;

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double tn = static_cast<double>(n) * k;
        const auto un = out.step(n);
        for (std::size_t i = 0; i < m; ++i) {
            const double ti = tn + k * t.c()[i];
            xi[i] = dc > 0 ? prob.constraint_data(ti) : Vector{};
            f[i] = prob.volume_data(ti);
            if (xi[i].size() != dc || f[i].size() != d) {
                throw std::invalid_argument("rk_step_constrained: data callable returned wrong dimension");
            }
            std::fill(y[i].begin(), y[i].end(), 0.0);
            if (dc > 0) {
                y[i] = op.lifting * xi[i];
            }
            w[i] = op.a_star * y[i];
            for (std::size_t c = 0; c < d; ++c) {
                w[i][c] += f[i][c];
                local.data_scale = std::max(local.data_scale, std::abs(f[i][c]));
            }
            for (double v : xi[i]) {
                local.data_scale = std::max(local.data_scale, std::abs(v));
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t r = 0; r < nd; ++r) {
                const std::size_t idx = dom[r];
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    acc += t.q()(i, j) * w[j][idx];
                }
                rhs[i * nd + r] = un[idx] - y[i][idx] + k * acc;
            }
        }
        lu->solve_in_place(rhs);
        for (std::size_t i = 0; i < m; ++i) {
            auto ui = out.stage(n, i);
            std::copy(y[i].begin(), y[i].end(), ui.begin());
            for (std::size_t r = 0; r < nd; ++r) {
                ui[dom[r]] += rhs[i * nd + r];
            }
        }

        if (diag != nullptr) {
            std::vector<Vector> au(m);
            for (std::size_t j = 0; j < m; ++j) {
                au[j] = op.a_star * out.stage(n, j);
            }
            for (std::size_t i = 0; i < m; ++i) {
                const auto ui = out.stage(n, i);
                for (std::size_t idx : dom) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        acc += t.q()(i, j) * (au[j][idx] + f[j][idx]);
                    }
                    local.max_stage_residual =
                        std::max(local.max_stage_residual, std::abs(ui[idx] - un[idx] - k * acc));
                }
                if (dc > 0) {
                    const Vector bu = op.constraint * ui;
                    for (std::size_t c = 0; c < dc; ++c) {
                        local.max_constraint_residual =
                            std::max(local.max_constraint_residual, std::abs(bu[c] - xi[i][c]));
                    }
                }
            }
        }

        auto next = out.step(n + 1);
        for (std::size_t c = 0; c < d; ++c) {
            double acc = t.r_infinity() * un[c];
            for (std::size_t i = 0; i < m; ++i) {
                acc += t.b_q_inverse()[i] * out.stage(n, i)[c];
            }
            next[c] = acc;
        }
    }
    if (diag != nullptr) {
        *diag = local;
    }
    return out;
}

/// Step update in the form u_{n+1} = u_n + k (b^T x A_star) U_n + k b^T F(t_n + k c),
/// evaluated on the domain rows from a stepper output. Used to cross-check
/// the r(inf) form.
inline StageSequence classical_step_update(const EvolutionProblem& prob, const ButcherTableau& t, double k,
                                           const StageSequence& run)
{
    const std::size_t d = prob.op.dim();
    const std::size_t m = t.stages();
    StageSequence out = run;
    for (std::size_t n = 0; n < run.n_steps(); ++n) {
        const double tn = static_cast<double>(n) * k;
        Vector acc(d, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const Vector au = prob.op.a_star * run.stage(n, i);
            const Vector f = prob.volume_data(tn + k * t.c()[i]);
            for (std::size_t c = 0; c < d; ++c) {
                acc[c] += t.b()[i] * (au[c] + f[c]);
            }
        }
        auto next = out.step(n + 1);
        const auto prev = out.step(n);
        for (std::size_t c = 0; c < d; ++c) {
            next[c] = prev[c] + k * acc[c];
        }
    }
    return out;
}

enum class Quantity { step, integrated, differentiated, strong };

inline std::string_view to_string(Quantity q)
{
    switch (q) {
    case Quantity::step:
        return "step";
    case Quantity::integrated:
        return "integrated";
    case Quantity::differentiated:
        return "differentiated";
    case Quantity::strong:
        return "strong";
    }
    return "step";
}

inline Quantity parse_quantity(std::string_view s)
{
    if (s == "step") {
        return Quantity::step;
    }
    if (s == "integrated") {
        return Quantity::integrated;
    }
    if (s == "differentiated") {
        return Quantity::differentiated;
    }
    if (s == "strong") {
        return Quantity::strong;
    }
    throw std::invalid_argument("unknown quantity '" + std::string(s) +
                                "' (expected step, integrated, differentiated or strong)");
}

/// Step values of the tracked quantity for one stepper run (n = 0..n_steps):
///  step:           u_n
///  integrated:     x_{n+1} = r(inf) x_n + b^T Q^{-1} X_n with X = (d^k)^{-1} U
///  differentiated: v_n = e_m^T V_{n-1} with V = d^k U (v_0 = 0)
///  strong:         v_n - F(t_n)
inline std::vector<Vector> tracked_quantity(const EvolutionProblem& prob, const ButcherTableau& t, double k,
                                            const StageSequence& run, Quantity q)
{
    const std::size_t n_steps = run.n_steps();
    const std::size_t d = run.dim();
    const std::size_t m = t.stages();
    std::vector<Vector> out(n_steps + 1, Vector(d, 0.0));
    if (q == Quantity::step) {
        for (std::size_t n = 0; n <= n_steps; ++n) {
            const auto s = run.step(n);
            std::copy(s.begin(), s.end(), out[n].begin());
        }
        return out;
    }
    if ((q == Quantity::differentiated || q == Quantity::strong) && !is_stiffly_accurate(t)) {
        throw NotStifflyAccurateError(std::string(to_string(q)) + " quantity requires a stiffly accurate method, got " +
                                      t.name());
    }
    const CqContext ctx{t, k, n_steps, zlin::next_power_of_two(n_steps + 1), 0.5};
    if (q == Quantity::integrated) {
        // discrete_antiderivative already post-processes with r(inf) and b^T Q^{-1}
        const StageSequence x = discrete_antiderivative(ctx, run);
        for (std::size_t n = 0; n <= n_steps; ++n) {
            const auto s = x.step(n);
            std::copy(s.begin(), s.end(), out[n].begin());
        }
        return out;
    }
    const StageSequence v = discrete_derivative(ctx, run);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        const auto last = v.stage(n - 1, m - 1);
        std::copy(last.begin(), last.end(), out[n].begin());
        if (q == Quantity::strong) {
            const Vector f = prob.volume_data(static_cast<double>(n) * k);
            for (std::size_t c = 0; c < d; ++c) {
                out[n][c] -= f[c];
            }
        }
    }
    return out;
}

using ProblemFactory = std::function<EvolutionProblem(double k)>;

struct RateStudyOptions {
    std::string reference_method = "radau_iia_5";
    /// k_ref = k_min / reference_refinement
    std::size_t reference_refinement = 8;
    /// Reference is valid when |ref(k_ref) - ref(2 k_ref)| <= finest error / richardson_margin.
    double richardson_margin = 100.0;
};

namespace detail {

inline double weighted_max_difference(const std::vector<Vector>& coarse, const std::vector<Vector>& fine,
                                      std::size_t stride, double weight)
{
    double best = 0.0;
    for (std::size_t n = 0; n < coarse.size(); ++n) {
        const Vector& a = coarse[n];
        const Vector& b = fine.at(n * stride);
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            s += (a[c] - b[c]) * (a[c] - b[c]);
        }
        best = std::max(best, std::sqrt(s) * weight);
    }
    return best;
}

inline std::size_t steps_for(double final_time, double k)
{
    const double ratio = final_time / k;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
        throw std::invalid_argument("step size does not divide the final time");
    }
    return n;
}

} // namespace detail

/// Convergence study for one tracked quantity. Each level is compared, at
/// the common step times, to a reference run of the same problem with
/// reference_method at k_min / reference_refinement. The reference is
/// checked against a run at twice its step; if the two disagree by more
/// than finest error / richardson_margin the report is marked invalid.
inline ConvergenceReport measure_theorem_rates(const ProblemFactory& factory, const ButcherTableau& t,
                                               std::vector<double> ks, Quantity quantity,
                                               const RateStudyOptions& opt = {})
{
    if (ks.empty()) {
        throw std::invalid_argument("measure_theorem_rates: no step sizes given");
    }
    std::sort(ks.begin(), ks.end(), std::greater<>());
    const ButcherTableau ref_method = builtin_tableau(opt.reference_method);
    if ((quantity == Quantity::differentiated || quantity == Quantity::strong) && !is_stiffly_accurate(t)) {
        throw NotStifflyAccurateError(std::string(to_string(quantity)) +
                                      " quantity requires a stiffly accurate method, got " + t.name());
    }
    const double k_ref = ks.back() / static_cast<double>(opt.reference_refinement);

    ConvergenceReport rep;
    rep.experiment = "semigroup";
    rep.method = t.name();
    rep.quantity = std::string(to_string(quantity));
    rep.metadata["reference_method"] = opt.reference_method;
    rep.metadata["reference_refinement"] = std::to_string(opt.reference_refinement);

    double worst_reference_gap = 0.0;
    for (double k : ks) {
        const EvolutionProblem prob = factory(k);
        const std::size_t n_steps = detail::steps_for(prob.final_time, k);
        const std::size_t n_ref = detail::steps_for(prob.final_time, k_ref);
        if (n_ref % n_steps != 0) {
            throw std::invalid_argument("measure_theorem_rates: reference step does not divide level step");
        }
        const StageSequence run = rk_step_constrained(prob, t, k, n_steps);
        const StageSequence ref = rk_step_constrained(prob, ref_method, k_ref, n_ref);
        const StageSequence ref2 = rk_step_constrained(prob, ref_method, 2.0 * k_ref, n_ref / 2);
        const auto qa = tracked_quantity(prob, t, k, run, quantity);
        const auto qr = tracked_quantity(prob, ref_method, k_ref, ref, quantity);
        const auto qr2 = tracked_quantity(prob, ref_method, 2.0 * k_ref, ref2, quantity);
        const double err = detail::weighted_max_difference(qa, qr, n_ref / n_steps, prob.norm_weight);
        const double gap = detail::weighted_max_difference(qr2, qr, 2, prob.norm_weight);
        worst_reference_gap = std::max(worst_reference_gap, gap);
        rep.levels.push_back({k, err, false});
        if (rep.metadata.count("problem") == 0) {
            rep.metadata["problem"] = prob.label;
            rep.metadata["T"] = format_real(prob.final_time);
        }
    }
    rep.compute_eoc();
    rep.metadata["reference_gap"] = format_real(worst_reference_gap);
    const double finest = rep.levels.back().error;
    if (!(worst_reference_gap * opt.richardson_margin <= finest)) {
        rep.valid = false;
        rep.invalid_reason = "reference Richardson check failed: gap " + format_real(worst_reference_gap) +
                             " exceeds finest error / " + format_real(opt.richardson_margin);
    }
    return rep;
}

inline ConvergenceReport measure_theorem_rates(const EvolutionProblem& prob, const ButcherTableau& t,
                                               std::vector<double> ks, Quantity quantity,
                                               const RateStudyOptions& opt = {})
{
    return measure_theorem_rates([&prob](double) { return prob; }, t, std::move(ks), quantity, opt);
}

/// D^k(y; t0) = y(t0 + k c) - y(t0) 1 - k Q y'(t0 + k c), one d-vector per stage.
template <class Fn, class DFn>
std::vector<Vector> stage_defect(const ButcherTableau& t, Fn&& y, DFn&& y_dot, double t0, double k)
{
    const std::size_t m = t.stages();
    const Vector base = y(t0);
    const std::size_t d = base.size();
    std::vector<Vector> vals(m);
    std::vector<Vector> ders(m);
    for (std::size_t i = 0; i < m; ++i) {
        vals[i] = y(t0 + k * t.c()[i]);
        ders[i] = y_dot(t0 + k * t.c()[i]);
    }
    std::vector<Vector> out(m, Vector(d, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                acc += t.q()(i, j) * ders[j][c];
            }
            out[i][c] = vals[i][c] - base[c] - k * acc;
        }
    }
    return out;
}

inline double defect_norm(const std::vector<Vector>& defect)
{
    double s = 0.0;
    for (const auto& v : defect) {
        for (double x : v) {
            s += x * x;
        }
    }
    return std::sqrt(s);
}

/// r(kA) = I + (b^T x kA)(I - kQ x A)^{-1}(1 x I).
inline zlin::RealMatrix stability_matrix(const ButcherTableau& t, const zlin::RealMatrix& a, double k)
{
    const std::size_t d = a.rows();
    const std::size_t m = t.stages();
    zlin::RealMatrix sys(m * d, m * d);
    zlin::RealMatrix rhs(m * d, d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double kq = k * t.q()(i, j);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    sys(i * d + r, j * d + c) = (i == j && r == c ? 1.0 : 0.0) - kq * a(r, c);
                }
            }
        }
        for (std::size_t r = 0; r < d; ++r) {
            rhs(i * d + r, r) = 1.0;
        }
    }
    const zlin::RealMatrix stages = zlin::solve(sys, rhs);
    zlin::RealMatrix weighted(d, d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                weighted(r, c) += t.b()[i] * stages(i * d + r, c);
            }
        }
    }
    zlin::RealMatrix out = zlin::RealMatrix::identity(d);
    out += (a * weighted) * k;
    return out;
}

/// Random dissipative matrix S - G^T G with S skew-symmetric; the symmetric
/// part is negative semidefinite. Entries of S and G are N(0,1)-scaled.
template <class Rng>
zlin::RealMatrix random_dissipative(std::size_t dim, Rng& rng, double skew_scale = 1.0, double damping_scale = 1.0)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    zlin::RealMatrix s(dim, dim);
    zlin::RealMatrix g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            g(i, j) = damping_scale * nd(rng) / std::sqrt(static_cast<double>(dim));
        }
        for (std::size_t j = i + 1; j < dim; ++j) {
            const double v = skew_scale * nd(rng);
            s(i, j) = v;
            s(j, i) = -v;
        }
    }
    return s - g.transpose() * g;
}

struct ContractionSample {
    double k = 0.0;
    double norm = 0.0;           ///< ||r(kA)||_2
    double max_power_norm = 0.0; ///< max_{1 <= n, nk <= T} ||r(kA)^n||_2
    std::size_t powers = 0;
};

struct ContractionReport {
    std::string method;
    std::vector<ContractionSample> samples;
    double worst_norm = 0.0;
    double worst_power_norm = 0.0;
};

/// Spectral norms of r(kA) and of its powers up to n k <= horizon.
inline ContractionReport contraction_diagnostics(const ButcherTableau& t, const zlin::RealMatrix& a,
                                                 const std::vector<double>& ks, double horizon = 10.0)
{
    ContractionReport rep;
    rep.method = t.name();
    for (double k : ks) {
        const zlin::RealMatrix r = stability_matrix(t, a, k);
        ContractionSample s;
        s.k = k;
        s.norm = zlin::spectral_norm(r);
        const auto count = static_cast<std::size_t>(std::floor(horizon / k + 1e-9));
        zlin::RealMatrix power = r;
        s.max_power_norm = s.norm;
        for (std::size_t n = 2; n <= count; ++n) {
            power = power * r;
            // ||P||_2 <= ||P||_F: skip the eigen solve when it cannot raise the max
            if (zlin::frobenius_norm(power) > s.max_power_norm) {
                s.max_power_norm = std::max(s.max_power_norm, zlin::spectral_norm(power));
            }
        }
        s.powers = std::max<std::size_t>(count, 1);
        rep.worst_norm = std::max(rep.worst_norm, s.norm);
        rep.worst_power_norm = std::max(rep.worst_power_norm, s.max_power_norm);
        rep.samples.push_back(s);
    }
    return rep;
}

} // namespace rkcq

#endif // RKCQ_SEMIGROUP_LAB_HPP

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "multifrac/errors.hpp"
#include "multifrac/quadrature.hpp"
#include "multifrac/regularity.hpp"
#include "multifrac/special.hpp"
#include "multifrac/stats.hpp"

// Variable-order Riemann-Liouville calculus on [0, T].
//
// The integral of order alpha(.) is
//
//     (I f)(x) = 1/Gamma(alpha(x)) int_0^x (x-y)^{alpha(x)-1} f(y) dy,
//
// and the derivative is defined as the solution f of the second-kind
// Volterra equation
//
//     f(x) = G0(g)(x) + int_0^x f(s) F(s, x) ds,
//
// with bounded kernel
//
//     F(s,x) = int_0^1 alpha'(s+tau(x-s)) (ln tau - ln(1-tau))
//                      (tau/(1-tau))^{alpha(s+tau(x-s))} dtau
//
// and forcing functional
//
//     G0(g)(x) = [ g(x) (M1(x) + M2(x))
//                  + int_0^x alpha(t) Gamma(alpha(t)) (g(x)-g(t))
//                            (x-t)^{-alpha(t)-1} dt ] / B(alpha(x), 1-alpha(x)),
//     M1(x) = Gamma(alpha(0)) x^{-alpha(0)},
//     M2(x) = -int_0^x u^{-alpha(x-u)} alpha'(x-u) Gamma(alpha(x-u))
//                     (ln u - psi0(alpha(x-u))) du.
//
// Constant alpha collapses F to zero and G0 to the classical Marchaud form.

namespace multifrac {

struct DerivativeConfig {
    enum class Solver { volterra_march, picard_series };

    std::size_t grid_segments = 512;
    double epsilon = 0.0;    // 0 selects min(0.1, (1 - alpha^*)/2)
    double lp_exponent = 2.0;
    Solver solver = Solver::volterra_march;
    double series_tolerance = 1e-10;
    std::size_t max_series_terms = 64;

    // kernel discretization: per-node quadrature and the size of the
    // interpolation table the solver samples F from (0 = evaluate directly
    // at every grid pair)
    QuadratureRule kernel_rule = QuadratureRule::graded(128, 3.0);
    std::size_t kernel_table = 129;

    double effective_epsilon(const RegularityFunction& alpha) const {
        if (epsilon > 0.0) return epsilon;
        const double hi = alpha.range_bounds().second;
        return std::min(0.1, 0.5 * (1.0 - hi));
    }

    void validate(const RegularityFunction& alpha) const {
        if (grid_segments < 2) throw ConfigError("DerivativeConfig: grid size must be >= 2");
        if (!(lp_exponent > 1.0)) throw ConfigError("DerivativeConfig: p must exceed 1");
        if (!(series_tolerance > 0.0))
            throw ConfigError("DerivativeConfig: series tolerance must be positive");
        if (max_series_terms < 1)
            throw ConfigError("DerivativeConfig: max series terms must be >= 1");
        const auto [lo, hi] = alpha.range_bounds();
        const double eps = effective_epsilon(alpha);
        if (!(eps > 0.0) || !(eps < 1.0 - hi))
            throw ConfigError("DerivativeConfig: hypothesis epsilon < 1 - alpha^* violated "
                              "(epsilon=" + std::to_string(eps) +
                              ", 1-alpha^*=" + std::to_string(1.0 - hi) + ")");
        if (!((lo + eps - alpha.eval(0.0)) * lp_exponent > -1.0))
            throw ConfigError("DerivativeConfig: hypothesis (alpha_* + epsilon - alpha(0)) p > -1 "
                              "violated (value=" +
                              std::to_string((lo + eps - alpha.eval(0.0)) * lp_exponent) + ")");
    }
};

struct OperatorResult {
    SampledPath path;
    std::map<std::string, double> diagnostics;
};

// --- kernel ---------------------------------------------------------------

// F(s, x). The integrand is split into the part frozen at the endpoint x,
// whose tau-integral is the closed form alpha'(x) B(1+a,1-a)(psi0(1+a) -
// psi0(1-a)) with a = alpha(x), plus a difference that vanishes at tau = 1;
// the difference is what the graded-mesh rule integrates. Without the split
// the (1-tau)^{-a} end defeats polynomially graded meshes once a is close
// to 1.
namespace detail {

// the tau-integral itself is insensitive to the order of s and x; the solver
// interpolates it from a table spanning the full square
inline double kernel_F_raw(const RegularityFunction& alpha, double s, double x,
                           const QuadratureRule& rule) {
    if (alpha.is_constant()) return 0.0;
    const double a_x = alpha.eval(x);
    const double ap_x = alpha.deriv(x);
    const double frozen = ap_x * frozen_kernel_moment(a_x);
    if (s == x) return frozen;

    const double difference = log_singular_unit_integral(
        [&](double tau) {
            const double L = std::log(tau) - std::log1p(-tau);
            const double t = s + tau * (x - s);
            const double a_t = alpha.eval(t);
            const double ap_t = alpha.deriv(t);
            // U(tau) - U_frozen(tau), grouped through expm1 so the two nearly
            // equal exponentials near tau = 1 do not cancel in double precision
            return L * std::exp(a_x * L) *
                   (ap_t * std::expm1((a_t - a_x) * L) + (ap_t - ap_x));
        },
        rule);
    return frozen + difference;
}

} // namespace detail

inline double kernel_F(const RegularityFunction& alpha, double s, double x,
                       const QuadratureRule& rule = QuadratureRule::graded(512, 3.0)) {
    if (s > x) throw std::invalid_argument("kernel_F: needs s <= x");
    return detail::kernel_F_raw(alpha, s, x, rule);
}

// Explicit majorant of sup |F| assembled from the four half-interval pieces
// of the kernel estimate: splitting the tau-integral at 1/2 and bounding the
// order by its range, each piece has a closed-form bound in alpha_*, alpha^*.
// The tail piece keeps its |ln(1-tau)| factor (the power alone would not
// dominate when alpha is constant).
inline double kernel_F_bound(const RegularityFunction& alpha) {
    const auto [a_lo, a_hi] = alpha.range_bounds();
    const double ln2 = std::numbers::ln2;
    auto j_log = [ln2](double a) {
        const double e = a + 1.0;
        return std::pow(0.5, e) * (ln2 / e + 1.0 / (e * e));
    };
    auto j_pow = [](double a) { return std::pow(0.5, a + 1.0) / (a + 1.0); };
    auto j_inv = [](double c) { return std::pow(0.5, 1.0 - c) / (1.0 - c); };
    auto j_log_inv = [ln2](double c) {
        const double e = 1.0 - c;
        return std::pow(0.5, e) * (ln2 / e + 1.0 / (e * e));
    };
    const double i1 = std::pow(2.0, a_hi) * j_log(a_lo);
    const double i2 = std::pow(2.0, a_hi) * ln2 * j_pow(a_lo);
    const double i3 = std::pow(2.0, a_hi) * ln2 * j_inv(a_hi);
    const double i4 = std::pow(2.0, 1.0 - a_lo) * j_log_inv(a_hi);
    return alpha.c1_norm() * (i1 + i2 + i3 + i4);
}

// --- multifractional integral ----------------------------------------------

// (I f)(x_i) on the grid of f. At each output point the exponent
// 1 - alpha(x_i) is a genuine constant in the integration variable, so
// product integration against the piecewise-affine f is exact in f.
inline SampledPath mf_integral(const SampledPath& f, const RegularityFunction& alpha) {
    if (std::abs(f.horizon() - alpha.horizon()) > 1e-12 * std::max(1.0, alpha.horizon()))
        throw std::invalid_argument("mf_integral: grid horizon does not match alpha");
    const std::size_t n = f.segments();
    const double dt = f.dt();
    SampledPath out = SampledPath::zeros(f.horizon(), n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double a_i = alpha.eval(f.time(i));
        const double b = 1.0 - a_i; // integrand weight (x-y)^{-b}
        std::vector<double> panel(i);
        double pow_hi = std::pow(static_cast<double>(i) * dt, 1.0 - b);
        for (std::size_t k = 0; k < i; ++k) {
            // cell k in y corresponds to u = x - y in [(i-k-1) dt, (i-k) dt]
            const double u_hi = static_cast<double>(i - k) * dt;
            const double u_lo = u_hi - dt;
            const double pow_lo = k + 1 == i ? 0.0 : std::pow(u_lo, 1.0 - b);
            const double m0 = (pow_hi - pow_lo) / (1.0 - b);
            const double m1 = (pow_hi * u_hi - pow_lo * u_lo) / (2.0 - b);
            const double f_at_uhi = f[k];     // y = t_k
            const double f_at_ulo = f[k + 1]; // y = t_{k+1}
            const double slope = (f_at_uhi - f_at_ulo) / dt;
            const double a0 = f_at_ulo - slope * u_lo;
            panel[k] = a0 * m0 + slope * m1;
            pow_hi = pow_lo;
        }
        out[i] = pairwise_sum(panel) / gamma_fn(a_i);
    }
    return out;
}

namespace detail {

// bicubic (4x4 Lagrange) interpolation on a uniform grid over [0,T]^2
class CubicGrid2D {
  public:
    CubicGrid2D() = default;
    template <class F>
    CubicGrid2D(double horizon, std::size_t nodes, unsigned threads, F&& f)
        : horizon_(horizon), nodes_(nodes), values_(nodes * nodes) {
        parallel_for(nodes, threads, [&](std::size_t i) {
            const double s = horizon_ * static_cast<double>(i) / static_cast<double>(nodes_ - 1);
            for (std::size_t j = 0; j < nodes_; ++j) {
                const double x =
                    horizon_ * static_cast<double>(j) / static_cast<double>(nodes_ - 1);
                values_[i * nodes_ + j] = f(s, x);
            }
        });
    }

    double operator()(double s, double x) const {
        const double gs = to_grid(s), gx = to_grid(x);
        const std::size_t i0 = stencil_base(gs), j0 = stencil_base(gx);
        double ws[4], wx[4];
        lagrange_weights(gs - static_cast<double>(i0), ws);
        lagrange_weights(gx - static_cast<double>(j0), wx);
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            double row = 0.0;
            const double* base = &values_[(i0 + a) * nodes_ + j0];
            for (int b = 0; b < 4; ++b) row += wx[b] * base[b];
            acc += ws[a] * row;
        }
        return acc;
    }

    std::size_t nodes() const { return nodes_; }

  private:
    double horizon_ = 1.0;
    std::size_t nodes_ = 0;
    std::vector<double> values_;

    double to_grid(double t) const {
        const double g = t / horizon_ * static_cast<double>(nodes_ - 1);
        return std::clamp(g, 0.0, static_cast<double>(nodes_ - 1));
    }
    std::size_t stencil_base(double g) const {
        const auto i = static_cast<std::ptrdiff_t>(std::floor(g)) - 1;
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            i, 0, static_cast<std::ptrdiff_t>(nodes_) - 4));
    }
    static void lagrange_weights(double u, double w[4]) {
        // nodes at offsets 0,1,2,3; u is the query relative to the base
        w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        w[1] = u * (u - 2.0) * (u - 3.0) / 2.0;
        w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0;
        w[3] = u * (u - 1.0) * (u - 2.0) / 6.0;
    }
};

} // namespace detail

// --- the derivative solver --------------------------------------------------
//
// Binds (alpha, grid, config) and precomputes everything that does not depend
// on the input path: the kernel triangle F(t_j, t_i), the g-independent parts
// of G0 (M1 + M2 per node) and the product-integration weights of the
// increment integral. solve() is then pure arithmetic, which is what makes
// per-path Monte Carlo use of the operator affordable.
class DerivativeOperator {
  public:
    DerivativeOperator(const RegularityFunction& alpha, DerivativeConfig cfg,
                       unsigned threads = 1)
        : alpha_(alpha), cfg_(cfg), n_(cfg.grid_segments), dt_(alpha.horizon() / cfg.grid_segments) {
        cfg_.validate(alpha_);
        cfg_.kernel_rule.validate();
        precompute_node_data();
        precompute_kernel(threads);
        precompute_g0_weights(threads);
    }

    const RegularityFunction& alpha() const { return alpha_; }
    const DerivativeConfig& config() const { return cfg_; }
    std::size_t segments() const { return n_; }

    // kernel of the solved equation, -F(t_j, t_i)/B(alpha(t_i), 1-alpha(t_i))
    double equation_kernel(std::size_t j, std::size_t i) const {
        return f_tri_[row_offset(i) + j];
    }
    double max_kernel() const { return max_kernel_; } // sup |F| over the grid

    // G0(g) at grid node i >= 1
    double forcing_at(const SampledPath& g, std::size_t i) const {
        check_input(g);
        return forcing_unchecked(g, i);
    }

    OperatorResult solve(const SampledPath& g) const {
        return cfg_.solver == DerivativeConfig::Solver::picard_series ? solve_series(g)
                                                                      : solve_march(g);
    }

    OperatorResult solve_march(const SampledPath& g) const {
        check_input(g);
        const std::vector<double> forcing = forcing_vector(g);
        std::vector<double> f(n_ + 1, 0.0);
        march(forcing, 0.0, f);
        const double f0 = 2.0 * f[1] - f[2];
        march(forcing, f0, f);
        f[0] = f0;

        OperatorResult out{SampledPath(alpha_.horizon(), std::move(f)), {}};
        out.diagnostics["solver_march"] = 1.0;
        out.diagnostics["f0_extrapolated"] = f0;
        fill_common_diagnostics(out, forcing);
        return out;
    }

    OperatorResult solve_series(const SampledPath& g) const {
        check_input(g);
        const std::vector<double> forcing = forcing_vector(g);
        std::size_t used_total = 0;
        std::map<std::string, double> extra;

        // pass 1 with f(0) = 0, pass 2 with the extrapolated boundary value
        std::vector<double> f = series_sum(forcing, 0.0, used_total, nullptr);
        const double f0 = 2.0 * f[1] - f[2];
        f = series_sum(forcing, f0, used_total, &extra);
        f[0] = f0;

        OperatorResult out{SampledPath(alpha_.horizon(), std::move(f)), {}};
        out.diagnostics["solver_series"] = 1.0;
        out.diagnostics["series_terms"] = static_cast<double>(used_total);
        out.diagnostics["f0_extrapolated"] = f0;
        for (const auto& [k, v] : extra) out.diagnostics[k] = v;
        fill_common_diagnostics(out, forcing);
        return out;
    }

  private:
    RegularityFunction alpha_;
    DerivativeConfig cfg_;
    std::size_t n_;
    double dt_;

    // node data
    std::vector<double> a_node_, beta_node_;       // alpha(t_i), B(alpha,1-alpha)
    std::vector<double> c_node_;                   // alpha(t) Gamma(alpha(t)) at nodes
    std::vector<double> m1_plus_m2_;               // M1 + M2 at nodes (index >= 1)
    // Volterra kernel of the equation actually solved. Differentiating the
    // Abel-type identity gives  f(x) B(alpha(x),1-alpha(x)) = A'(x) -
    // int f F ds  with F from the tau-integral, so the marching kernel is
    // -F(t_j, t_i) / B(alpha(t_i), 1-alpha(t_i)).
    std::vector<double> f_tri_;                    // j <= i, row-major triangle
    std::vector<double> w_near_, w_far_;           // increment-integral weights per (i, cell)
    double max_kernel_ = 0.0;                      // max |F| before normalization

    std::size_t row_offset(std::size_t i) const { return i * (i + 1) / 2; }

    void check_input(const SampledPath& g) const {
        if (g.segments() != n_)
            throw std::invalid_argument("DerivativeOperator: path grid differs from solver grid");
        if (std::abs(g.horizon() - alpha_.horizon()) > 1e-12 * std::max(1.0, alpha_.horizon()))
            throw std::invalid_argument("DerivativeOperator: path horizon differs from alpha");
        const double scale = std::max(1.0, std::abs(g[n_]));
        if (std::abs(g[0]) > 1e-12 * scale)
            throw std::invalid_argument("DerivativeOperator: g(0) must vanish");
    }

    void precompute_node_data() {
        a_node_.resize(n_ + 1);
        beta_node_.resize(n_ + 1);
        c_node_.resize(n_ + 1);
        for (std::size_t i = 0; i <= n_; ++i) {
            const double a = alpha_.eval(dt_ * static_cast<double>(i));
            a_node_[i] = a;
            beta_node_[i] = std::numbers::pi / std::sin(std::numbers::pi * a);
            c_node_[i] = a * gamma_fn(a);
        }
    }

    void precompute_kernel(unsigned threads) {
        f_tri_.assign(row_offset(n_ + 1), 0.0);
        max_kernel_ = 0.0;
        if (alpha_.is_constant()) return;

        detail::CubicGrid2D table;
        const bool interpolate = cfg_.kernel_table >= 8;
        if (interpolate) {
            table = detail::CubicGrid2D(alpha_.horizon(), cfg_.kernel_table, threads,
                                        [&](double s, double x) {
                                            return detail::kernel_F_raw(alpha_, s, x,
                                                                        cfg_.kernel_rule);
                                        });
        }
        std::vector<double> row_max(n_ + 1, 0.0);
        parallel_for(n_ + 1, threads, [&](std::size_t i) {
            const double x = dt_ * static_cast<double>(i);
            const double scale = -1.0 / beta_node_[i];
            double m = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                const double s = dt_ * static_cast<double>(j);
                const double v =
                    interpolate ? table(s, x) : kernel_F(alpha_, s, x, cfg_.kernel_rule);
                f_tri_[row_offset(i) + j] = scale * v;
                m = std::max(m, std::abs(v));
            }
            // diagonal from the closed form
            const double d = alpha_.deriv(x) * frozen_kernel_moment(a_node_[i]);
            f_tri_[row_offset(i) + i] = scale * d;
            row_max[i] = std::max(m, std::abs(d));
        });
        for (double v : row_max) max_kernel_ = std::max(max_kernel_, v);
    }

    // M2 by midpoint-frozen product integration (exponent and smooth factor
    // frozen per cell, the ln u weight integrated exactly), plus the
    // increment-integral weights. Cell k of the grid contributes to node i
    // through u = x - t in [(i-k-1) dt, (i-k) dt].
    void precompute_g0_weights(unsigned threads) {
        std::vector<double> a_mid(n_), s_mid(n_), psi_mid(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            const double tm = dt_ * (static_cast<double>(k) + 0.5);
            a_mid[k] = alpha_.eval(tm);
            s_mid[k] = -alpha_.deriv(tm) * gamma_fn(a_mid[k]);
            psi_mid[k] = digamma_fn(a_mid[k]);
        }
        m1_plus_m2_.assign(n_ + 1, 0.0);
        w_near_.assign(row_offset(n_ + 1), 0.0);
        w_far_.assign(row_offset(n_ + 1), 0.0);
        const double gamma_a0 = gamma_fn(a_node_[0]);
        const double a0 = a_node_[0];

        parallel_for(n_, threads, [&](std::size_t idx) {
            const std::size_t i = idx + 1;
            const double x = dt_ * static_cast<double>(i);
            std::vector<double> m2_panel(i);
            for (std::size_t k = 0; k < i; ++k) {
                const double u_hi = dt_ * static_cast<double>(i - k);
                const double u_lo = u_hi - dt_;
                // M2 cell: frozen exponent a_mid, smooth factor s_mid,
                // ln u integrated in closed form
                m2_panel[k] = s_mid[k] *
                              (detail::power_log_moment0(a_mid[k], u_lo, u_hi) -
                               psi_mid[k] * detail::power_moment0(a_mid[k], u_lo, u_hi));

                // increment integral: weight (x-t)^{-(alpha+1)} against the
                // affine interpolant of alpha(t)Gamma(alpha(t)) (g(x)-g(t));
                // the interpolant vanishes at t = x on the touching cell, so
                // only the first moment appears there
                const double nu = a_mid[k] + 1.0;
                const std::size_t w_idx = row_offset(i) + k;
                if (k + 1 == i) {
                    const double m1 = detail::power_moment1(nu, 0.0, dt_);
                    w_near_[w_idx] = 0.0;
                    w_far_[w_idx] = m1 / dt_; // multiplies c_k (g_i - g_k)
                } else {
                    const double m0 = detail::power_moment0(nu, u_lo, u_hi);
                    const double m1 = detail::power_moment1(nu, u_lo, u_hi);
                    const double shifted = (m1 - u_lo * m0) / dt_;
                    w_far_[w_idx] = shifted;       // multiplies c_k (g_i - g_k)
                    w_near_[w_idx] = m0 - shifted; // multiplies c_{k+1} (g_i - g_{k+1})
                }
            }
            m1_plus_m2_[i] = gamma_a0 * std::pow(x, -a0) + pairwise_sum(m2_panel);
        });
    }

    double forcing_unchecked(const SampledPath& g, std::size_t i) const {
        const double gi = g[i];
        const std::size_t base = row_offset(i);
        double acc = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            acc += w_far_[base + k] * c_node_[k] * (gi - g[k]);
            if (k + 1 < i) acc += w_near_[base + k] * c_node_[k + 1] * (gi - g[k + 1]);
        }
        return (gi * m1_plus_m2_[i] + acc) / beta_node_[i];
    }

    std::vector<double> forcing_vector(const SampledPath& g) const {
        std::vector<double> forcing(n_ + 1, 0.0);
        for (std::size_t i = 1; i <= n_; ++i) forcing[i] = forcing_unchecked(g, i);
        return forcing;
    }

    // forward substitution of the trapezoidal discretization; f_i appears on
    // the diagonal with weight dt F(x_i, x_i)/2
    void march(const std::vector<double>& forcing, double f0, std::vector<double>& f) const {
        f[0] = f0;
        for (std::size_t i = 1; i <= n_; ++i) {
            const std::size_t base = row_offset(i);
            double s = 0.5 * f[0] * f_tri_[base];
            for (std::size_t j = 1; j < i; ++j) s += f[j] * f_tri_[base + j];
            const double denom = 1.0 - 0.5 * dt_ * f_tri_[base + i];
            if (std::abs(denom) < 1e-8)
                throw NumericError("DerivativeOperator: near-singular diagonal in the march");
            f[i] = (forcing[i] + dt_ * s) / denom;
        }
    }

    // truncated representation f = sum_m V^m G0 with V the trapezoidal
    // integral operator; the discrete L2 norm of each term gates truncation
    std::vector<double> series_sum(const std::vector<double>& forcing, double f0,
                                   std::size_t& used, std::map<std::string, double>* norms) const {
        std::vector<double> total(n_ + 1, 0.0), term(n_ + 1, 0.0), next(n_ + 1, 0.0);
        // the boundary value enters once, as part of the forcing; repeated V
        // applications then act on interior values only, matching the march
        for (std::size_t i = 1; i <= n_; ++i)
            term[i] = forcing[i] + 0.5 * dt_ * f0 * f_tri_[row_offset(i)];
        term[0] = 0.0;
        const double scale = std::max(l2_norm(term), 1e-300);
        double previous_norm = scale;
        for (std::size_t m = 0;; ++m) {
            for (std::size_t i = 1; i <= n_; ++i) total[i] += term[i];
            const double tn = l2_norm(term);
            if (norms && m <= 24) (*norms)["series_term_norm_" + std::to_string(m)] = tn;
            ++used;
            if (tn <= cfg_.series_tolerance * scale) break;
            if (m + 1 >= cfg_.max_series_terms)
                throw ConvergenceError(
                    "mf_derivative_series: no convergence within max series terms (last norm " +
                    std::to_string(tn) + ", previous " + std::to_string(previous_norm) + ")");
            previous_norm = tn;
            // next = V[term]
            for (std::size_t i = 1; i <= n_; ++i) {
                const std::size_t base = row_offset(i);
                double s = 0.0;
                for (std::size_t j = 1; j < i; ++j) s += term[j] * f_tri_[base + j];
                s += 0.5 * term[i] * f_tri_[base + i];
                next[i] = dt_ * s;
            }
            next[0] = 0.0;
            std::swap(term, next);
        }
        return total;
    }

    double l2_norm(const std::vector<double>& v) const {
        std::vector<double> sq(n_);
        for (std::size_t i = 1; i <= n_; ++i) sq[i - 1] = v[i] * v[i];
        return std::sqrt(pairwise_sum(sq) * dt_);
    }

    void fill_common_diagnostics(OperatorResult& out, const std::vector<double>& forcing) const {
        double g0_max = 0.0;
        for (std::size_t i = 1; i <= n_; ++i) g0_max = std::max(g0_max, std::abs(forcing[i]));
        out.diagnostics["max_kernel"] = max_kernel_;
        out.diagnostics["g0_max"] = g0_max;
        out.diagnostics["kernel_table_nodes"] = static_cast<double>(
            alpha_.is_constant() ? 0 : cfg_.kernel_table);
        out.diagnostics["kernel_quadrature_panels"] = static_cast<double>(cfg_.kernel_rule.subdivisions);
        out.diagnostics["grid_segments"] = static_cast<double>(n_);
    }
};

// --- spec-level operations ---------------------------------------------------

inline OperatorResult mf_derivative(const SampledPath& g, const RegularityFunction& alpha,
                                    DerivativeConfig cfg, unsigned threads = 1) {
    cfg.grid_segments = g.segments();
    DerivativeOperator op(alpha, cfg, threads);
    return op.solve(g);
}

inline OperatorResult mf_derivative_series(const SampledPath& g, const RegularityFunction& alpha,
                                           DerivativeConfig cfg, unsigned threads = 1) {
    cfg.solver = DerivativeConfig::Solver::picard_series;
    return mf_derivative(g, alpha, cfg, threads);
}

namespace detail {

// int_0^x Gamma(alpha(t)) g(t) (x-t)^{-alpha(t)} dt; used by the appendix
// check. The panel edges scale with x (t_k = x k/N) so the quadrature error
// is a smooth function of the upper limit and cancels in the centered
// difference instead of being amplified by 1/delta.
inline double raw_kernel_integral(const SampledPath& g, const RegularityFunction& alpha, double x) {
    const std::size_t cells = g.segments();
    std::vector<double> panel(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const double t_lo = x * static_cast<double>(k) / static_cast<double>(cells);
        const double t_hi = x * static_cast<double>(k + 1) / static_cast<double>(cells);
        const double u_hi = x - t_lo;
        const double u_lo = x - t_hi;
        const double b = alpha.eval(0.5 * (t_lo + t_hi));
        const double f_lo = gamma_fn(alpha.eval(t_lo)) * g.at_time(t_lo);
        const double f_hi = gamma_fn(alpha.eval(t_hi)) * g.at_time(t_hi);
        // affine in u: value f_hi at u_lo, f_lo at u_hi
        const double slope = (f_lo - f_hi) / (u_hi - u_lo);
        const double a0 = f_hi - slope * u_lo;
        panel[k] = a0 * power_moment0(b, u_lo, u_hi) + slope * power_moment1(b, u_lo, u_hi);
    }
    return pairwise_sum(panel);
}

// un-normalized G0 at arbitrary x in (0, T]:
//   g(x)(M1 + M2)(x) + int_0^x alpha Gamma(alpha) (g(x)-g(t)) (x-t)^{-alpha-1} dt
inline double g0_unnormalized(const SampledPath& g, const RegularityFunction& alpha, double x) {
    const double dt = g.dt();
    const double gx = g.at_time(x);
    const std::size_t cells = static_cast<std::size_t>(std::ceil(x / dt - 1e-12));
    std::vector<double> m2_panel, inc_panel;
    m2_panel.reserve(cells);
    inc_panel.reserve(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const double t_lo = dt * static_cast<double>(k);
        const double t_hi = std::min(dt * static_cast<double>(k + 1), x);
        const double u_hi = x - t_lo;
        const double u_lo = x - t_hi;
        const double tm = 0.5 * (t_lo + t_hi);
        const double am = alpha.eval(tm);

        m2_panel.push_back(-alpha.deriv(tm) * gamma_fn(am) *
                           (power_log_moment0(am, u_lo, u_hi) -
                            digamma_fn(am) * power_moment0(am, u_lo, u_hi)));

        const double nu = am + 1.0;
        const double w_lo = alpha.eval(t_lo) * gamma_fn(alpha.eval(t_lo)) * (gx - g.at_time(t_lo));
        const double w_hi = alpha.eval(t_hi) * gamma_fn(alpha.eval(t_hi)) * (gx - g.at_time(t_hi));
        if (u_lo <= 0.0) {
            // cell touching the singularity: interpolant pinned to 0 at u = 0
            inc_panel.push_back(w_lo / u_hi * power_moment1(nu, 0.0, u_hi));
        } else {
            const double slope = (w_lo - w_hi) / (u_hi - u_lo);
            const double a0 = w_hi - slope * u_lo;
            inc_panel.push_back(a0 * power_moment0(nu, u_lo, u_hi) +
                                slope * power_moment1(nu, u_lo, u_hi));
        }
    }
    const double a0x = alpha.eval(0.0);
    const double m1 = gamma_fn(a0x) * std::pow(x, -a0x);
    return gx * (m1 + pairwise_sum(m2_panel)) + pairwise_sum(inc_panel);
}

} // namespace detail

// G0(g)(x); defined for x > 0 only and requires g(0) = 0.
inline double g0(const SampledPath& g, const RegularityFunction& alpha, double x,
                 const DerivativeConfig& cfg) {
    cfg.validate(alpha);
    if (!(x > 0.0) || x > alpha.horizon() * (1.0 + 1e-12))
        throw std::domain_error("g0: x must lie in (0, T]");
    if (std::abs(g[0]) > 1e-12 * std::max(1.0, std::abs(g[g.segments()])))
        throw std::invalid_argument("g0: g(0) must vanish");
    const double a_x = alpha.eval(x);
    return detail::g0_unnormalized(g, alpha, x) * std::sin(std::numbers::pi * a_x) /
           std::numbers::pi;
}

struct AppendixCheck {
    double lhs = 0.0; // centered difference of the raw kernel integral
    double rhs = 0.0; // decomposition through M1 + M2 and the increment integral
    double gap = 0.0;
};

inline AppendixCheck appendix_identity_check(const SampledPath& g, const RegularityFunction& alpha,
                                             double x, double delta) {
    if (!(delta > 0.0) || x - delta <= 0.0 || x + delta > alpha.horizon() * (1.0 + 1e-12))
        throw std::invalid_argument("appendix_identity_check: need 0 < x-delta and x+delta <= T");
    if (std::abs(g[0]) > 1e-12 * std::max(1.0, std::abs(g[g.segments()])))
        throw std::invalid_argument("appendix_identity_check: g(0) must vanish");
    AppendixCheck out;
    out.lhs = (detail::raw_kernel_integral(g, alpha, x + delta) -
               detail::raw_kernel_integral(g, alpha, x - delta)) /
              (2.0 * delta);
    out.rhs = detail::g0_unnormalized(g, alpha, x);
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

} // namespace multifrac

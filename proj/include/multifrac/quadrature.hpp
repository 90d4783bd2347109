#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "multifrac/errors.hpp"

// Singularity-aware quadrature primitives.
//
// Two integral shapes cover every operator in the library:
//
//   (a)  int_0^x f(t) (x - t)^{-beta(t)} dt        power singularity at t = x
//   (b)  int_0^1 psi(tau) dtau                     psi with ln(tau), ln(1-tau)
//                                                  and (1-tau)^{-c}, c < 1 ends
//
// (a) is handled by product integration: per panel the exponent is frozen at
// the midpoint, f is interpolated affinely, and the frozen-power moments are
// integrated in closed form. (b) uses a composite Gauss rule on a mesh graded
// polynomially toward both endpoints, symmetric about tau = 1/2.

namespace multifrac {

struct QuadratureRule {
    enum class Kind { product_integration, graded_mesh };

    Kind kind = Kind::product_integration;
    std::size_t subdivisions = 1024; // panels (per half for graded_mesh)
    double grading = 3.0;            // mesh grading exponent, graded_mesh only

    void validate() const {
        if (subdivisions < 8) throw ConfigError("QuadratureRule: subdivisions must be >= 8");
        if (kind == Kind::graded_mesh && (grading < 1.0 || grading > 5.0))
            throw ConfigError("QuadratureRule: grading exponent must lie in [1, 5]");
    }

    static QuadratureRule product(std::size_t panels) {
        return {Kind::product_integration, panels, 3.0};
    }
    static QuadratureRule graded(std::size_t panels, double exponent = 3.0) {
        return {Kind::graded_mesh, panels, exponent};
    }
};

namespace detail {

// Gauss-Legendre nodes/weights on [0,1], computed once per order by Newton
// iteration on the Legendre recurrence.
inline const std::vector<std::pair<double, double>>& gauss_legendre_unit(std::size_t n) {
    static thread_local std::map<std::size_t, std::vector<std::pair<double, double>>> table;
    auto it = table.find(n);
    if (it != table.end()) return it->second;
    std::vector<std::pair<double, double>> cache(n, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        // Chebyshev initial guess on [-1,1]
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        cache[i] = {0.5 * (1.0 - z), 1.0 / ((1.0 - z * z) * pp * pp)};
    }
    return table.emplace(n, std::move(cache)).first->second;
}

// closed-form moments of the frozen power weight over [u_lo, u_hi], u >= 0:
//   m0 = int u^{-b} du,  m1 = int u^{1-b} du
inline double power_moment0(double b, double u_lo, double u_hi) {
    const double e = 1.0 - b;
    return (std::pow(u_hi, e) - std::pow(u_lo, e)) / e;
}
inline double power_moment1(double b, double u_lo, double u_hi) {
    const double e = 2.0 - b;
    return (std::pow(u_hi, e) - std::pow(u_lo, e)) / e;
}
// log-weighted moments: int u^{-b} ln u du and int u^{1-b} ln u du
inline double power_log_moment0(double b, double u_lo, double u_hi) {
    const double e = 1.0 - b;
    const double hi = std::pow(u_hi, e) * (std::log(u_hi) - 1.0 / e);
    const double lo = u_lo > 0.0 ? std::pow(u_lo, e) * (std::log(u_lo) - 1.0 / e) : 0.0;
    return (hi - lo) / e;
}
inline double power_log_moment1(double b, double u_lo, double u_hi) {
    const double e = 2.0 - b;
    const double hi = std::pow(u_hi, e) * (std::log(u_hi) - 1.0 / e);
    const double lo = u_lo > 0.0 ? std::pow(u_lo, e) * (std::log(u_lo) - 1.0 / e) : 0.0;
    return (hi - lo) / e;
}

} // namespace detail

// Deterministic pairwise summation; the reduction order is fixed by the data
// layout, never by thread scheduling.
inline double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// int_0^x f(t) (x-t)^{-beta(t)} dt by product integration. Panels are laid in
// u = x - t; with Kind::graded_mesh they shrink polynomially toward u = 0 so
// that a rapidly varying f near the singular end stays resolved.
template <class F, class B>
double power_singular_integral(F&& f, B&& beta, double x, const QuadratureRule& rule) {
    rule.validate();
    if (!(x > 0.0)) throw std::domain_error("power_singular_integral: x must be positive");
    const std::size_t n = rule.subdivisions;
    const bool graded = rule.kind == QuadratureRule::Kind::graded_mesh;

    auto edge = [&](std::size_t k) {
        const double r = static_cast<double>(k) / static_cast<double>(n);
        return graded ? x * std::pow(r, rule.grading) : x * r;
    };

    std::vector<double> panel(n);
    double u_hi = x; // iterate panels from the far edge toward the singularity
    double f_at_uhi = f(0.0);
    for (std::size_t k = n; k-- > 0;) {
        const double u_lo = edge(k);
        const double t_mid = x - 0.5 * (u_lo + u_hi);
        const double b = beta(t_mid);
        if (!(b > 0.0) || !(b < 1.0))
            throw std::domain_error("power_singular_integral: beta must lie in (0,1) on [0,x]");
        const double f_at_ulo = f(x - u_lo);
        // affine in u: f ~ A + B u
        const double slope = (f_at_uhi - f_at_ulo) / (u_hi - u_lo);
        const double A = f_at_ulo - slope * u_lo;
        panel[k] = A * detail::power_moment0(b, u_lo, u_hi) +
                   slope * detail::power_moment1(b, u_lo, u_hi);
        u_hi = u_lo;
        f_at_uhi = f_at_ulo;
    }
    return pairwise_sum(panel);
}

template <class F>
double power_singular_integral(F&& f, double beta_const, double x, const QuadratureRule& rule) {
    return power_singular_integral(std::forward<F>(f), [beta_const](double) { return beta_const; },
                                   x, rule);
}

// int_0^1 psi(tau) dtau for psi with at worst logarithmic singularities at the
// endpoints and a power singularity (1-tau)^{-c}, c < 1, at tau = 1. Composite
// Gauss on a polynomially graded mesh, symmetric about 1/2.
template <class Psi>
double log_singular_unit_integral(Psi&& psi, const QuadratureRule& rule) {
    if (rule.subdivisions < 8) throw ConfigError("QuadratureRule: subdivisions must be >= 8");
    const double q = rule.grading;
    if (q < 1.0 || q > 5.0) throw ConfigError("QuadratureRule: grading exponent must lie in [1, 5]");
    const std::size_t m = rule.subdivisions;
    const auto& gauss = detail::gauss_legendre_unit(12);

    std::vector<double> cell(2 * m);
    auto add_half = [&](bool mirrored, std::size_t base) {
        // cells on [0, 1/2] graded toward 0; mirrored == true maps them to
        // [1/2, 1] graded toward 1
        double lo = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double hi =
                0.5 * std::pow(static_cast<double>(k + 1) / static_cast<double>(m), q);
            const double width = hi - lo;
            double acc = 0.0;
            for (const auto& [node, weight] : gauss) {
                const double u = lo + width * node;
                const double tau = mirrored ? 1.0 - u : u;
                const double value = psi(tau);
                if (!std::isfinite(value))
                    throw NumericError("log_singular_unit_integral: non-finite integrand value");
                acc += weight * value;
            }
            cell[base + k] = acc * width;
            lo = hi;
        }
    };
    add_half(false, 0);
    add_half(true, m);
    return pairwise_sum(cell);
}

} // namespace multifrac

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multifrac/errors.hpp"

// Regularity functions alpha : [0,T] -> [a,b] subset (0,1) and uniformly
// sampled paths. Every family is closed-form with an exact analytic
// derivative, so C1 norms and range bounds carry no differentiation error.

namespace multifrac {

class RegularityFunction {
  public:
    enum class Family { constant, affine, sinusoidal, logistic };

    static RegularityFunction constant(double value, double horizon) {
        return RegularityFunction(Family::constant, {value, 0, 0, 0}, horizon);
    }
    // a0 + slope * t
    static RegularityFunction affine(double a0, double slope, double horizon) {
        return RegularityFunction(Family::affine, {a0, slope, 0, 0}, horizon);
    }
    // base + amp * sin(omega * t + phase)
    static RegularityFunction sinusoidal(double base, double amp, double omega, double phase,
                                         double horizon) {
        return RegularityFunction(Family::sinusoidal, {base, amp, omega, phase}, horizon);
    }
    // base + scale / (1 + exp(-rate * (t - center)))
    static RegularityFunction logistic(double base, double scale, double rate, double center,
                                       double horizon) {
        return RegularityFunction(Family::logistic, {base, scale, rate, center}, horizon);
    }

    RegularityFunction(Family family, std::array<double, 4> params, double horizon)
        : family_(family), p_(params), horizon_(horizon) {
        if (!(horizon > 0.0)) throw ConfigError("RegularityFunction: horizon must be positive");
        auto [lo, hi] = analytic_range();
        lo_ = lo;
        hi_ = hi;
        check_declared_range();
    }

    RegularityFunction(Family family, std::array<double, 4> params, double horizon,
                       double declared_lo, double declared_hi)
        : family_(family), p_(params), horizon_(horizon), lo_(declared_lo), hi_(declared_hi) {
        if (!(horizon > 0.0)) throw ConfigError("RegularityFunction: horizon must be positive");
        check_declared_range();
    }

    double operator()(double t) const { return eval(t); }

    double eval(double t) const {
        check_domain(t);
        return eval_raw(t);
    }

    double deriv(double t) const {
        check_domain(t);
        switch (family_) {
            case Family::constant: return 0.0;
            case Family::affine: return p_[1];
            case Family::sinusoidal: return p_[1] * p_[2] * std::cos(p_[2] * t + p_[3]);
            case Family::logistic: {
                const double e = std::exp(-p_[2] * (t - p_[3]));
                const double d = 1.0 + e;
                return p_[1] * p_[2] * e / (d * d);
            }
        }
        return 0.0;
    }

    // exact (inf, sup) over [0,T]
    std::pair<double, double> range_bounds() const { return {lo_, hi_}; }

    // sup |alpha| + sup |alpha'| over [0,T]
    double c1_norm() const {
        double sup_deriv = 0.0;
        switch (family_) {
            case Family::constant: sup_deriv = 0.0; break;
            case Family::affine: sup_deriv = std::abs(p_[1]); break;
            case Family::sinusoidal: {
                // |amp * omega * cos(omega t + phase)|: attained at a zero of the
                // phase if one falls in [0,T], else at an endpoint
                const double amp = std::abs(p_[1] * p_[2]);
                if (contains_phase_multiple(p_[2], p_[3], std::numbers::pi)) {
                    sup_deriv = amp;
                } else {
                    sup_deriv = std::max(std::abs(deriv(0.0)), std::abs(deriv(horizon_)));
                }
                break;
            }
            case Family::logistic: {
                // derivative is unimodal with peak at t = center
                double peak = std::abs(p_[1] * p_[2]) * 0.25;
                if (p_[3] < 0.0 || p_[3] > horizon_)
                    peak = std::max(std::abs(deriv(0.0)), std::abs(deriv(horizon_)));
                sup_deriv = peak;
            }
        }
        return std::max(std::abs(lo_), std::abs(hi_)) + sup_deriv;
    }

    double horizon() const { return horizon_; }
    Family family() const { return family_; }
    const std::array<double, 4>& params() const { return p_; }
    bool is_constant() const { return family_ == Family::constant; }

    // same family shifted by delta (used to pass from h to h + 1/2)
    RegularityFunction shifted(double delta) const {
        auto p = p_;
        p[0] += delta;
        return RegularityFunction(family_, p, horizon_);
    }

  private:
    Family family_;
    std::array<double, 4> p_;
    double horizon_;
    double lo_ = 0.0, hi_ = 0.0;

    void check_domain(double t) const {
        // tolerate rounding at the edges; grids place points at exactly T
        const double slack = 1e-12 * std::max(1.0, horizon_);
        if (t < -slack || t > horizon_ + slack)
            throw std::domain_error("RegularityFunction: argument outside [0, T]");
    }

    double eval_raw(double t) const {
        switch (family_) {
            case Family::constant: return p_[0];
            case Family::affine: return p_[0] + p_[1] * t;
            case Family::sinusoidal: return p_[0] + p_[1] * std::sin(p_[2] * t + p_[3]);
            case Family::logistic: return p_[0] + p_[1] / (1.0 + std::exp(-p_[2] * (t - p_[3])));
        }
        return 0.0;
    }

    bool contains_phase_multiple(double omega, double phase, double offset) const {
        // does omega*t + phase hit offset + k*pi for some t in [0,T]?
        if (omega == 0.0) return false;
        const double lo = phase, hi = omega * horizon_ + phase;
        const double a = std::min(lo, hi), b = std::max(lo, hi);
        const double k = std::ceil((a - offset) / std::numbers::pi);
        return offset + k * std::numbers::pi <= b;
    }

    std::pair<double, double> analytic_range() const {
        switch (family_) {
            case Family::constant: return {p_[0], p_[0]};
            case Family::affine: {
                const double v0 = p_[0], v1 = p_[0] + p_[1] * horizon_;
                return {std::min(v0, v1), std::max(v0, v1)};
            }
            case Family::sinusoidal: {
                double lo = std::min(eval_raw(0.0), eval_raw(horizon_));
                double hi = std::max(eval_raw(0.0), eval_raw(horizon_));
                // interior extrema where omega t + phase = pi/2 + k pi
                if (p_[2] != 0.0) {
                    const double half_pi = 0.5 * std::numbers::pi;
                    const double th0 = std::min(p_[3], p_[2] * horizon_ + p_[3]);
                    const double th1 = std::max(p_[3], p_[2] * horizon_ + p_[3]);
                    for (double k = std::ceil((th0 - half_pi) / std::numbers::pi);
                         half_pi + k * std::numbers::pi <= th1; k += 1.0) {
                        const double t = (half_pi + k * std::numbers::pi - p_[3]) / p_[2];
                        const double v = eval_raw(std::clamp(t, 0.0, horizon_));
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                }
                return {lo, hi};
            }
            case Family::logistic: {
                // monotone in t, endpoints suffice; keep a grid scan as a guard
                double lo = std::min(eval_raw(0.0), eval_raw(horizon_));
                double hi = std::max(eval_raw(0.0), eval_raw(horizon_));
                constexpr std::size_t scan = 10000;
                for (std::size_t i = 1; i < scan; ++i) {
                    const double v = eval_raw(horizon_ * static_cast<double>(i) / scan);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                return {lo, hi};
            }
        }
        return {0.0, 0.0};
    }

    void check_declared_range() const {
        if (!(lo_ > 0.0 && hi_ < 1.0 && lo_ <= hi_))
            throw ConfigError("RegularityFunction: range must satisfy 0 < a <= b < 1");
        // dense-grid containment check against the declared range
        constexpr std::size_t n = 4096;
        const double slack = 1e-12;
        for (std::size_t i = 0; i <= n; ++i) {
            const double v = eval_raw(horizon_ * static_cast<double>(i) / n);
            if (v < lo_ - slack || v > hi_ + slack)
                throw ConfigError("RegularityFunction: values escape the declared range [a, b]");
        }
    }
};

// Values of a function or process on the uniform grid 0 = t_0 < ... < t_n = T.
class SampledPath {
  public:
    SampledPath() = default;

    SampledPath(double horizon, std::vector<double> values)
        : horizon_(horizon), values_(std::move(values)) {
        if (!(horizon_ > 0.0)) throw std::invalid_argument("SampledPath: horizon must be positive");
        if (values_.size() < 3)
            throw std::invalid_argument("SampledPath: need at least 2 grid segments");
    }

    template <class F>
    static SampledPath from_function(F&& f, double horizon, std::size_t segments) {
        std::vector<double> v(segments + 1);
        for (std::size_t i = 0; i <= segments; ++i)
            v[i] = f(horizon * static_cast<double>(i) / static_cast<double>(segments));
        return SampledPath(horizon, std::move(v));
    }

    static SampledPath zeros(double horizon, std::size_t segments) {
        return SampledPath(horizon, std::vector<double>(segments + 1, 0.0));
    }

    std::size_t segments() const { return values_.size() - 1; }
    std::size_t points() const { return values_.size(); }
    double horizon() const { return horizon_; }
    double dt() const { return horizon_ / static_cast<double>(segments()); }
    double time(std::size_t i) const {
        return horizon_ * static_cast<double>(i) / static_cast<double>(segments());
    }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    // piecewise-linear evaluation between grid nodes
    double at_time(double t) const {
        if (t < 0.0 || t > horizon_ * (1.0 + 1e-12))
            throw std::domain_error("SampledPath: time outside [0, T]");
        const double pos = std::min(t / dt(), static_cast<double>(segments()));
        const auto i = static_cast<std::size_t>(pos);
        if (i >= segments()) return values_.back();
        const double w = pos - static_cast<double>(i);
        return values_[i] * (1.0 - w) + values_[i + 1] * w;
    }

  private:
    double horizon_ = 1.0;
    std::vector<double> values_;
};

// Discrete variable-order Hoelder norm:
//   |f(0)| + max_{i != j} |f_i - f_j| / |t_i - t_j|^{max(alpha_i, alpha_j)}
// over all grid pairs (no subsampling; quadratic in the grid size).
inline double holder_norm_variable(const SampledPath& path, const RegularityFunction& alpha) {
    if (path.points() < 3) throw std::invalid_argument("holder_norm_variable: need n >= 2");
    if (std::abs(path.horizon() - alpha.horizon()) > 1e-12 * std::max(1.0, alpha.horizon()))
        throw std::invalid_argument("holder_norm_variable: path and alpha horizons differ");
    const std::size_t n = path.segments();
    std::vector<double> a(n + 1);
    for (std::size_t i = 0; i <= n; ++i) a[i] = alpha.eval(path.time(i));

    double sup = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n; ++j) {
            const double gap = path.time(j) - path.time(i);
            const double quot =
                std::abs(path[j] - path[i]) / std::pow(gap, std::max(a[i], a[j]));
            sup = std::max(sup, quot);
        }
    }
    return std::abs(path[0]) + sup;
}

} // namespace multifrac

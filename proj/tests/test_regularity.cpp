#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "multifrac/regularity.hpp"

using namespace multifrac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("eval per family") {
    CHECK_THAT(RegularityFunction::constant(0.3, 1.0).eval(0.7), WithinRel(0.3, 1e-15));
    CHECK_THAT(RegularityFunction::affine(0.2, 0.1, 1.0).eval(1.0), WithinRel(0.3, 1e-15));
    const auto sin_rf = RegularityFunction::sinusoidal(0.25, 0.05, 2.0 * std::numbers::pi, 0.0, 1.0);
    CHECK_THAT(sin_rf.eval(0.25), WithinRel(0.30, 1e-12));
    CHECK_THROWS_AS(sin_rf.eval(1.5), std::domain_error);
    CHECK_THROWS_AS(sin_rf.eval(-0.5), std::domain_error);
}

TEST_CASE("deriv per family") {
    CHECK_THAT(RegularityFunction::constant(0.3, 1.0).deriv(0.4), WithinAbs(0.0, 0.0));
    CHECK_THAT(RegularityFunction::affine(0.2, 0.1, 1.0).deriv(0.5), WithinRel(0.1, 1e-15));
    const auto sin_rf = RegularityFunction::sinusoidal(0.25, 0.05, 2.0 * std::numbers::pi, 0.0, 1.0);
    CHECK_THAT(sin_rf.deriv(0.0), WithinRel(0.1 * std::numbers::pi, 1e-13));
}

TEST_CASE("deriv matches a centered difference at step 1e-5") {
    const double step = 1e-5;
    const std::array<RegularityFunction, 4> battery{
        RegularityFunction::constant(0.3, 1.0),
        RegularityFunction::affine(0.2, 0.1, 1.0),
        RegularityFunction::sinusoidal(0.25, 0.05, 2.0 * std::numbers::pi, 0.4, 1.0),
        RegularityFunction::logistic(0.2, 0.3, 4.0, 0.5, 1.0)};
    for (const auto& rf : battery)
        for (double t : {0.1, 0.33, 0.5, 0.77, 0.9}) {
            const double fd = (rf.eval(t + step) - rf.eval(t - step)) / (2.0 * step);
            CHECK_THAT(rf.deriv(t), WithinAbs(fd, 1e-6));
        }
}

TEST_CASE("range bounds per family") {
    auto check_range = [](const RegularityFunction& rf, double lo, double hi) {
        const auto [a, b] = rf.range_bounds();
        CHECK_THAT(a, WithinAbs(lo, 1e-12));
        CHECK_THAT(b, WithinAbs(hi, 1e-12));
    };
    check_range(RegularityFunction::constant(0.3, 1.0), 0.3, 0.3);
    check_range(RegularityFunction::affine(0.2, 0.1, 1.0), 0.2, 0.3);
    check_range(RegularityFunction::sinusoidal(0.25, 0.05, 2.0 * std::numbers::pi, 0.0, 1.0),
                0.2, 0.3);
}

TEST_CASE("c1 norm per family") {
    CHECK_THAT(RegularityFunction::constant(0.3, 1.0).c1_norm(), WithinRel(0.3, 1e-14));
    CHECK_THAT(RegularityFunction::affine(0.2, 0.1, 1.0).c1_norm(), WithinRel(0.4, 1e-14));
    CHECK_THAT(
        RegularityFunction::sinusoidal(0.25, 0.05, 2.0 * std::numbers::pi, 0.0, 1.0).c1_norm(),
        WithinRel(0.3 + 0.1 * std::numbers::pi, 1e-13));
}

TEST_CASE("construction rejects ranges escaping (0,1)") {
    CHECK_THROWS_AS(RegularityFunction::affine(0.5, 0.6, 1.0), ConfigError);
    CHECK_THROWS_AS(RegularityFunction::constant(0.3, -1.0), ConfigError);
    // declared range must contain the values
    CHECK_THROWS_AS(RegularityFunction(RegularityFunction::Family::affine, {0.2, 0.1, 0, 0}, 1.0,
                                       0.22, 0.3),
                    ConfigError);
}

TEST_CASE("range bounds respect eval on a dense grid, random draws") {
    std::mt19937_64 rng(12345);
    auto uniform = [&rng](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    for (int trial = 0; trial < 1000; ++trial) {
        RegularityFunction rf = [&]() {
            switch (trial % 4) {
                case 0: return RegularityFunction::constant(uniform(0.05, 0.95), 1.0);
                case 1: {
                    const double a0 = uniform(0.1, 0.6);
                    return RegularityFunction::affine(a0, uniform(-0.08, 0.3), 1.0);
                }
                case 2: {
                    const double base = uniform(0.3, 0.6);
                    return RegularityFunction::sinusoidal(base, uniform(0.01, 0.2),
                                                          uniform(0.5, 9.0), uniform(0.0, 6.28),
                                                          1.0);
                }
                default:
                    return RegularityFunction::logistic(uniform(0.1, 0.4), uniform(0.05, 0.4),
                                                        uniform(0.5, 9.0), uniform(0.0, 1.0), 1.0);
            }
        }();
        const auto [lo, hi] = rf.range_bounds();
        double seen_lo = 1e300, seen_hi = -1e300;
        for (int i = 0; i <= 10000; ++i) {
            const double v = rf.eval(i / 10000.0);
            seen_lo = std::min(seen_lo, v);
            seen_hi = std::max(seen_hi, v);
        }
        REQUIRE(seen_lo >= lo - 1e-9);
        REQUIRE(seen_hi <= hi + 1e-9);
        // analytic families: bounds should be attained to grid resolution
        REQUIRE(seen_lo - lo <= 1e-4);
        REQUIRE(hi - seen_hi <= 1e-4);
    }
}

TEST_CASE("holder norm of the identity at constant order 1/2") {
    const auto path = SampledPath::from_function([](double t) { return t; }, 1.0, 100);
    const auto alpha = RegularityFunction::constant(0.5, 1.0);
    // sup |t-s| / |t-s|^{1/2} = 1 attained at |t-s| = 1, and f(0) = 0
    CHECK_THAT(holder_norm_variable(path, alpha), WithinRel(1.0, 1e-12));
}

TEST_CASE("holder norm of constants") {
    const auto zero = SampledPath::zeros(1.0, 64);
    const auto alpha = RegularityFunction::constant(0.4, 1.0);
    CHECK(holder_norm_variable(zero, alpha) == 0.0);
    const auto flat = SampledPath::from_function([](double) { return -2.5; }, 1.0, 64);
    CHECK_THAT(holder_norm_variable(flat, alpha), WithinRel(2.5, 1e-15));
}

TEST_CASE("holder norm is monotone non-increasing in the order") {
    // gaps never exceed 1, so a larger exponent divides by a smaller power
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(33);
        for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
        const SampledPath path(1.0, v);
        double prev = 1e300;
        for (double level : {0.2, 0.35, 0.5, 0.65, 0.8}) {
            const double norm =
                holder_norm_variable(path, RegularityFunction::constant(level, 1.0));
            CHECK(norm <= prev * (1.0 + 1e-12));
            prev = norm;
        }
    }
}

TEST_CASE("paths starting at zero obey the growth bound of the norm") {
    // |f(x)| <= ||f|| x^{alpha(x)} for f(0) = 0
    const auto alpha = RegularityFunction::affine(0.2, 0.1, 1.0);
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(65, 0.0);
        for (std::size_t i = 1; i < v.size(); ++i)
            v[i] = v[i - 1] + (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.2;
        const SampledPath path(1.0, v);
        const double norm = holder_norm_variable(path, alpha);
        for (std::size_t i = 1; i < v.size(); ++i) {
            const double x = path.time(i);
            REQUIRE(std::abs(path[i]) <= norm * std::pow(x, alpha.eval(x)) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("sampled path basics") {
    CHECK_THROWS_AS(SampledPath(1.0, {0.0, 1.0}), std::invalid_argument);
    const auto p = SampledPath::from_function([](double t) { return 2.0 * t; }, 2.0, 4);
    CHECK_THAT(p.dt(), WithinRel(0.5, 1e-15));
    CHECK_THAT(p.at_time(0.75), WithinRel(1.5, 1e-14));
    CHECK_THROWS_AS(p.at_time(2.5), std::domain_error);
    const auto shifted = RegularityFunction::affine(0.1, 0.1, 1.0).shifted(0.5);
    CHECK_THAT(shifted.eval(1.0), WithinRel(0.7, 1e-14));
}

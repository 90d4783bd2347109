// Regenerates tests/fixtures/derived_fixtures.csv: brute-force reference
// values for the quantities that have no closed form, with the refinement
// evidence (the change of the last mesh doubling) recorded per row.
//
// Usage: make_fixtures <output.csv>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "../tests/support/brute_force.hpp"

namespace {

struct Row {
    std::string name;
    std::string inputs;
    double value;
    double evidence;
};

std::vector<Row> rows;

void add(const std::string& name, const std::string& inputs, const bf::Refined& r) {
    rows.push_back({name, inputs, r.value, r.last_delta});
    std::printf("%-34s %-44s % .15e  (delta %.2e, %zu panels)\n", name.c_str(), inputs.c_str(),
                r.value, r.last_delta, r.panels);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output.csv>\n";
        return 2;
    }

    auto affine_alpha = [](double t) { return 0.2 + 0.1 * t; };

    // power-singular integral with a variable exponent: f = 1, beta affine
    add("power_singular_affine_beta", "f=1;beta=0.2+0.1t;x=1",
        bf::power_singular([](double) { return 1.0; }, affine_alpha, 1.0, 1e-10));

    // unit-interval integrand of the kernel class at constant order 0.3
    add("log_singular_quotient_03", "psi=(ln t-ln(1-t))(t/(1-t))^0.3;c1=0.3",
        bf::unit_singular2(
            [](double t) { return (std::log(t) - std::log1p(-t)) * std::pow(t / (1.0 - t), 0.3); },
            [](double s) {
                return (std::log1p(-s) - std::log(s)) * std::pow((1.0 - s) / s, 0.3);
            },
            0.0, 0.3, 1e-10));

    // multifractional integral of cos at x = 1 under the affine order
    add("mf_integral_cos_affine", "f=cos;alpha=0.2+0.1t;x=1",
        [&] {
            const double a1 = affine_alpha(1.0);
            auto r = bf::power_singular([](double y) { return std::cos(y); },
                                        [&](double) { return 1.0 - a1; }, 1.0, 1e-11);
            r.value /= std::tgamma(a1);
            return r;
        }());

    // kernel diagonal at order 1/2 (value should be pi up to the alpha' factor)
    add("kernel_diag_quotient_05", "psi=(ln t-ln(1-t))(t/(1-t))^0.5;c1=0.5",
        bf::unit_singular2(
            [](double t) { return (std::log(t) - std::log1p(-t)) * std::pow(t / (1.0 - t), 0.5); },
            [](double s) {
                return (std::log1p(-s) - std::log(s)) * std::pow((1.0 - s) / s, 0.5);
            },
            0.0, 0.5, 1e-10));

    // full kernel F(0,1) for the affine order
    add("kernel_F_affine_0_1", "alpha=0.2+0.1t;s=0;x=1",
        bf::unit_singular2(
            [&](double tau) {
                const double a = affine_alpha(tau);
                return 0.1 * (std::log(tau) - std::log1p(-tau)) *
                       std::pow(tau / (1.0 - tau), a);
            },
            [&](double s) {
                const double a = 0.3 - 0.1 * s; // alpha(1 - s) along the segment
                return 0.1 * (std::log1p(-s) - std::log(s)) * std::pow((1.0 - s) / s, a);
            },
            0.0, affine_alpha(1.0), 1e-11));

    // kernel F(0.25, 0.75) for the affine order (interior pair)
    add("kernel_F_affine_interior", "alpha=0.2+0.1t;s=0.25;x=0.75",
        bf::unit_singular2(
            [&](double tau) {
                const double a = affine_alpha(0.25 + 0.5 * tau);
                return 0.1 * (std::log(tau) - std::log1p(-tau)) *
                       std::pow(tau / (1.0 - tau), a);
            },
            [&](double s) {
                const double a = affine_alpha(0.75) - 0.05 * s;
                return 0.1 * (std::log1p(-s) - std::log(s)) * std::pow((1.0 - s) / s, a);
            },
            0.0, affine_alpha(0.75), 1e-11));

    // G0 of g(x) = x^0.9 at x = 0.5 under the affine order, by the
    // finite-difference oracle on the undecomposed definition
    add("g0_affine_x09", "alpha=0.2+0.1t;g=x^0.9;x=0.5;delta=1e-4",
        bf::g0_finite_difference([](double t) { return std::pow(t, 0.9); }, affine_alpha, 0.5,
                                 1e-4, 1e-11));

    // RL-mBm covariance for the affine regularity at (s,t) = (0.5, 1)
    add("cov_affine_05_10", "h=0.2+0.1t;s=0.5;t=1",
        bf::covariance([](double t) { return 0.2 + 0.1 * t; }, 0.5, 1.0, 1e-11));

    // constant-order variance, cross-check of the closed form t^{2H}/(2H G^2)
    add("cov_const_03_var", "h=0.3;s=1;t=1",
        [&] {
            auto r = bf::power_singular([](double) { return 1.0; },
                                        [](double) { return 1.0 - 2.0 * 0.3; }, 1.0, 1e-12);
            const double g = std::tgamma(0.8);
            r.value /= g * g;
            return r;
        }());

    std::ofstream out(argv[1]);
    if (!out) {
        std::cerr << "cannot open " << argv[1] << "\n";
        return 2;
    }
    out << "name,inputs,value,evidence\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.3e", r.value, r.evidence);
        out << r.name << "," << r.inputs << "," << buf << "\n";
    }
    std::cout << "wrote " << argv[1] << " (" << rows.size() << " rows)\n";
    return 0;
}

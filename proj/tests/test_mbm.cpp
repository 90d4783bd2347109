#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "multifrac/mbm.hpp"
#include "support/fixtures.hpp"

using namespace multifrac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("driver substreams are reproducible and distinct") {
    const GaussianDriver d{42, 64, 1.0};
    const auto a = d.increments(7);
    const auto b = d.increments(7);
    REQUIRE(a.size() == 64);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    const auto c = d.increments(8);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != c[i];
    CHECK(diff > 32);
}

TEST_CASE("driver increments have the declared moments") {
    const GaussianDriver d{11, 512, 1.0};
    std::vector<double> all;
    for (std::uint64_t p = 0; p < 200; ++p) {
        const auto inc = d.increments(p);
        all.insert(all.end(), inc.begin(), inc.end());
    }
    const auto stats = moment_stats(all);
    const double nsamp = static_cast<double>(all.size());
    const double dt = 1.0 / 512.0;
    CHECK(std::abs(stats.mean) <= 4.0 * std::sqrt(dt / nsamp));
    CHECK_THAT(stats.variance, WithinRel(dt, 0.05));
    CHECK(std::abs(stats.skewness) <= 4.0 * std::sqrt(6.0 / nsamp));
    CHECK(std::abs(stats.excess_kurtosis) <= 4.0 * std::sqrt(24.0 / nsamp));
}

TEST_CASE("covariance oracle closed forms") {
    // h == 1/2 is Brownian motion: R(t,s) = min(s,t)
    const auto bm = RegularityFunction::constant(0.5, 1.0);
    CHECK_THAT(covariance_oracle(bm, 0.5, 1.0), WithinRel(0.5, 1e-12));
    CHECK_THAT(covariance_oracle(bm, 1.0, 0.5), WithinRel(0.5, 1e-12)); // symmetrized
    CHECK_THAT(covariance_oracle(bm, 0.25, 0.25), WithinRel(0.25, 1e-12));
    CHECK(covariance_oracle(bm, 0.0, 1.0) == 0.0);

    // constant h: Var(B_t) = t^{2H} / (2H Gamma(H+1/2)^2)
    const auto h03 = RegularityFunction::constant(0.3, 1.0);
    const double g08 = gamma_fn(0.8);
    CHECK_THAT(covariance_oracle(h03, 1.0, 1.0), WithinRel(1.0 / (0.6 * g08 * g08), 1e-12));
    CHECK_THAT(covariance_oracle(h03, 1.0, 1.0),
               WithinAbs(testsupport::derived("cov_const_03_var"), 1e-9));

    // variable h against the brute-force oracle
    const auto affine = RegularityFunction::affine(0.2, 0.1, 1.0);
    CHECK_THAT(covariance_oracle(affine, 0.5, 1.0),
               WithinAbs(testsupport::derived("cov_affine_05_10"), 1e-8));

    // h > 1/2 branch: continuous integrand, compare adjacent entries sanity
    const auto h07 = RegularityFunction::constant(0.7, 1.0);
    const double v = covariance_oracle(h07, 1.0, 1.0);
    CHECK_THAT(v, WithinRel(1.0 / (1.4 * gamma_fn(1.2) * gamma_fn(1.2)), 1e-12));
    const double c = covariance_oracle(h07, 0.5, 1.0);
    CHECK(c > 0.0);
    CHECK(c < v);
}

TEST_CASE("covariance matrix for Brownian motion on a 3-point grid") {
    const auto bm = RegularityFunction::constant(0.5, 1.0);
    const auto cov = covariance_matrix(bm, 2);
    const double expect[3][3] = {{0, 0, 0}, {0, 0.5, 0.5}, {0, 0.5, 1.0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK_THAT(cov.values(i, j), WithinAbs(expect[i][j], 1e-10));
    CHECK(cov.values.max_asymmetry() == 0.0);
    CHECK(cov.min_eigenvalue >= -1e-10 * cov.values.trace());
    CHECK(cov.factor.jitter <= 1e-10 * cov.values.trace());
}

TEST_CASE("covariance matrix matches the constant-order closed form") {
    const auto h = RegularityFunction::constant(0.3, 1.0);
    const auto cov = covariance_matrix(h, 8);
    // the diagonal has the closed form; off-diagonals are oracle values, so
    // just verify the first row vanishes and the diagonal is exact
    const double g08 = gamma_fn(0.8);
    for (std::size_t j = 0; j < 9; ++j) CHECK(cov.values(0, j) == 0.0);
    for (std::size_t i = 1; i < 9; ++i) {
        const double t = cov.times[i];
        CHECK_THAT(cov.values(i, i), WithinRel(std::pow(t, 0.6) / (0.6 * g08 * g08), 1e-10));
    }
}

TEST_CASE("samplers start at zero and reproduce Brownian variance") {
    const auto bm = RegularityFunction::constant(0.5, 1.0);
    const GaussianDriver driver{2024, 64, 1.0};
    for (auto method : {SamplingMethod::cholesky, SamplingMethod::kernel}) {
        const auto paths = sample_rlmbm(bm, 16, driver, 20000, method, 2);
        for (const auto& p : paths) REQUIRE(p[0] == 0.0);
        std::vector<double> terminal(paths.size());
        for (std::size_t p = 0; p < paths.size(); ++p) terminal[p] = paths[p][16];
        const auto stats = moment_stats(terminal);
        const double se_var = stats.variance * std::sqrt(2.0 / (terminal.size() - 1.0));
        CHECK(std::abs(stats.variance - 1.0) <= 3.0 * se_var);
        CHECK(std::abs(stats.mean) <= 3.0 / std::sqrt(static_cast<double>(terminal.size())));
    }
}

TEST_CASE("kernel sampler requires enough fine resolution") {
    const auto h = RegularityFunction::constant(0.3, 1.0);
    const GaussianDriver coarse{1, 32, 1.0};
    CHECK_THROWS_AS(sample_rlmbm(h, 16, coarse, 10, SamplingMethod::kernel), ConfigError);
    const GaussianDriver misaligned{1, 70, 1.0};
    CHECK_THROWS_AS(sample_rlmbm(h, 16, misaligned, 10, SamplingMethod::kernel), ConfigError);
}

TEST_CASE("empirical covariance of sampled paths matches the oracle within 3 sigma") {
    const auto h = RegularityFunction::affine(0.2, 0.1, 1.0);
    const GaussianDriver driver{99, 128, 1.0};
    const auto oracle = covariance_matrix(h, 8);

    for (auto method : {SamplingMethod::cholesky, SamplingMethod::kernel}) {
        const auto paths = sample_rlmbm(h, 8, driver, 40000, method, 2);
        const auto emp = empirical_covariance(paths, 2);
        double worst = 0.0;
        for (std::size_t i = 0; i <= 8; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double se = emp.stderrs(i, j);
                if (se > 0.0)
                    worst = std::max(worst,
                                     std::abs(emp.values(i, j) - oracle.values(i, j)) / se);
            }
        INFO((method == SamplingMethod::cholesky ? "cholesky" : "kernel"));
        CHECK(worst <= 3.5); // 45 entries tested at once, allow a mild Bonferroni margin
    }
}

TEST_CASE("empirical covariance input validation and trivial input") {
    const auto h = RegularityFunction::constant(0.3, 1.0);
    std::vector<SampledPath> few(10, SampledPath::zeros(1.0, 4));
    CHECK_THROWS_AS(empirical_covariance(few), std::invalid_argument);
    std::vector<SampledPath> zeros(200, SampledPath::zeros(1.0, 4));
    const auto emp = empirical_covariance(zeros);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(emp.values(i, j) == 0.0);
}

TEST_CASE("sampling is bit-identical across thread counts") {
    const auto h = RegularityFunction::affine(0.2, 0.1, 1.0);
    const GaussianDriver driver{5150, 64, 1.0};
    const auto a = sample_rlmbm(h, 16, driver, 64, SamplingMethod::kernel, 1);
    const auto b = sample_rlmbm(h, 16, driver, 64, SamplingMethod::kernel, 2);
    for (std::size_t p = 0; p < a.size(); ++p)
        for (std::size_t i = 0; i <= 16; ++i) REQUIRE(a[p][i] == b[p][i]);
}

TEST_CASE("path marginals are Gaussian") {
    const auto h = RegularityFunction::affine(0.2, 0.1, 1.0);
    const GaussianDriver driver{31337, 64, 1.0};
    const auto paths = sample_rlmbm(h, 8, driver, 20000, SamplingMethod::cholesky, 2);
    std::vector<double> marginal(paths.size());
    for (std::size_t i = 2; i <= 8; i += 3) {
        for (std::size_t p = 0; p < paths.size(); ++p) marginal[p] = paths[p][i];
        const auto stats = moment_stats(marginal);
        const double n = static_cast<double>(marginal.size());
        CHECK(std::abs(stats.skewness) <= 4.0 * std::sqrt(6.0 / n));
        CHECK(std::abs(stats.excess_kurtosis) <= 4.0 * std::sqrt(24.0 / n));
    }
}

TEST_CASE("holder exponent estimate recovers the regularity") {
    const GaussianDriver driver{777, 128, 1.0};
    const std::vector<double> lags{1.0 / 128, 2.0 / 128, 4.0 / 128, 8.0 / 128};

    const auto bm = RegularityFunction::constant(0.5, 1.0);
    auto paths = sample_rlmbm(bm, 128, driver, 4096, SamplingMethod::cholesky, 2);
    auto est = holder_exponent_estimate(paths, 0.5, lags);
    CHECK_THAT(est.exponent, WithinAbs(0.5, 0.05));

    const auto h03 = RegularityFunction::constant(0.3, 1.0);
    paths = sample_rlmbm(h03, 128, driver, 4096, SamplingMethod::cholesky, 2);
    est = holder_exponent_estimate(paths, 0.5, lags);
    CHECK_THAT(est.exponent, WithinAbs(0.3, 0.05));

    const auto var = RegularityFunction::affine(0.2, 0.2, 1.0);
    paths = sample_rlmbm(var, 128, driver, 4096, SamplingMethod::cholesky, 2);
    est = holder_exponent_estimate(paths, 0.75, lags);
    CHECK_THAT(est.exponent, WithinAbs(var.eval(0.75), 0.07));

    CHECK_THROWS_AS(holder_exponent_estimate(paths, 0.5, {0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(holder_exponent_estimate(paths, 0.0, lags), std::invalid_argument);
}

TEST_CASE("global increment ratios stay stable under grid refinement") {
    // qualitative check of the global regularity bound: the worst increment
    // quotient |dB| / |dt|^{min(1/2, h_*)} should not grow systematically
    // from n = 256 to n = 1024
    const auto h = RegularityFunction::affine(0.2, 0.1, 1.0);
    auto worst_quotient = [&](std::size_t n) {
        const GaussianDriver driver{4242, n, 1.0};
        const auto paths = sample_rlmbm(h, n, driver, 64, SamplingMethod::cholesky, 2);
        const double e = std::min(0.5, h.range_bounds().first);
        std::vector<double> gap_pow(n + 1, 0.0);
        for (std::size_t d = 1; d <= n; ++d)
            gap_pow[d] = std::pow(static_cast<double>(d) / n, -e);
        double worst = 0.0;
        for (const auto& p : paths)
            for (std::size_t i = 0; i <= n; ++i)
                for (std::size_t j = i + 1; j <= n; ++j)
                    worst = std::max(worst, std::abs(p[j] - p[i]) * gap_pow[j - i]);
        return worst;
    };
    const double w256 = worst_quotient(256);
    const double w1024 = worst_quotient(1024);
    CHECK(w1024 <= 2.0 * w256);
}

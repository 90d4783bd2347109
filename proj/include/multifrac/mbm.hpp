#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "multifrac/errors.hpp"
#include "multifrac/quadrature.hpp"
#include "multifrac/random.hpp"
#include "multifrac/regularity.hpp"
#include "multifrac/special.hpp"
#include "multifrac/stats.hpp"

// Riemann-Liouville multifractional Brownian motion
//
//     B_t = 1/Gamma(h_t + 1/2) int_0^t (t-s)^{h_t - 1/2} dB_s
//
// sampled two ways: exactly on the grid through the Cholesky factor of the
// covariance, and as a discretized stochastic integral with per-cell averaged
// kernel weights on a finer grid. The covariance comes from the direct
// integral
//
//     R(t,s) = int_0^s (t-r)^{h_t-1/2} (s-r)^{h_s-1/2} dr
//              / (Gamma(h_t+1/2) Gamma(h_s+1/2)),   s <= t.

namespace multifrac {

inline double covariance_oracle(const RegularityFunction& h, double s, double t,
                                const QuadratureRule& rule = QuadratureRule::graded(512, 3.0)) {
    if (s > t) std::swap(s, t);
    if (s <= 0.0) return 0.0;
    const double ht = h.eval(t);
    const double hs = h.eval(s);
    const double pref = 1.0 / (gamma_fn(ht + 0.5) * gamma_fn(hs + 0.5));
    if (s == t) {
        // both kernels coincide: int_0^t (t-r)^{2h-1} dr = t^{2h} / (2h)
        return pref * std::pow(t, 2.0 * ht) / (2.0 * ht);
    }
    const double pt = ht - 0.5;
    if (std::abs(hs - 0.5) < 1e-14) {
        // the s-kernel is identically 1
        return pref * (std::pow(t, pt + 1.0) - std::pow(t - s, pt + 1.0)) / (pt + 1.0);
    }
    if (hs < 0.5) {
        // integrable singularity at r = s
        return pref * power_singular_integral([t, pt](double r) { return std::pow(t - r, pt); },
                                              0.5 - hs, s, rule);
    }
    // hs > 1/2: continuous integrand with a vanishing power at r = s; same
    // product integration, the frozen exponent is merely negative
    rule.validate();
    const std::size_t n = rule.subdivisions;
    const bool graded = rule.kind == QuadratureRule::Kind::graded_mesh;
    const double b = 0.5 - hs;
    std::vector<double> panel(n);
    double u_hi = s;
    double f_hi = std::pow(t, pt); // smooth factor (t - s + u)^{pt} at u = s
    const double theta = t - s;
    for (std::size_t k = n; k-- > 0;) {
        const double r = static_cast<double>(k) / static_cast<double>(n);
        const double u_lo = graded ? s * std::pow(r, rule.grading) : s * r;
        const double f_lo = std::pow(theta + u_lo, pt);
        const double slope = (f_hi - f_lo) / (u_hi - u_lo);
        const double a0 = f_lo - slope * u_lo;
        panel[k] = a0 * detail::power_moment0(b, u_lo, u_hi) +
                   slope * detail::power_moment1(b, u_lo, u_hi);
        u_hi = u_lo;
        f_hi = f_lo;
    }
    return pref * pairwise_sum(panel);
}

struct CovarianceMatrix {
    std::vector<double> times;
    Matrix values;
    Matrix stderrs;        // filled by the empirical estimator, else empty
    CholeskyResult factor; // cached for sampling
    double min_eigenvalue = 0.0;
};

inline CovarianceMatrix covariance_matrix(const RegularityFunction& h, std::size_t segments,
                                          const QuadratureRule& rule = QuadratureRule::graded(512, 3.0),
                                          unsigned threads = 1) {
    if (segments < 2) throw std::invalid_argument("covariance_matrix: need at least 2 segments");
    const std::size_t n = segments + 1;
    CovarianceMatrix out;
    out.times.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.times[i] = h.horizon() * static_cast<double>(i) / static_cast<double>(segments);
    out.values = Matrix(n);
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j)
            out.values(i, j) = covariance_oracle(h, out.times[j], out.times[i], rule);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.values(i, j) = out.values(j, i);

    const auto eigen = symmetric_eigenvalues(out.values);
    out.min_eigenvalue = *std::min_element(eigen.begin(), eigen.end());
    const double trace = out.values.trace();
    if (out.min_eigenvalue < -1e-10 * trace)
        throw NumericError("covariance_matrix: indefinite beyond the jitter budget "
                           "(oracle quadrature failure)");
    out.factor = cholesky_psd(out.values, 1e-10);
    return out;
}

enum class SamplingMethod { cholesky, kernel };

namespace detail {

// per-cell averaged kernel weights of the discretized stochastic integral:
//   w_j(t_i) = [ (t_i - s_j)^{h_i + 1/2} - (t_i - s_{j+1})^{h_i + 1/2} ]
//              / ( (h_i + 1/2) dt_fine )
inline std::vector<double> kernel_weight_matrix(const RegularityFunction& h,
                                                std::size_t segments, std::size_t fine_cells) {
    const double T = h.horizon();
    const double df = T / static_cast<double>(fine_cells);
    const std::size_t ratio = fine_cells / segments;
    std::vector<double> w(segments * fine_cells, 0.0);
    for (std::size_t i = 1; i <= segments; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(segments);
        const double e = h.eval(t) + 0.5;
        const double pref = 1.0 / (gamma_fn(e) * e * df);
        double hi = std::pow(t, e); // (t - s_j)^e at j = 0
        for (std::size_t j = 0; j < i * ratio; ++j) {
            const double u = t - df * static_cast<double>(j + 1);
            const double lo = j + 1 == i * ratio ? 0.0 : std::pow(u, e);
            w[(i - 1) * fine_cells + j] = pref * (hi - lo);
            hi = lo;
        }
    }
    return w;
}

} // namespace detail

// npaths samples of B^h on the output grid. cholesky draws the exact
// finite-dimensional law from the covariance factor; kernel builds the
// discretized stochastic integral from the driver's fine-grid increments.
inline std::vector<SampledPath> sample_rlmbm(const RegularityFunction& h, std::size_t segments,
                                             const GaussianDriver& driver, std::size_t npaths,
                                             SamplingMethod method, unsigned threads = 1,
                                             std::uint64_t stream_offset = 0) {
    if (segments < 2) throw std::invalid_argument("sample_rlmbm: need at least 2 segments");
    std::vector<SampledPath> paths(npaths, SampledPath::zeros(h.horizon(), segments));

    if (method == SamplingMethod::cholesky) {
        const CovarianceMatrix cov = covariance_matrix(h, segments);
        const Matrix& l = cov.factor.lower;
        parallel_for(npaths, threads, [&](std::size_t p) {
            NormalSampler normal(driver.master_seed, stream_offset + p);
            std::vector<double> z(segments + 1);
            for (auto& v : z) v = normal();
            auto& path = paths[p];
            for (std::size_t i = 1; i <= segments; ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k <= i; ++k) acc += l(i, k) * z[k];
                path[i] = acc;
            }
        });
        return paths;
    }

    if (driver.cells % segments != 0 || driver.cells / segments < 4)
        throw ConfigError("sample_rlmbm: kernel method needs a fine grid with >= 4 cells per "
                          "output segment");
    if (std::abs(driver.horizon - h.horizon()) > 1e-12 * std::max(1.0, h.horizon()))
        throw ConfigError("sample_rlmbm: driver horizon does not match h");
    const std::vector<double> w = detail::kernel_weight_matrix(h, segments, driver.cells);
    parallel_for(npaths, threads, [&](std::size_t p) {
        const std::vector<double> db = driver.increments(stream_offset + p);
        auto& path = paths[p];
        const std::size_t ratio = driver.cells / segments;
        for (std::size_t i = 1; i <= segments; ++i) {
            const double* row = &w[(i - 1) * driver.cells];
            double acc = 0.0;
            for (std::size_t j = 0; j < i * ratio; ++j) acc += row[j] * db[j];
            path[i] = acc;
        }
    });
    return paths;
}

// unbiased sample covariance with per-entry CLT standard errors
inline CovarianceMatrix empirical_covariance(const std::vector<SampledPath>& paths,
                                             unsigned threads = 1) {
    if (paths.size() < 100)
        throw std::invalid_argument("empirical_covariance: need at least 100 paths");
    const std::size_t np = paths.size();
    const std::size_t n = paths.front().points();
    for (const auto& p : paths)
        if (p.points() != n)
            throw std::invalid_argument("empirical_covariance: inconsistent grids");

    CovarianceMatrix out;
    out.times.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.times[i] = paths.front().time(i);
    out.values = Matrix(n);
    out.stderrs = Matrix(n);

    std::vector<double> mean(n, 0.0);
    {
        std::vector<double> buf(np);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < np; ++p) buf[p] = paths[p][i];
            mean[i] = pairwise_sum(buf) / static_cast<double>(np);
        }
    }
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> prod(np), sq(np);
        for (std::size_t j = 0; j <= i; ++j) {
            for (std::size_t p = 0; p < np; ++p)
                prod[p] = (paths[p][i] - mean[i]) * (paths[p][j] - mean[j]);
            const double c = pairwise_sum(prod) / static_cast<double>(np - 1);
            for (std::size_t p = 0; p < np; ++p) {
                const double d = prod[p] - c;
                sq[p] = d * d;
            }
            const double var = pairwise_sum(sq) / static_cast<double>(np - 1);
            out.values(i, j) = c;
            out.stderrs(i, j) = std::sqrt(var / static_cast<double>(np));
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            out.values(i, j) = out.values(j, i);
            out.stderrs(i, j) = out.stderrs(j, i);
        }
    return out;
}

struct HolderEstimate {
    double exponent = 0.0;
    double stderr_ = 0.0;
};

// slope of log E|B_{t+u} - B_t| against log u across paths; a loose empirical
// read of the local regularity h(t)
inline HolderEstimate holder_exponent_estimate(const std::vector<SampledPath>& paths, double t,
                                               const std::vector<double>& lags) {
    if (lags.size() < 3)
        throw std::invalid_argument("holder_exponent_estimate: need at least 3 lags");
    if (paths.empty()) throw std::invalid_argument("holder_exponent_estimate: no paths");
    const auto& g = paths.front();
    const double dt = g.dt();
    const std::size_t it = static_cast<std::size_t>(std::llround(t / dt));
    if (it == 0 || it >= g.segments())
        throw std::invalid_argument("holder_exponent_estimate: t must be an interior grid point");

    std::vector<double> xs, ys;
    std::vector<double> buf(paths.size());
    for (double lag : lags) {
        const auto di = static_cast<std::size_t>(std::llround(lag / dt));
        if (di == 0 || it + di > g.segments())
            throw std::invalid_argument("holder_exponent_estimate: lag outside the grid");
        for (std::size_t p = 0; p < paths.size(); ++p)
            buf[p] = std::abs(paths[p][it + di] - paths[p][it]);
        const double m = pairwise_sum(buf) / static_cast<double>(paths.size());
        xs.push_back(std::log(dt * static_cast<double>(di)));
        ys.push_back(std::log(m));
    }
    // least squares slope with residual-based standard error
    const double nx = static_cast<double>(xs.size());
    const double mx = pairwise_sum(xs) / nx;
    const double my = pairwise_sum(ys) / nx;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - my - slope * (xs[i] - mx);
        rss += r * r;
    }
    const double se = xs.size() > 2 ? std::sqrt(rss / (nx - 2.0) / sxx) : 0.0;
    return {slope, se};
}

} // namespace multifrac

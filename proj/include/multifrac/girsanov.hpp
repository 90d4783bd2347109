#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "multifrac/errors.hpp"
#include "multifrac/mbm.hpp"
#include "multifrac/mfcalc.hpp"
#include "multifrac/random.hpp"
#include "multifrac/regularity.hpp"
#include "multifrac/stats.hpp"

// The SDE pipeline
//
//     X_t = x + int_0^t b(s, X_s) ds + B^h_t,      h valued in (0, 1/2),
//
// built on the Girsanov density
//
//     Z(T) = exp( int_0^T v_r dB_r - 1/2 int_0^T v_r^2 dr ),
//     v = D^{h+1/2} ( int_0^. u_s ds ),
//
// with the derivative of order h + 1/2 supplied by mfcalc. The weighted side
// samples (B^h, B) jointly through the kernel sampler so that the stochastic
// integral in Z uses the increments that actually drive B^h; the plain
// simulation side uses the covariance-exact sampler.

namespace multifrac {

struct DriftSpec {
    enum class Family { bounded_smooth, linear_growth, discontinuous_bounded };

    Family family = Family::bounded_smooth;
    std::function<double(double, double)> b;
    double growth_const = 1.0; // C~ with |b(t,x)| <= C~ (1 + |x|)
    double sup_norm = 0.0;     // finite for the bounded families
    std::string name = "drift";

    bool bounded() const { return family != Family::linear_growth; }

    // sampled verification of the declared growth (and boundedness) over
    // [0,T] x [-10, 10]
    void validate(double horizon) const {
        if (!b) throw ConfigError("DriftSpec: no callable");
        if (!(growth_const >= 0.0)) throw ConfigError("DriftSpec: negative growth constant");
        std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
        auto uniform = [&rng](double lo, double hi) {
            return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        };
        for (int i = 0; i < 10000; ++i) {
            const double t = uniform(0.0, horizon);
            const double x = uniform(-10.0, 10.0);
            const double v = b(t, x);
            if (!std::isfinite(v)) throw ConfigError("DriftSpec: non-finite drift value");
            if (std::abs(v) > growth_const * (1.0 + std::abs(x)) + 1e-12)
                throw ConfigError("DriftSpec '" + name + "': declared growth bound violated");
            if (bounded() && std::abs(v) > sup_norm + 1e-12)
                throw ConfigError("DriftSpec '" + name + "': declared sup norm violated");
        }
    }

    static DriftSpec zero() {
        return {Family::bounded_smooth, [](double, double) { return 0.0; }, 0.0, 0.0, "zero"};
    }
    static DriftSpec constant(double c) {
        return {Family::bounded_smooth, [c](double, double) { return c; }, std::abs(c),
                std::abs(c), "const_" + std::to_string(c)};
    }
    static DriftSpec sine() {
        return {Family::bounded_smooth, [](double, double x) { return std::sin(x); }, 1.0, 1.0,
                "sin_x"};
    }
    static DriftSpec linear(double k) {
        return {Family::linear_growth, [k](double, double x) { return k * x; }, std::abs(k),
                0.0, "linear_" + std::to_string(k)};
    }
    static DriftSpec sign_step(double c) {
        return {Family::discontinuous_bounded,
                [c](double, double x) { return x >= 0.0 ? c : -c; }, std::abs(c), std::abs(c),
                "step_" + std::to_string(c)};
    }
};

struct GirsanovRun {
    RegularityFunction h;   // range strictly inside (0, 1/2)
    DriftSpec drift;
    double x0 = 0.0;
    std::size_t segments = 256;
    std::size_t fine_factor = 8; // kernel-sampler cells per solution segment
    std::uint64_t seed = 1;
    std::size_t npaths = 10000;
    DerivativeConfig cfg;   // validated against alpha = h + 1/2
    unsigned threads = 1;
    double novikov_lambda = 0.05;

    void validate() const {
        const auto [lo, hi] = h.range_bounds();
        if (!(lo > 0.0 && hi < 0.5))
            throw ConfigError("GirsanovRun: h must map into a compact subset of (0, 1/2)");
        if (npaths < 2) throw ConfigError("GirsanovRun: need at least 2 paths");
        if (fine_factor < 4) throw ConfigError("GirsanovRun: fine_factor must be >= 4");
        drift.validate(h.horizon());
        DerivativeConfig c = cfg;
        c.grid_segments = segments;
        c.validate(h.shifted(0.5));
    }

    RegularityFunction order() const { return h.shifted(0.5); }
};

// cumulative trapezoidal integral of b(t, X_t) along a path, starting at 0
inline SampledPath drift_integral_path(const DriftSpec& drift, const SampledPath& x) {
    const std::size_t n = x.segments();
    const double dt = x.dt();
    SampledPath out = SampledPath::zeros(x.horizon(), n);
    double prev = drift.b(0.0, x[0]);
    for (std::size_t i = 1; i <= n; ++i) {
        const double cur = drift.b(x.time(i), x[i]);
        out[i] = out[i - 1] + 0.5 * dt * (prev + cur);
        prev = cur;
    }
    return out;
}

// v = D^{h+1/2} U for U(0) = 0; diagnostics carry the discrete L2 norm of v
// (the finiteness condition of the change of measure)
inline OperatorResult girsanov_v(const SampledPath& u_integral, const DerivativeOperator& op) {
    OperatorResult r = op.solve(u_integral);
    const std::size_t n = r.path.segments();
    std::vector<double> sq(n);
    for (std::size_t i = 1; i <= n; ++i) sq[i - 1] = r.path[i] * r.path[i];
    r.diagnostics["v_l2"] = std::sqrt(pairwise_sum(sq) * r.path.dt());
    return r;
}

inline OperatorResult girsanov_v(const SampledPath& u_integral, const RegularityFunction& h,
                                 DerivativeConfig cfg, unsigned threads = 1) {
    cfg.grid_segments = u_integral.segments();
    DerivativeOperator op(h.shifted(0.5), cfg, threads);
    return girsanov_v(u_integral, op);
}

// Z(T) from a v path and the coarse driving increments; left-point Ito sum
// and left-point rectangles for the quadratic compensator
inline double girsanov_weight(const SampledPath& v, const std::vector<double>& db) {
    const std::size_t n = v.segments();
    if (db.size() != n)
        throw std::invalid_argument("girsanov_weight: increment count must match v cells");
    const double dt = v.dt();
    double ito = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vi = v[i];
        if (!std::isfinite(vi)) throw NumericError("girsanov_weight: non-finite integrand");
        ito += vi * db[i];
        quad += vi * vi;
    }
    return std::exp(ito - 0.5 * quad * dt);
}

namespace detail {

// substream blocks keeping the weighted side, the plain Euler side and the
// second Novikov batch on disjoint randomness
inline constexpr std::uint64_t stream_weighted = std::uint64_t{1} << 40;
inline constexpr std::uint64_t stream_euler = std::uint64_t{2} << 40;
inline constexpr std::uint64_t stream_batch2 = std::uint64_t{3} << 40;

} // namespace detail

// Shared precomputation for the weighted (kernel-sampled) side of the
// pipeline: fine increments -> B^h -> u -> U -> v -> Z per path.
class GirsanovPipeline {
  public:
    explicit GirsanovPipeline(GirsanovRun run)
        : run_(std::move(run)), op_(make_operator(run_)),
          weights_(detail::kernel_weight_matrix(run_.h, run_.segments,
                                                run_.segments * run_.fine_factor)) {}

    const GirsanovRun& run() const { return run_; }
    const DerivativeOperator& derivative_operator() const { return op_; }

    GaussianDriver driver() const {
        return {run_.seed, run_.segments * run_.fine_factor, run_.h.horizon()};
    }

    struct WeightedPath {
        SampledPath bh;          // kernel-sampled B^h on the solution grid
        SampledPath v;           // D^{h+1/2} of the drift integral
        std::vector<double> db;  // coarse increments of the driving B
        double z = 1.0;          // Girsanov weight
    };

    // The Ito cell [0, dt) uses a zero integrand: v there is only known
    // through the boundary extrapolation, which looks ahead of the
    // filtration; dropping the cell keeps every factor of the discrete
    // exponential martingale conditionally mean-one.
    WeightedPath weighted_path(std::uint64_t index) const {
        const GaussianDriver drv = driver();
        const std::vector<double> fine = drv.increments(detail::stream_weighted + index);
        const std::size_t n = run_.segments;
        const std::size_t ratio = run_.fine_factor;

        WeightedPath out{SampledPath::zeros(run_.h.horizon(), n),
                         SampledPath::zeros(run_.h.horizon(), n), std::vector<double>(n, 0.0),
                         1.0};
        for (std::size_t i = 1; i <= n; ++i) {
            const double* row = &weights_[(i - 1) * n * ratio];
            double acc = 0.0;
            for (std::size_t j = 0; j < i * ratio; ++j) acc += row[j] * fine[j];
            out.bh[i] = acc;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < ratio; ++j) s += fine[i * ratio + j];
            out.db[i] = s;
        }
        const SampledPath u_int = drift_integral_path(shifted_drift(), out.bh);
        out.v = op_.solve(u_int).path;
        SampledPath v_adapted = out.v;
        v_adapted[0] = 0.0;
        out.z = girsanov_weight(v_adapted, out.db);
        return out;
    }

    // u_s = b(s, x0 + B^h_s)
    DriftSpec shifted_drift() const {
        DriftSpec d = run_.drift;
        const double x0 = run_.x0;
        auto base = run_.drift.b;
        d.b = [base, x0](double t, double w) { return base(t, x0 + w); };
        return d;
    }

  private:
    GirsanovRun run_;
    DerivativeOperator op_;
    std::vector<double> weights_;

    static DerivativeOperator make_operator(const GirsanovRun& run) {
        run.validate();
        DerivativeConfig cfg = run.cfg;
        cfg.grid_segments = run.segments;
        return DerivativeOperator(run.order(), cfg, run.threads);
    }
};

struct WeightSummary {
    double mean = 1.0;
    double stderr_ = 0.0;
    std::size_t npaths = 0;
    bool pass = true; // |mean - 1| <= 3 stderr
};

// Monte Carlo estimate of E[Z(T)] (equals 1 under the change of measure)
inline WeightSummary mc_mean_weight(const GirsanovRun& run) {
    GirsanovPipeline pipe(run);
    std::vector<double> z(run.npaths);
    parallel_for(run.npaths, run.threads,
                 [&](std::size_t p) { z[p] = pipe.weighted_path(p).z; });
    const auto [mean, se] = mean_stderr(z);
    WeightSummary out{mean, se, run.npaths, true};
    out.pass = std::abs(mean - 1.0) <= 3.0 * se || se == 0.0;
    return out;
}

struct NovikovReport {
    double lambda = 0.05;
    std::vector<double> checkpoints;
    std::vector<double> batch1, batch2; // E[exp(lambda v_t^2)] per checkpoint
    double sup1 = 0.0, sup2 = 0.0;
    bool stable = true; // batches agree within 50% relative, no overflow
};

// reported, non-gating: the estimator is heavy-tailed by construction
inline NovikovReport novikov_check(const GirsanovRun& run, std::size_t checkpoints = 8) {
    GirsanovPipeline pipe(run);
    NovikovReport rep;
    rep.lambda = run.novikov_lambda;
    const std::size_t n = run.segments;
    std::vector<std::size_t> idx;
    for (std::size_t c = 1; c <= checkpoints; ++c)
        idx.push_back(std::max<std::size_t>(1, c * n / checkpoints));
    for (auto i : idx) rep.checkpoints.push_back(run.h.horizon() * static_cast<double>(i) / n);

    const std::size_t half = std::max<std::size_t>(2, run.npaths / 2);
    auto batch = [&](std::uint64_t offset) {
        std::vector<std::vector<double>> samples(idx.size(), std::vector<double>(half));
        std::vector<double> buf(half);
        parallel_for(half, run.threads, [&](std::size_t p) {
            const auto wp = pipe.weighted_path(offset + p);
            for (std::size_t c = 0; c < idx.size(); ++c) {
                const double v = wp.v[idx[c]];
                samples[c][p] = std::exp(rep.lambda * v * v);
            }
        });
        std::vector<double> means(idx.size());
        for (std::size_t c = 0; c < idx.size(); ++c)
            means[c] = pairwise_sum(samples[c]) / static_cast<double>(half);
        return means;
    };
    rep.batch1 = batch(0);
    rep.batch2 = batch(detail::stream_batch2);
    rep.sup1 = *std::max_element(rep.batch1.begin(), rep.batch1.end());
    rep.sup2 = *std::max_element(rep.batch2.begin(), rep.batch2.end());
    rep.stable = std::isfinite(rep.sup1) && std::isfinite(rep.sup2);
    for (std::size_t c = 0; c < idx.size() && rep.stable; ++c) {
        const double a = rep.batch1[c], b = rep.batch2[c];
        if (std::abs(a - b) > 0.5 * std::max(std::abs(a), std::abs(b))) rep.stable = false;
    }
    return rep;
}

namespace detail {

inline double gronwall_envelope(double c_tilde, double x0, double bh_sup, double horizon) {
    return std::max(c_tilde, 1.0) * (std::abs(x0) + bh_sup + horizon) *
           std::exp(c_tilde * horizon);
}

template <class Drift>
SampledPath euler_one(Drift&& b, double x0, const SampledPath& bh) {
    const std::size_t n = bh.segments();
    const double dt = bh.dt();
    SampledPath x = SampledPath::zeros(bh.horizon(), n);
    x[0] = x0;
    for (std::size_t i = 0; i < n; ++i)
        x[i + 1] = x[i] + b(bh.time(i), x[i]) * dt + (bh[i + 1] - bh[i]);
    return x;
}

} // namespace detail

// Euler iteration over covariance-exact B^h samples; every trajectory is
// checked against the a-priori Gronwall envelope implied by the linear
// growth of the drift
inline std::vector<SampledPath> euler_weak_solution(const GirsanovRun& run) {
    run.validate();
    const GaussianDriver drv{run.seed, run.segments * run.fine_factor, run.h.horizon()};
    std::vector<SampledPath> bh = sample_rlmbm(run.h, run.segments, drv, run.npaths,
                                               SamplingMethod::cholesky, run.threads,
                                               detail::stream_euler);
    std::vector<SampledPath> out(run.npaths);
    parallel_for(run.npaths, run.threads, [&](std::size_t p) {
        out[p] = detail::euler_one(run.drift.b, run.x0, bh[p]);
        double bh_sup = 0.0, x_sup = 0.0;
        for (std::size_t i = 0; i <= run.segments; ++i) {
            bh_sup = std::max(bh_sup, std::abs(bh[p][i]));
            x_sup = std::max(x_sup, std::abs(out[p][i]));
        }
        const double envelope =
            detail::gronwall_envelope(run.drift.growth_const, run.x0, bh_sup, run.h.horizon());
        if (x_sup > envelope * (1.0 + 1e-9))
            throw NumericError("euler_weak_solution: trajectory escapes the Gronwall envelope "
                               "(drift spec inconsistent with its declared growth)");
    });
    return out;
}

struct PathFunctional {
    std::string name;
    std::function<double(const SampledPath&)> f;
    bool bounded = true;
};

// the fixed battery of bounded path functionals used by the law tests
inline std::vector<PathFunctional> phi_battery() {
    std::vector<PathFunctional> out;
    out.push_back({"tanh_terminal",
                   [](const SampledPath& w) { return std::tanh(w[w.segments()]); }, true});
    out.push_back({"indicator_terminal_nonneg",
                   [](const SampledPath& w) { return w[w.segments()] >= 0.0 ? 1.0 : 0.0; },
                   true});
    out.push_back({"tanh_two_marginal",
                   [](const SampledPath& w) {
                       return std::tanh(w[w.segments() / 2]) * std::tanh(w[w.segments()]);
                   },
                   true});
    return out;
}

struct LawEquivalenceResult {
    std::string phi_name;
    double lhs = 0.0, lhs_se = 0.0; // E[phi(X - x0)], direct Euler simulation
    double rhs = 0.0, rhs_se = 0.0; // E[phi(B^h) Z], reweighted simulation
    double gap = 0.0;
    double combined_se = 0.0;
    bool pass = true; // gap <= 3 combined
};

// one simulation pass for the whole functional battery: the weighted side and
// the direct Euler side are sampled once, every phi is evaluated on both
inline std::vector<LawEquivalenceResult>
law_equivalence_battery(const GirsanovRun& run, const std::vector<PathFunctional>& battery) {
    for (const auto& phi : battery)
        if (!phi.bounded)
            throw std::invalid_argument("law_equivalence_test: phi must be bounded");
    GirsanovPipeline pipe(run);

    const std::size_t nphi = battery.size();
    std::vector<std::vector<double>> rhs(nphi, std::vector<double>(run.npaths));
    parallel_for(run.npaths, run.threads, [&](std::size_t p) {
        const auto wp = pipe.weighted_path(p);
        for (std::size_t q = 0; q < nphi; ++q) rhs[q][p] = battery[q].f(wp.bh) * wp.z;
    });

    const std::vector<SampledPath> xs = euler_weak_solution(run);
    std::vector<std::vector<double>> lhs(nphi, std::vector<double>(run.npaths));
    parallel_for(run.npaths, run.threads, [&](std::size_t p) {
        SampledPath shifted = xs[p];
        for (std::size_t i = 0; i <= shifted.segments(); ++i) shifted[i] -= run.x0;
        for (std::size_t q = 0; q < nphi; ++q) lhs[q][p] = battery[q].f(shifted);
    });

    std::vector<LawEquivalenceResult> out(nphi);
    for (std::size_t q = 0; q < nphi; ++q) {
        const auto l = mean_stderr(lhs[q]);
        const auto r = mean_stderr(rhs[q]);
        out[q].phi_name = battery[q].name;
        out[q].lhs = l.mean;
        out[q].lhs_se = l.stderr_;
        out[q].rhs = r.mean;
        out[q].rhs_se = r.stderr_;
        out[q].gap = std::abs(l.mean - r.mean);
        out[q].combined_se = std::sqrt(l.stderr_ * l.stderr_ + r.stderr_ * r.stderr_);
        out[q].pass = out[q].gap <= 3.0 * out[q].combined_se;
    }
    return out;
}

inline LawEquivalenceResult law_equivalence_test(const GirsanovRun& run,
                                                 const PathFunctional& phi) {
    return law_equivalence_battery(run, {phi}).front();
}

// nonnegative test functions g(t, x) with compact support, for the Krylov
// estimate E[int_0^T g(t, X_t) dt] <= K (int int g^rho)^{1/rho}
struct OccupationTestFn {
    std::string name;
    std::function<double(double, double)> g;
    double t_lo = 0.0, t_hi = 1.0;
    double x_lo = -1.0, x_hi = 1.0;

    static OccupationTestFn box(double t_hi, double half_width) {
        OccupationTestFn f;
        f.name = "box";
        f.t_hi = t_hi;
        f.x_lo = -half_width;
        f.x_hi = half_width;
        f.g = [half_width, t_hi](double t, double x) {
            return t <= t_hi && std::abs(x) <= half_width ? 1.0 : 0.0;
        };
        return f;
    }
    static OccupationTestFn gaussian_bump(double t_hi, double sigma) {
        OccupationTestFn f;
        f.name = "gaussian_bump";
        f.t_hi = t_hi;
        f.x_lo = -8.0 * sigma;
        f.x_hi = 8.0 * sigma;
        f.g = [sigma, t_hi](double t, double x) {
            return t <= t_hi ? std::exp(-0.5 * x * x / (sigma * sigma)) : 0.0;
        };
        return f;
    }
};

struct KrylovResult {
    std::string g_name;
    double rho = 0.0;
    double numerator = 0.0;   // MC estimate of E[int g(t, X_t) dt]
    double denominator = 0.0; // (int int g^rho dx dt)^{1/rho} by quadrature
    double ratio = 0.0;
};

inline KrylovResult krylov_ratio(const GirsanovRun& run, const OccupationTestFn& g, double rho) {
    const auto [h_lo, h_hi] = run.h.range_bounds();
    if (!(rho > h_hi + 1.0))
        throw ConfigError("krylov_ratio: rho must exceed sup h + 1");
    if (!run.drift.bounded())
        throw ConfigError("krylov_ratio: requires a uniformly bounded drift");

    const std::vector<SampledPath> xs = euler_weak_solution(run);
    std::vector<double> occ(xs.size());
    parallel_for(xs.size(), run.threads, [&](std::size_t p) {
        const auto& x = xs[p];
        const double dt = x.dt();
        double acc = 0.0;
        for (std::size_t i = 0; i <= x.segments(); ++i) {
            const double w = (i == 0 || i == x.segments()) ? 0.5 : 1.0;
            acc += w * g.g(x.time(i), x[i]);
        }
        occ[p] = acc * dt;
    });
    const double numerator = pairwise_sum(occ) / static_cast<double>(occ.size());

    // tensor midpoint quadrature over the declared support
    const std::size_t nt = 256, nx = 1024;
    const double wt = (std::min(g.t_hi, run.h.horizon()) - g.t_lo) / static_cast<double>(nt);
    const double wx = (g.x_hi - g.x_lo) / static_cast<double>(nx);
    std::vector<double> rows(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = g.t_lo + wt * (static_cast<double>(i) + 0.5);
        double acc = 0.0;
        for (std::size_t j = 0; j < nx; ++j) {
            const double x = g.x_lo + wx * (static_cast<double>(j) + 0.5);
            acc += std::pow(g.g(t, x), rho);
        }
        rows[i] = acc * wx * wt;
    }
    const double denominator = std::pow(pairwise_sum(rows), 1.0 / rho);

    KrylovResult out;
    out.g_name = g.name;
    out.rho = rho;
    out.numerator = numerator;
    out.denominator = denominator;
    out.ratio = denominator == 0.0 ? 0.0 : numerator / denominator;
    return out;
}

// --- Thm 4.8 approximation lattice -------------------------------------------

// b_R(t,x) = b(t, clamp(x, -R, R));  b_{R,j} = mollification at scale 1/j;
// btilde_{R,n,k} = min_{j=n..k} b_{R,j}. The mollifier is a fixed smooth bump
// on [-1,1], normalized against the same midpoint rule used to evaluate the
// convolution, so mollifying a constant returns it exactly.
class MollifiedDriftLattice {
  public:
    MollifiedDriftLattice(DriftSpec base, double truncation)
        : base_(std::move(base)), r_(truncation) {
        if (!(r_ > 0.0)) throw std::invalid_argument("MollifiedDriftLattice: R must be positive");
    }

    double clipped(double t, double x) const {
        return base_.b(t, std::clamp(x, -r_, r_));
    }

    double mollified(double t, double x, std::size_t j) const {
        if (j < 1) throw std::invalid_argument("MollifiedDriftLattice: j must be >= 1");
        // b_{R,j}(t,x) = int b_R(t, x - w/j) phi(w) dw over [-1, 1]
        const double inv_j = 1.0 / static_cast<double>(j);
        double acc = 0.0;
        for (std::size_t q = 0; q < bump_panels; ++q) {
            const double w = -1.0 + (2.0 * static_cast<double>(q) + 1.0) / bump_panels;
            acc += bump_value(w) * clipped(t, x - w * inv_j);
        }
        return acc * (2.0 / bump_panels) * bump_norm();
    }

    double lattice_min(double t, double x, std::size_t n, std::size_t k) const {
        if (n < 1 || k < n) throw std::invalid_argument("MollifiedDriftLattice: need 1 <= n <= k");
        double m = mollified(t, x, n);
        for (std::size_t j = n + 1; j <= k; ++j) m = std::min(m, mollified(t, x, j));
        return m;
    }

    // Lipschitz constant in x, uniform in t: j ||b_R||_inf ||phi'||_{L1}
    double lipschitz_bound(std::size_t j) const {
        return static_cast<double>(j) * sup_clipped() * bump_derivative_l1();
    }

    double sup_clipped() const {
        if (base_.bounded()) return base_.sup_norm;
        return base_.growth_const * (1.0 + r_);
    }

    DriftSpec clipped_spec() const {
        DriftSpec d = base_;
        d.family = DriftSpec::Family::discontinuous_bounded;
        d.sup_norm = sup_clipped();
        d.growth_const = std::max(base_.growth_const, d.sup_norm);
        d.name = base_.name + "_clip";
        d.b = [self = *this](double t, double x) { return self.clipped(t, x); };
        return d;
    }

    DriftSpec lattice_spec(std::size_t n, std::size_t k) const {
        DriftSpec d = base_;
        d.family = DriftSpec::Family::bounded_smooth;
        d.sup_norm = sup_clipped();
        d.growth_const = std::max(base_.growth_const, d.sup_norm);
        d.name = base_.name + "_lattice_" + std::to_string(n) + "_" + std::to_string(k);
        d.b = [self = *this, n, k](double t, double x) { return self.lattice_min(t, x, n, k); };
        return d;
    }

  private:
    DriftSpec base_;
    double r_;
    static constexpr std::size_t bump_panels = 256;

    static double bump_value(double w) {
        const double s = 1.0 - w * w;
        return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
    }
    // normalization chosen so the midpoint rule above has unit discrete mass
    static double bump_norm() {
        static const double norm = [] {
            double acc = 0.0;
            for (std::size_t q = 0; q < bump_panels; ++q) {
                const double w = -1.0 + (2.0 * static_cast<double>(q) + 1.0) / bump_panels;
                acc += bump_value(w);
            }
            return 1.0 / (acc * (2.0 / bump_panels));
        }();
        return norm;
    }
    static double bump_derivative_l1() {
        // unimodal bump: int |phi'| = 2 max phi
        return 2.0 * bump_value(0.0) * bump_norm();
    }
};

inline MollifiedDriftLattice mollified_drift_lattice(const DriftSpec& b, double truncation) {
    return MollifiedDriftLattice(b, truncation);
}

struct ComparisonReport {
    std::size_t n = 1, kmax = 1;
    double truncation = 0.0;
    std::size_t paths = 0;
    double tolerance = 0.0;
    double max_violation_k = 0.0; // X_{k+1} <= X_k expected pathwise
    double max_violation_n = 0.0; // X_{n+1} >= X_n expected pathwise
    double max_abs_solution = 0.0;
    bool monotone_k = true;
    bool monotone_n = true;
    bool pass() const { return monotone_k && monotone_n; }
};

// comparison-theorem check: solutions driven by the same noise, ordered
// drifts => ordered trajectories (decreasing in k, increasing in n)
inline ComparisonReport comparison_monotonicity_check(const DriftSpec& b, double truncation,
                                                      std::size_t n_level, std::size_t kmax,
                                                      const GirsanovRun& run) {
    if (n_level < 1 || kmax < n_level + 1)
        throw std::invalid_argument("comparison_monotonicity_check: need 1 <= n < kmax");
    run.validate();
    MollifiedDriftLattice lattice(b, truncation);
    const double dt = run.h.horizon() / static_cast<double>(run.segments);
    const double lip = lattice.lipschitz_bound(kmax);
    if (lip * dt > 1.0)
        throw ConfigError("comparison_monotonicity_check: grid too coarse for the Lipschitz "
                          "constant of the finest mollification (L dt > 1)");

    const GaussianDriver drv{run.seed, run.segments * run.fine_factor, run.h.horizon()};
    const std::vector<SampledPath> bh = sample_rlmbm(run.h, run.segments, drv, run.npaths,
                                                     SamplingMethod::cholesky, run.threads,
                                                     detail::stream_euler);

    ComparisonReport rep;
    rep.n = n_level;
    rep.kmax = kmax;
    rep.truncation = truncation;
    rep.paths = run.npaths;
    rep.tolerance = 1e-9 * std::max(1.0, truncation);

    std::vector<double> viol_k(run.npaths, 0.0), viol_n(run.npaths, 0.0), sup(run.npaths, 0.0);
    parallel_for(run.npaths, run.threads, [&](std::size_t p) {
        std::vector<SampledPath> ladder;
        for (std::size_t k = n_level; k <= kmax; ++k)
            ladder.push_back(detail::euler_one(
                [&](double t, double x) { return lattice.lattice_min(t, x, n_level, k); },
                run.x0, bh[p]));
        for (std::size_t k = 0; k + 1 < ladder.size(); ++k)
            for (std::size_t i = 0; i <= run.segments; ++i)
                viol_k[p] = std::max(viol_k[p], ladder[k + 1][i] - ladder[k][i]);
        const SampledPath upper = detail::euler_one(
            [&](double t, double x) { return lattice.lattice_min(t, x, n_level + 1, kmax); },
            run.x0, bh[p]);
        const SampledPath& lower = ladder.back(); // lattice over j = n..kmax
        for (std::size_t i = 0; i <= run.segments; ++i) {
            viol_n[p] = std::max(viol_n[p], lower[i] - upper[i]);
            sup[p] = std::max(sup[p], std::abs(lower[i]));
        }
    });
    for (std::size_t p = 0; p < run.npaths; ++p) {
        rep.max_violation_k = std::max(rep.max_violation_k, viol_k[p]);
        rep.max_violation_n = std::max(rep.max_violation_n, viol_n[p]);
        rep.max_abs_solution = std::max(rep.max_abs_solution, sup[p]);
    }
    rep.monotone_k = rep.max_violation_k <= rep.tolerance;
    rep.monotone_n = rep.max_violation_n <= rep.tolerance;
    return rep;
}

} // namespace multifrac

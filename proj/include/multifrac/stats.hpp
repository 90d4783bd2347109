#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

#include "multifrac/errors.hpp"
#include "multifrac/quadrature.hpp" // pairwise_sum

// Small dense linear algebra and Monte Carlo reductions. Everything reduces
// in fixed index order so results do not depend on the number of threads.

namespace multifrac {

// Chunked parallel loop over [0, n); f(i) must only write to slot i of
// pre-allocated storage. With threads <= 1 runs inline.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, std::thread::hardware_concurrency() * 4 + 1);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("mean_stderr: need at least 2 samples");
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

struct MomentStats {
    double mean = 0.0, variance = 0.0, skewness = 0.0, excess_kurtosis = 0.0;
    std::size_t count = 0;
};

inline MomentStats moment_stats(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 4) throw std::invalid_argument("moment_stats: need at least 4 samples");
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> m2(n), m3(n), m4(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - mean;
        m2[i] = d * d;
        m3[i] = d * d * d;
        m4[i] = d * d * d * d;
    }
    const double v = pairwise_sum(m2) / static_cast<double>(n);
    const double s3 = pairwise_sum(m3) / static_cast<double>(n);
    const double s4 = pairwise_sum(m4) / static_cast<double>(n);
    return {mean, v, s3 / std::pow(v, 1.5), s4 / (v * v) - 3.0, n};
}

// Row-major square matrix, sized for grid covariances (tens of points).
class Matrix {
  public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const std::vector<double>& data() const { return data_; }

    double trace() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
        return s;
    }

    double max_asymmetry() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
        return m;
    }

  private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct CholeskyResult {
    Matrix lower;        // L with A + jitter*I = L L^T
    double jitter = 0.0; // diagonal shift that was needed (0 if none)
};

// Cholesky factorization with a bounded diagonal-jitter retry for matrices
// that are PSD up to rounding. jitter_budget is relative to the trace.
inline CholeskyResult cholesky_psd(const Matrix& a, double jitter_budget_rel = 1e-10) {
    const std::size_t n = a.size();
    const double scale = std::max(a.trace(), 1e-300);
    double jitter = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Matrix l(n);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                if (i == j) {
                    s += jitter;
                    if (s <= 0.0) {
                        // a zero row/column (e.g. the t=0 grid point) is fine
                        if (std::abs(s) <= 1e-14 * scale) {
                            l(i, i) = 0.0;
                            continue;
                        }
                        ok = false;
                        break;
                    }
                    l(i, i) = std::sqrt(s);
                } else {
                    l(i, j) = l(j, j) > 0.0 ? s / l(j, j) : 0.0;
                }
            }
        }
        if (ok) return {std::move(l), jitter};
        jitter = jitter == 0.0 ? jitter_budget_rel * scale * 1e-2 : jitter * 10.0;
        if (jitter > jitter_budget_rel * scale)
            break;
    }
    throw NumericError("cholesky_psd: matrix indefinite beyond the jitter budget");
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations; used by the
// PSD diagnostics (small matrices only).
inline std::vector<double> symmetric_eigenvalues(Matrix a, int sweeps = 64) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30 * std::max(1.0, a.trace() * a.trace())) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

} // namespace multifrac

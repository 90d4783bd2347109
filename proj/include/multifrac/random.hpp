#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "multifrac/errors.hpp"

// Seeded Gaussian increments with per-path substreams. The substream for
// (master seed, path index) is derived by splitmix64, and normals come from a
// Box-Muller transform over the raw 64-bit output of mt19937_64, so identical
// inputs reproduce bit-identical sequences regardless of how paths are
// scheduled across threads.

namespace multifrac {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

class NormalSampler {
  public:
    NormalSampler(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t s = master_seed;
        detail::splitmix64(s);
        s ^= 0xD1B54A32D192ED03ULL * (stream_index + 1);
        engine_.seed(detail::splitmix64(s));
    }

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // uniform in (0,1] / [0,1) from the top 53 bits
        const double u1 =
            (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct GaussianDriver {
    std::uint64_t master_seed = 1;
    std::size_t cells = 256; // fine-grid cells over [0, T]
    double horizon = 1.0;

    // i.i.d. centered Gaussian increments with variance T/cells
    std::vector<double> increments(std::uint64_t path_index) const {
        if (cells < 2) throw ConfigError("GaussianDriver: need at least 2 fine cells");
        NormalSampler normal(master_seed, path_index);
        const double sd = std::sqrt(horizon / static_cast<double>(cells));
        std::vector<double> out(cells);
        for (auto& x : out) x = sd * normal();
        return out;
    }

    double dt() const { return horizon / static_cast<double>(cells); }
};

} // namespace multifrac

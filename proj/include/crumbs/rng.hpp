#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace crumbs {

// mt19937_64 with hand-rolled distributions. The standard pins the engine's
// output exactly but leaves distribution algorithms implementation-defined;
// rolling our own keeps datasets, masks and training bit-stable across
// standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, bound) by rejection (no modulo bias).
    uint64_t uniform_u64(uint64_t bound) {
        if (bound == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform_double(double lo, double hi) { return lo + (hi - lo) * uniform_double(); }

    // Standard normal via Box-Muller (both values used).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform_double();
        } while (u1 <= 0.0);
        double u2 = uniform_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_u64(i)]);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace crumbs

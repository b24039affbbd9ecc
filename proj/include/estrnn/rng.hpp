#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace estrnn {

// Seedable generator with stateless distributions so that saved state
// reproduces the stream exactly (std::normal_distribution caches a spare
// value, which would have to be serialized separately).
class Rng {
public:
    Rng() : Rng(0x9e3779b97f4a7c15ULL) {}
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p = 0.5) { return uniform() < p; }

    // Box-Muller without cached spare.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Derive an independent stream (e.g. one per sequence) so that work can
    // fan out across threads without changing the results.
    Rng fork(std::uint64_t stream_id) const {
        std::uint64_t mix = seed_ ^ (0xbf58476d1ce4e5b9ULL * (stream_id + 1));
        mix ^= mix >> 31;
        return Rng(mix * 0x94d049bb133111ebULL + stream_id);
    }

    std::string state() const {
        std::ostringstream os;
        os << seed_ << ' ' << engine_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> seed_ >> engine_;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
};

}  // namespace estrnn

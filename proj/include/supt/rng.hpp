#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace supt {

// Deterministic 64-bit PRNG (splitmix64 core). Streams can be split by name so
// that every component of a run draws from its own reproducible sequence,
// independent of call order elsewhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Derive an independent child stream keyed by a label.
    Rng child(std::string_view name) const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return Rng(mix(state_ + 0x9e3779b97f4a7c15ull) ^ mix(h));
    }

    Rng child(std::string_view name, std::uint64_t index) const {
        Rng c = child(name);
        c.state_ = mix(c.state_ + mix(index + 0x9e3779b97f4a7c15ull));
        return c;
    }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    // Standard normal via Box-Muller; avoids libstdc++'s distribution objects
    // so streams are identical across platforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace supt

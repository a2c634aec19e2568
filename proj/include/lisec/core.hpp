#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace lisec {

// Simulation time in integer microseconds. Integer ticks keep traces
// byte-identical across runs and compilers.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;

constexpr SimTime from_seconds(double s) {
    return static_cast<SimTime>(s * static_cast<double>(kMicrosPerSecond) + (s >= 0 ? 0.5 : -0.5));
}

constexpr double to_seconds(SimTime t) {
    return static_cast<double>(t) / static_cast<double>(kMicrosPerSecond);
}

using NodeId = std::uint32_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Seeded generator with portable distributions. std::uniform_*_distribution
// is implementation-defined, so the helpers below derive values from raw
// 64-bit draws only.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw Error("Rng::below: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    SimTime uniform_time(SimTime lo, SimTime hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<SimTime>(below(static_cast<std::uint64_t>(hi - lo)));
    }

    // Independent child stream, e.g. one per simulation run.
    Rng fork(std::uint64_t salt) {
        return Rng(splitmix(engine_() ^ splitmix(salt)));
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace lisec

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>

namespace mecsim {

// Named deterministic random stream. Identical (seed, name) pairs always
// reproduce the same sample sequence; distinct names give decorrelated
// streams drawn from the same global seed.
class RngStream {
public:
    RngStream(std::uint64_t global_seed, std::string_view name);

    const std::string& name() const { return name_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0, 1]; never returns 0, so log(u) is always finite.
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Number of points of a rate-1 Poisson process in [0, mean]; O(mean)
    // draws but immune to the underflow of the product method.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        std::uint64_t n = 0;
        double acc = -std::log(uniform01());
        while (acc <= mean) {
            ++n;
            acc += -std::log(uniform01());
        }
        return n;
    }

    // P(n) = rho^n * (1 - rho), n >= 0, by inversion.
    std::uint64_t geometric_rho(double rho) {
        if (rho <= 0.0) return 0;
        const double u = uniform01();
        return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(rho)));
    }

    // Sum of k independent exponential(rate) stages.
    double erlang(std::uint64_t k, double rate) {
        double sum = 0.0;
        for (std::uint64_t i = 0; i < k; ++i) sum += -std::log(uniform01());
        return sum / rate;
    }

private:
    std::string name_;
    std::mt19937_64 gen_;
};

// Registry of named streams for one simulation run.
class RngRegistry {
public:
    explicit RngRegistry(std::uint64_t global_seed) : seed_(global_seed) {}

    std::uint64_t seed() const { return seed_; }

    RngStream& stream(std::string_view name);

private:
    std::uint64_t seed_;
    std::map<std::string, std::unique_ptr<RngStream>, std::less<>> streams_;
};

} // namespace mecsim

#include "mecsim/rng.hpp"

namespace mecsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

RngStream::RngStream(std::uint64_t global_seed, std::string_view name) : name_(name) {
    const std::uint64_t h = fnv1a64(name);
    const std::uint64_t a = splitmix64(global_seed ^ h);
    const std::uint64_t b = splitmix64(a ^ 0xD1B54A32D192ED03ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    gen_.seed(seq);
}

RngStream& RngRegistry::stream(std::string_view name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) {
        it = streams_.emplace(std::string(name),
                              std::make_unique<RngStream>(seed_, name)).first;
    }
    return *it->second;
}

} // namespace mecsim

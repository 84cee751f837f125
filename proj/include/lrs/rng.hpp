#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrs::rng {

// Generator identifier recorded in manifests. Bump whenever the engine or
// any of the draw mappings below change, since that invalidates recorded
// seeds.
inline constexpr const char* kGeneratorVersion = "mt19937_64-v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a purpose tag
// (e.g. "init", "mutants", "crossover", "dynamic-bias"). Streams for
// different purposes never share state, so adding a consumer for one
// purpose does not shift the sequence seen by another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ splitmix64(h));
}

// A seeded random stream with portable draw mappings. std::mt19937_64 output
// is fully specified by the standard; the distributions in <random> are not,
// so the mappings here are hand-rolled to keep seeded results identical
// across standard libraries.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1).
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in the open interval (0, 1).
    double next_open_unit() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace lrs::rng

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aloha {

// splitmix64 finalizer; decorrelates nearby seeds before they reach the engine
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t tag_hash(std::string_view tag) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives the seed of a named substream from a master seed. Every consumer of
// randomness in a run (per-user arrivals, per-user action draws, replay
// sampling, weight init) owns one such stream, so changing one consumer never
// shifts the draws seen by another.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index = 0) {
    return mix64(mix64(master ^ tag_hash(tag)) + index);
}

// Uniform randomness source with a fixed draw layout. All distributions are
// derived from raw 64-bit outputs here rather than <random> distribution
// classes, so sequences are reproducible independent of the standard library
// implementation.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_double() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Knuth's product method; exact for the small rates used here
    int poisson(double rate) {
        const double limit = std::exp(-rate);
        double prod = 1.0;
        int count = -1;
        do {
            ++count;
            prod *= next_double();
        } while (prod > limit);
        return count;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace aloha

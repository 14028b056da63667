#pragma once

#include <cstdint>
#include <random>

namespace spm {

using Engine = std::mt19937_64;

/// Derives a decorrelated 64-bit seed for stream `stream` of base seed `seed`
/// (splitmix64 finalizer). Streams are stable across thread counts.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

/// Engine for stream `stream` of `seed`.
Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

/// Engine for a two-level stream key, e.g. (generation, proposal index).
Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream);

double uniform01(Engine& engine);

/// Binomial(n, p) draw. Inversion for small means, libstdc++ BTPE otherwise.
long binomial(Engine& engine, long n, double p);

struct MultinomialDraw {
    long first = 0;
    long second = 0;
};

/// Joint draw of counts for two competing exits with probabilities p1, p2
/// (p1 + p2 <= 1); the remainder stays. Exact multinomial via conditional binomials.
MultinomialDraw multinomial2(Engine& engine, long n, double p1, double p2);

}  // namespace spm

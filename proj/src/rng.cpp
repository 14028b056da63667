#include "spm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace spm {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Below this mean the inversion sampler is cheaper than BTPE setup.
constexpr double kInversionMean = 16.0;

long binomial_inversion(Engine& engine, long n, double q) {
    // q <= 0.5 and n*q small, so (1-q)^n does not underflow.
    const double s = q / (1.0 - q);
    const double a = static_cast<double>(n + 1) * s;
    double r = std::pow(1.0 - q, static_cast<double>(n));
    double u = uniform01(engine);
    long x = 0;
    while (u > r && x < n) {
        u -= r;
        ++x;
        r *= a / static_cast<double>(x) - s;
        if (r <= 0.0) break;
    }
    return x;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
    return Engine{derive_seed(seed, stream)};
}

Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    return Engine{derive_seed(derive_seed(seed, stream), substream)};
}

double uniform01(Engine& engine) {
    // 53 random mantissa bits in [0, 1).
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

long binomial(Engine& engine, long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;
    long x;
    if (static_cast<double>(n) * q < kInversionMean) {
        x = binomial_inversion(engine, n, q);
    } else {
        std::binomial_distribution<long> dist(n, q);
        x = dist(engine);
    }
    return flip ? n - x : x;
}

MultinomialDraw multinomial2(Engine& engine, long n, double p1, double p2) {
    MultinomialDraw draw;
    if (n <= 0) return draw;
    draw.first = binomial(engine, n, p1);
    const double rest = 1.0 - p1;
    if (rest > 0.0 && draw.first < n) {
        draw.second = binomial(engine, n - draw.first, std::clamp(p2 / rest, 0.0, 1.0));
    }
    return draw;
}

}  // namespace spm

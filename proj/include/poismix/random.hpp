#pragma once

// Self-contained RNG stack: xoshiro256++ engine seeded through splitmix64,
// cheap substream derivation for reproducible parallel draws, and the discrete
// samplers the mixture algorithms need (Poisson, zero-truncated Poisson,
// gamma, signed Bernoulli sums).  No <random> distributions are used anywhere:
// their output is not pinned across standard library versions, and the CLI
// promises byte-identical output for a given seed.

#include <cstdint>
#include <cmath>
#include <bit>

namespace poismix {

// splitmix64 (Steele, Lea, Vigna). Used only to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ 1.0 (Blackman, Vigna 2019). Period 2^256-1, passes BigCrush.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    Xoshiro256pp() : Xoshiro256pp(0x6d8a1f6f7e1c9d03ULL) {}

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t operator()() {
        const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

private:
    std::uint64_t s_[4];
};

// Seeded source of uniforms with substream support.  substream(i) derives an
// independently seeded engine from (root seed, i); the derivation mixes the
// index through splitmix64 so neighbouring indices decorrelate.  All samplers
// below consume uniforms only through u01()/u64(), so a fixed (seed, stream)
// pair yields the same sequence on every platform and thread count.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : root_seed_(seed), stream_(stream), eng_(mix(seed, stream)) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform on the open interval (0,1); never returns 0 or 1, so logs and
    // inverse-cdf transforms are always finite.
    double u01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    RandomSource substream(std::uint64_t index) const {
        return RandomSource(root_seed_, mix(stream_ + 1, index));
    }

    std::uint64_t seed() const { return root_seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t st = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        std::uint64_t r = splitmix64(st);
        st ^= b;
        return r ^ splitmix64(st);
    }

    std::uint64_t root_seed_;
    std::uint64_t stream_;
    Xoshiro256pp eng_;
};

// Standard normal via Box-Muller with a cached spare. Deterministic given the
// engine state; only used off the hot path (gamma shapes, diagnostics).
class NormalCache {
public:
    double operator()(RandomSource& rng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = rng.u01(), u2 = rng.u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double c = std::cos(6.283185307179586477 * u2);
        double s = std::sin(6.283185307179586477 * u2);
        spare_ = r * s;
        has_spare_ = true;
        return r * c;
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {

// Hormann (1993) PTRS transformed rejection, exact for mean >= 10.
// Follows the published constants; see also the W. Hormann ACM TOMS paper
// "The transformed rejection method for generating Poisson random variables".
inline long long poisson_ptrs(double mean, RandomSource& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = rng.u01() - 0.5;
        double v = rng.u01();
        double us = 0.5 - std::fabs(u);
        double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<long long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            k * loglam - mean - std::lgamma(k + 1.0)) {
            return static_cast<long long>(k);
        }
    }
}

// Knuth-style sequential search on the cdf; O(mean), fine below the cutoff.
inline long long poisson_inversion(double mean, RandomSource& rng) {
    double p = std::exp(-mean);
    double f = p;
    double u = rng.u01();
    long long k = 0;
    while (u > f) {
        ++k;
        p *= mean / static_cast<double>(k);
        f += p;
        if (k > 2000) break;  // u ~ 1 and cumulative roundoff; f has saturated
    }
    return k;
}

}  // namespace detail

inline long long sample_poisson(double mean, RandomSource& rng) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) return detail::poisson_inversion(mean, rng);
    return detail::poisson_ptrs(mean, rng);
}

// Zero-truncated Poisson: N | N >= 1 with N ~ Poisson(mean).
// Small means: inversion on the truncated cdf, seeded with p1 = mean/expm1(mean)
// so no mass is lost to the excluded zero.  Large means: resample-on-zero,
// which rejects with probability e^-mean < 1e-13 for mean > 30.
inline long long sample_ztpois(double mean, RandomSource& rng) {
    if (!(mean > 0.0)) return 1;
    if (mean < 30.0) {
        double p = mean / std::expm1(mean);
        double f = p;
        double u = rng.u01();
        long long k = 1;
        while (u > f) {
            ++k;
            p *= mean / static_cast<double>(k);
            f += p;
            if (k > 2000) break;
        }
        return k;
    }
    for (;;) {
        long long n = detail::poisson_ptrs(mean, rng);
        if (n >= 1) return n;
    }
}

// Marsaglia-Tsang (2000) squeeze method; shape < 1 boosted via Ga(shape+1)
// and the U^{1/shape} power trick.  rate is the inverse scale.
inline double sample_gamma(double shape, double rate, RandomSource& rng) {
    if (shape < 1.0) {
        double u = rng.u01();
        return sample_gamma(shape + 1.0, rate, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    NormalCache normal;
    for (;;) {
        double x, v;
        do {
            x = normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = rng.u01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

// Sum of n independent uniform +-1 signs, computed 64 signs at a time from
// the popcount of raw engine words: each word w contributes
// 2*popcount(w) - 64.  Exact distribution, ~60x fewer engine calls than
// drawing signs one by one; this is the inner loop of the variance-mixture
// sampler where n runs into the tens of thousands.
inline long long sample_signed_steps(long long n, RandomSource& rng) {
    long long total = 0;
    while (n >= 64) {
        total += 2 * static_cast<long long>(std::popcount(rng.u64())) - 64;
        n -= 64;
    }
    if (n > 0) {
        std::uint64_t w = rng.u64() & ((1ULL << n) - 1ULL);
        total += 2 * static_cast<long long>(std::popcount(w)) - n;
    }
    return total;
}

}  // namespace poismix

#pragma once

#include <cmath>
#include <cstdint>

namespace spinlab {

/// Deterministic counter-based generator (SplitMix64 finalizer over a Weyl
/// sequence).  Chosen over std::mt19937 + <random> distributions because the
/// standard distributions are implementation-defined: identical seeds must
/// reproduce identical streams for every build of this code.  Streams may be
/// split off by index for parallel work.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

    /// Child stream k; independent of draws made on the parent so far.
    Rng split(std::uint64_t k) const {
        return Rng(mix(state_ + 0x9e3779b97f4a7c15ULL * (2 * k + 1)) ^ 0x632be59bd9b4e019ULL);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n), n >= 1 (Lemire reduction, no modulo bias).
    std::uint64_t below(std::uint64_t n) {
        while (true) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            auto lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    /// Standard normal via Box-Muller; caches the spare draw.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Exact Binomial(n, p) draw.  Small n loops Bernoulli; fair coins count
    /// random bits; otherwise inversion walking outward from the mode, which
    /// touches O(sqrt(n)) pmf values in expectation.
    long binomial(long n, double p);

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace spinlab

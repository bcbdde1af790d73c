#include "spinlab/rng.hpp"

#include "spinlab/errors.hpp"

namespace spinlab {

long Rng::binomial(long n, double p) {
    if (n < 0 || !(p >= 0.0) || !(p <= 1.0)) throw ArgumentError("binomial: need n >= 0, p in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p == 0.5) {
        // count of n fair bits
        long total = 0, left = n;
        while (left >= 64) {
            total += __builtin_popcountll(next_u64());
            left -= 64;
        }
        if (left > 0) total += __builtin_popcountll(next_u64() >> (64 - left));
        return total;
    }
    if (n <= 256) {
        long c = 0;
        for (long i = 0; i < n; ++i) c += bernoulli(p) ? 1 : 0;
        return c;
    }
    // Inversion over the outward-from-mode enumeration k0, k0+1, k0-1, ...
    // Any fixed enumeration yields exact marginals; this order reaches the
    // bulk of the mass in O(sqrt(n)) pmf evaluations.
    const double q = 1.0 - p;
    long k0 = static_cast<long>((n + 1) * p);
    if (k0 > n) k0 = n;
    double lp0 = std::lgamma(n + 1.0) - std::lgamma(k0 + 1.0) - std::lgamma(n - k0 + 1.0) +
                 k0 * std::log(p) + (n - k0) * std::log(q);
    double pmf0 = std::exp(lp0);
    double U = uniform();
    double up = pmf0, down = pmf0;
    long ku = k0, kd = k0;
    U -= pmf0;
    if (U < 0.0) return k0;
    while (true) {
        if (ku < n) {
            ++ku;
            up *= (p / q) * static_cast<double>(n - ku + 1) / static_cast<double>(ku);
            U -= up;
            if (U < 0.0) return ku;
        }
        if (kd > 0) {
            --kd;
            down *= (q / p) * static_cast<double>(kd + 1) / static_cast<double>(n - kd);
            U -= down;
            if (U < 0.0) return kd;
        }
        if (ku >= n && kd <= 0) return k0; // exhausted; numeric slack
    }
}

} // namespace spinlab

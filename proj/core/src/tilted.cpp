#include "spinlab/tilted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab::tilted {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long kBinomialCap = 1000000;
constexpr int kGeneralCap = 20;

// signed accumulator over log-magnitudes with streaming rescale
struct SignedLse {
    double mxp = kNegInf, sp = 0.0;
    double mxn = kNegInf, sn = 0.0;
    void add(double logmag, bool positive) {
        if (logmag == kNegInf) return;
        double& mx = positive ? mxp : mxn;
        double& s = positive ? sp : sn;
        if (logmag > mx) {
            s = s * std::exp(mx - logmag) + 1.0;
            mx = logmag;
        } else {
            s += std::exp(logmag - mx);
        }
    }
    double value() const {
        double pos = sp > 0.0 ? std::exp(mxp + std::log(sp)) : 0.0;
        double neg = sn > 0.0 ? std::exp(mxn + std::log(sn)) : 0.0;
        return pos - neg;
    }
};

// log of |h_m(y)| together with its sign; m * log|y| is skipped at m = 0 so
// that y = 0 stays well-defined
bool log_hm(int m, double gamma, double y, double* logmag) {
    bool positive = true;
    double lm = -gamma * y * y;
    if (m > 0) {
        if (y == 0.0) {
            *logmag = kNegInf;
            return true;
        }
        lm += m * std::log(std::abs(y));
        if (y < 0.0 && (m & 1)) positive = false;
    }
    *logmag = lm;
    return positive;
}

bool symmetric_odd(const TiltedEnsemble& ens, int m) {
    if (!(m & 1) || ens.mu != 0.0) return false;
    for (long k = 0; k < ens.size(); ++k)
        if (ens.means[k] != 0.0) return false;
    return true;
}

double exact_binomial_path(const TiltedEnsemble& ens, int m) {
    const long n = ens.size();
    const double a = ens.weights[0], p = ens.means[0];
    const double lp = std::log1p(p) - std::log(2.0);  // log((1+p)/2)
    const double lq = std::log1p(-p) - std::log(2.0); // log((1-p)/2)
    const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
    const double sw = std::sqrt(ens.omega);
    SignedLse acc;
    for (long j = 0; j <= n; ++j) {
        double logw = lgn - std::lgamma(static_cast<double>(j) + 1.0) -
                      std::lgamma(static_cast<double>(n - j) + 1.0) + j * lp + (n - j) * lq;
        double z = a * (2.0 * j - n - n * p) / sw;
        double logmag;
        bool positive = log_hm(m, ens.gamma, z + ens.mu, &logmag);
        acc.add(logw + logmag, positive);
    }
    return acc.value();
}

double exact_general_path(const TiltedEnsemble& ens, int m) {
    const long n = ens.size();
    if (n > kGeneralCap)
        throw CapacityError("general-weight enumeration capped at n = " +
                            std::to_string(kGeneralCap));
    const double sw = std::sqrt(ens.omega);
    SignedLse acc;
    const std::uint64_t N = 1ull << n;
    for (std::uint64_t mask = 0; mask < N; ++mask) {
        double logw = 0.0, dot = 0.0;
        for (long k = 0; k < n; ++k) {
            double xi = (mask >> k) & 1u ? 1.0 : -1.0;
            logw += std::log1p(xi * ens.means[k]) - std::log(2.0);
            dot += ens.weights[k] * (xi - ens.means[k]);
        }
        double logmag;
        bool positive = log_hm(m, ens.gamma, dot / sw + ens.mu, &logmag);
        acc.add(logw + logmag, positive);
    }
    return acc.value();
}

// moments E[Z^k e^{theta Z}] for k = 0,1,2 (pure linear tilt)
void linear_tilt_moments(const TiltedEnsemble& ens, double theta, double out[3]) {
    const double sw = std::sqrt(ens.omega);
    SignedLse acc[3];
    auto feed = [&](double logw, double z) {
        double l = logw + theta * z;
        acc[0].add(l, true);
        if (z != 0.0) {
            double lz = std::log(std::abs(z));
            acc[1].add(l + lz, z > 0.0);
            acc[2].add(l + 2.0 * lz, true);
        }
    };
    if (ens.equal_weight()) {
        const long n = ens.size();
        const double a = ens.weights[0], p = ens.means[0];
        const double lp = std::log1p(p) - std::log(2.0);
        const double lq = std::log1p(-p) - std::log(2.0);
        const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
        for (long j = 0; j <= n; ++j) {
            double logw = lgn - std::lgamma(static_cast<double>(j) + 1.0) -
                          std::lgamma(static_cast<double>(n - j) + 1.0) + j * lp + (n - j) * lq;
            feed(logw, a * (2.0 * j - n - n * p) / sw);
        }
    } else {
        const long n = ens.size();
        if (n > kGeneralCap)
            throw CapacityError("general-weight enumeration capped at n = " +
                                std::to_string(kGeneralCap));
        const std::uint64_t N = 1ull << n;
        for (std::uint64_t mask = 0; mask < N; ++mask) {
            double logw = 0.0, dot = 0.0;
            for (long k = 0; k < n; ++k) {
                double xi = (mask >> k) & 1u ? 1.0 : -1.0;
                logw += std::log1p(xi * ens.means[k]) - std::log(2.0);
                dot += ens.weights[k] * (xi - ens.means[k]);
            }
            feed(logw, dot / sw);
        }
    }
    for (int k = 0; k < 3; ++k) out[k] = acc[k].value();
}

} // namespace

TiltedEnsemble::TiltedEnsemble(Eigen::VectorXd a, Eigen::VectorXd p, double gamma_, double mu_)
    : weights(std::move(a)), means(std::move(p)), gamma(gamma_), mu(mu_) {
    if (weights.size() < 1 || weights.size() != means.size())
        throw ArgumentError("weights and means must share a positive length");
    if (!(gamma >= 0.0)) throw ArgumentError("gamma must be nonnegative");
    if (!std::isfinite(mu)) throw ArgumentError("mu must be finite");
    double w = 0.0;
    for (long k = 0; k < weights.size(); ++k) {
        if (!(std::abs(weights[k]) <= 1.0)) throw ArgumentError("weights must lie in [-1,1]");
        if (!(std::abs(means[k]) < 1.0))
            throw ArgumentError("means must lie strictly inside (-1,1)");
        w += weights[k] * weights[k] * (1.0 - means[k] * means[k]);
    }
    if (!(w > 0.0)) throw ArgumentError("ensemble variance omega must be positive");
    omega = w;
}

bool TiltedEnsemble::equal_weight() const {
    for (long k = 1; k < weights.size(); ++k)
        if (weights[k] != weights[0] || means[k] != means[0]) return false;
    return true;
}

TiltedEnsemble fair_coin(long n, double gamma, double mu) {
    if (n < 1 || n > kBinomialCap)
        throw ArgumentError("fair_coin size must lie in [1, 10^6]");
    return TiltedEnsemble(Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n), gamma, mu);
}

double hm_eval(int m, double gamma, double x) {
    if (m < 0) throw ArgumentError("moment index must be nonnegative");
    return std::pow(x, m) * std::exp(-gamma * x * x);
}

double gaussian_tilted_moment(int m, double gamma) {
    if (m < 0) throw ArgumentError("moment index must be nonnegative");
    if (!(gamma >= 0.0)) throw ArgumentError("gamma must be nonnegative");
    double even = 1.0 / std::sqrt(1.0 + 2.0 * gamma); // E[h_0]
    double odd = 0.0;                                 // E[h_1]
    if (m == 0) return even;
    for (int k = 2; k <= m; ++k) {
        double next = (k - 1) / (1.0 + 2.0 * gamma) * (k % 2 == 0 ? even : odd);
        (k % 2 == 0 ? even : odd) = next;
    }
    return m % 2 == 0 ? even : odd;
}

double exact_tilted_moment(const TiltedEnsemble& ens, int m) {
    if (m < 0) throw ArgumentError("moment index must be nonnegative");
    if (symmetric_odd(ens, m)) return 0.0; // odd function of a symmetric law
    if (ens.equal_weight()) {
        if (ens.size() > kBinomialCap)
            throw CapacityError("binomial path capped at n = " + std::to_string(kBinomialCap));
        return exact_binomial_path(ens, m);
    }
    return exact_general_path(ens, m);
}

std::pair<double, double> mc_tilted_moment(const TiltedEnsemble& ens, int m, long samples,
                                           std::uint64_t seed) {
    if (m < 0) throw ArgumentError("moment index must be nonnegative");
    if (samples < 1000) throw ArgumentError("at least 1000 samples required");
    const long n = ens.size();
    const double sw = std::sqrt(ens.omega);
    const bool eq = ens.equal_weight();
    double sum = 0.0, sumsq = 0.0;
    Rng master(seed);
    long done = 0;
    std::uint64_t chunk_id = 0;
    // fixed-size chunks with split generator streams keep the draw sequence
    // independent of any batching of the loop
    while (done < samples) {
        long batch = std::min<long>(65536, samples - done);
        Rng r = master.split(chunk_id++);
        for (long s = 0; s < batch; ++s) {
            double z;
            if (eq) {
                double p = ens.means[0];
                long j = r.binomial(n, 0.5 * (1.0 + p));
                z = ens.weights[0] * (2.0 * j - n - n * p) / sw;
            } else {
                double dot = 0.0;
                for (long k = 0; k < n; ++k) {
                    double xi = r.bernoulli(0.5 * (1.0 + ens.means[k])) ? 1.0 : -1.0;
                    dot += ens.weights[k] * (xi - ens.means[k]);
                }
                z = dot / sw;
            }
            double v = hm_eval(m, ens.gamma, z + ens.mu);
            sum += v;
            sumsq += v * v;
        }
        done += batch;
    }
    double mean = sum / samples;
    double var = std::max(0.0, sumsq / samples - mean * mean);
    double se = std::sqrt(var / samples);
    return {mean, se};
}

double deficit(const TiltedEnsemble& ens, int m) {
    return std::abs(exact_tilted_moment(ens, m) - gaussian_tilted_moment(m, ens.gamma));
}

TiltedVarianceResult tilted_variance(const TiltedEnsemble& ens, double t, double beta_tilt) {
    if (!(beta_tilt >= 0.0)) throw ArgumentError("tilt strength must be nonnegative");
    const double n = static_cast<double>(ens.size());
    TiltedVarianceResult out;
    out.zeta = ens.omega / n;
    out.gaussian_prediction = out.zeta / (1.0 + 2.0 * beta_tilt * out.zeta);
    out.within_theorem_range = std::abs(t) <= beta_tilt / std::sqrt(n) + 1e-15;
    if (beta_tilt == 0.0 && t == 0.0) {
        out.variance = out.zeta; // untilted: Var(Z) = 1 by construction
        return out;
    }
    if (beta_tilt == 0.0) {
        // pure exponential tilt: complete-the-square shift is unavailable
        double theta = t * std::sqrt(out.zeta);
        double mom[3];
        linear_tilt_moments(ens, theta, mom);
        double mean = mom[1] / mom[0];
        out.variance = out.zeta * (mom[2] / mom[0] - mean * mean);
        return out;
    }
    // e^{t W - beta W^2} = const * e^{-gamma (Z - c)^2} with W = sqrt(zeta) Z
    TiltedEnsemble shifted = ens;
    shifted.gamma = beta_tilt * out.zeta;
    shifted.mu = -(t / (2.0 * beta_tilt)) * std::sqrt(n / ens.omega);
    double e0 = exact_tilted_moment(shifted, 0);
    double e1 = exact_tilted_moment(shifted, 1);
    double e2 = exact_tilted_moment(shifted, 2);
    double mean = e1 / e0;
    out.variance = out.zeta * (e2 / e0 - mean * mean);
    return out;
}

std::vector<double> hm_derivative_coeffs(int m, int ell) {
    if (m < 0 || ell < 0) throw ArgumentError("indices must be nonnegative");
    std::vector<double> c{1.0}; // level 0: single entry at i = 0
    for (int l = 0; l < ell; ++l) {
        std::vector<double> next(static_cast<size_t>(2 * (l + 1) + 1), 0.0);
        auto get = [&](int i) {
            if (i < -l || i > l) return 0.0;
            return c[static_cast<size_t>(i + l)];
        };
        for (int j = -(l + 1); j <= l + 1; ++j)
            next[static_cast<size_t>(j + l + 1)] = (m + j + 1) * get(j + 1) - 2.0 * get(j - 1);
        c = std::move(next);
    }
    return c;
}

double hm_derivative_eval(int m, int ell, double gamma, double x) {
    auto c = hm_derivative_coeffs(m, ell);
    double acc = 0.0;
    for (int i = -ell; i <= ell; ++i) {
        double ci = c[static_cast<size_t>(i + ell)];
        if (ci == 0.0 || m + i < 0) continue;
        acc += ci * std::pow(gamma, 0.5 * (ell + i)) * hm_eval(m + i, gamma, x);
    }
    return acc;
}

double poisson_solution_eval(int m, double gamma, double x) {
    if (m < 1) throw ArgumentError("the Stein solution needs a positive moment index");
    if (!(gamma >= 0.0)) throw ArgumentError("gamma must be nonnegative");
    return -std::pow(x, m - 1) * std::exp(-gamma * x * x) / (1.0 + 2.0 * gamma);
}

double tilde_h_eval(int m, double gamma, double x) {
    if (m < 0) throw ArgumentError("moment index must be nonnegative");
    double v = hm_eval(m, gamma, x);
    if (m >= 2) v -= (m - 1) / (1.0 + 2.0 * gamma) * hm_eval(m - 2, gamma, x);
    return v;
}

double gaussian_parity_expectation(int m, int ell, double gamma, double a) {
    if (m < 1 || ell < 0) throw ArgumentError("requires m >= 1 and ell >= 0");
    if (!(gamma >= 0.0)) throw ArgumentError("gamma must be nonnegative");
    if (!(a >= 0.5 && a <= 1.0)) throw ArgumentError("variance a must lie in [1/2, 1]");
    if ((m + ell) % 2 == 0) return 0.0; // parity: every surviving moment is odd
    auto c = hm_derivative_coeffs(m - 1, ell);
    const double denom = 1.0 + 2.0 * a * gamma;
    const double sigma2 = a / denom; // Var of G_a reweighted by e^{-gamma x^2}
    double acc = 0.0;
    for (int i = -ell; i <= ell; ++i) {
        double ci = c[static_cast<size_t>(i + ell)];
        int k = m - 1 + i;
        if (ci == 0.0 || k < 0 || (k & 1)) continue;
        double mom = 1.0; // (k-1)!! sigma^k
        for (int d = k - 1; d >= 1; d -= 2) mom *= d;
        mom *= std::pow(sigma2, 0.5 * k);
        acc += ci * std::pow(gamma, 0.5 * (ell + i)) * mom;
    }
    return -acc / ((1.0 + 2.0 * gamma) * std::sqrt(denom));
}

} // namespace spinlab::tilted

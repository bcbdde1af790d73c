#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace spinlab::tilted {

/// Weighted sum of independent +-1 variables, studied under the quadratic
/// tilt e^{-gamma x^2} after normalization: Z = (1/sqrt(omega)) sum a_k (xi_k
/// - p_k) with omega = sum a_k^2 (1 - p_k^2).  `mu` shifts the evaluation
/// point of the moment functions, never the ensemble itself.
struct TiltedEnsemble {
    Eigen::VectorXd weights; // a_k, |a_k| <= 1
    Eigen::VectorXd means;   // p_k = E[xi_k], strictly inside (-1, 1)
    double gamma = 0.0;
    double mu = 0.0;
    double omega = 0.0;

    TiltedEnsemble(Eigen::VectorXd a, Eigen::VectorXd p, double gamma_, double mu_);

    long size() const { return weights.size(); }
    /// true when every weight and every mean coincide (binomial fast path)
    bool equal_weight() const;
};

/// All-equal ensemble of fair signs: a_k = 1, p_k = 0, omega = n.
TiltedEnsemble fair_coin(long n, double gamma, double mu);

/// x^m e^{-gamma x^2}.
double hm_eval(int m, double gamma, double x);

/// E[G^m e^{-gamma G^2}] for standard normal G, by the two-term recursion
/// E[h_m] = (m-1)/(1+2 gamma) E[h_{m-2}] with E[h_0] = (1+2 gamma)^{-1/2}.
double gaussian_tilted_moment(int m, double gamma);

/// Exact E[(Z+mu)^m e^{-gamma (Z+mu)^2}].  Equal-weight ensembles sum n+1
/// binomial atoms (valid to n = 10^6); general weights enumerate all 2^n sign
/// patterns and are capped at n = 20.
double exact_tilted_moment(const TiltedEnsemble& ens, int m);

/// Monte Carlo estimate of the same quantity: (estimate, standard error).
std::pair<double, double> mc_tilted_moment(const TiltedEnsemble& ens, int m, long samples,
                                           std::uint64_t seed);

/// |E[h_m(Z+mu)] - E[h_m(G)]| for this ensemble (G stays centered); a lower
/// bound on the class-wide discrepancy, not the supremum.
double deficit(const TiltedEnsemble& ens, int m);

struct TiltedVarianceResult {
    double variance = 0.0;            // Var(W) under e^{t W - beta W^2}
    double gaussian_prediction = 0.0; // zeta / (1 + 2 beta zeta)
    double zeta = 0.0;                // omega / n
    bool within_theorem_range = true; // |t| <= beta / sqrt(n), indicative only
};

/// Variance of W = sqrt(omega/n) Z under the tilted law e^{t W - beta W^2},
/// computed through the h_0, h_1, h_2 moments at the completed-square shift.
/// The ensemble's own gamma and mu are ignored; the tilt fixes both.
TiltedVarianceResult tilted_variance(const TiltedEnsemble& ens, double t, double beta_tilt);

/// Coefficients c_{m,ell,i}, i in [-ell, ell] (index i+ell), in the expansion
/// of the ell-th derivative: h_m^{(ell)} = sum_i c_{m,ell,i}
/// gamma^{(ell+i)/2} h_{m+i}.  Integer-valued; parity i = ell (mod 2).
std::vector<double> hm_derivative_coeffs(int m, int ell);

/// Evaluate h_m^{(ell)}(x) via the coefficient table.
double hm_derivative_eval(int m, int ell, double gamma, double x);

/// Solution of the Stein equation driven by the recentred h_m:
/// f_m(x) = -x^{m-1} e^{-gamma x^2} / (1 + 2 gamma).  Requires m >= 1.
double poisson_solution_eval(int m, double gamma, double x);

/// tilde h_m(x) = h_m(x) - (m-1)/(1+2 gamma) h_{m-2}(x).
double tilde_h_eval(int m, double gamma, double x);

/// E[f_m^{(ell)}(G_a)] for G_a ~ N(0, a), a in [1/2, 1]; exactly zero when
/// m + ell is even.
double gaussian_parity_expectation(int m, int ell, double gamma, double a);

} // namespace spinlab::tilted

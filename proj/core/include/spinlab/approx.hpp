#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "spinlab/model.hpp"

namespace spinlab::approx {

/// Mean-field quantities attached to a (beta, u, h) triple: the magnetization
/// fixed point and the entrywise profiles entering the rank-one covariance
/// and correlation approximants.
struct ApproxParams {
    double m_star = 0.0;
    double lambda_star = 0.0;
    double alpha_star = 0.0;
    double F_second = 0.0;
    Eigen::VectorXd v_star;
    Eigen::VectorXd w_star;
};

/// Root of m = (1/n) sum_i u_i tanh(h_i - 2 beta m u_i); returns
/// (m_star, lambda_star = -2 beta m_star).  The map is strictly increasing in
/// m, so a safeguarded Newton iteration on [-1,1] always converges.
std::pair<double, double> solve_fixed_point(double beta, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& h);

ApproxParams approx_params(double beta, const Eigen::VectorXd& u, const Eigen::VectorXd& h);

/// diag(v) - (alpha/n) (v.*u)(v.*u)^T, with v.*u recovered as w.*sqrt(v).
Eigen::MatrixXd approx_covariance(const ApproxParams& p, int n);

/// I - (alpha/n) w w^T; always PSD and dominated by the identity.
Eigen::MatrixXd approx_correlation(const ApproxParams& p, int n);

/// Cumulant generating function of the cavity magnetization: log E[exp(s M)]
/// where M = (1/n) sum_{i not in I} u_i y_i under the measure with the sites
/// in I removed (quadratic coefficient still beta/n).  Requires J = 0 and
/// |I| <= 2; the remaining dimension must not exceed `max_enum_n`.
double cavity_cgf(const IsingModel& m, const std::vector<int>& I, double s,
                  int max_enum_n = 22);

/// Same, for several tilts in one enumeration sweep.
std::vector<double> cavity_cgf_batch(const IsingModel& m, const std::vector<int>& I,
                                     const std::vector<double>& svals, int max_enum_n = 22);

/// Exact covariance entry Cov(X_i, X_j) (variance when i = j) expressed
/// through cavity cumulant generating functions; J must be zero.
double cov_via_cavity(const IsingModel& m, int i, int j, int max_enum_n = 22);

/// Largest absolute eigenvalue of A - B for symmetric inputs.
double opnorm_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// (n^{1+delta} Gamma(1-delta))^{-1}; lower bound on the log-Sobolev constant
/// scale.  Requires 0 <= delta < 1.
double gamma_mlsi_bound(long n, double delta);

/// L / (1 - 2 L j_op); requires 2 L j_op < 1.
double hs_bound(double L, double j_op);

/// exp(-int_0^1 2(1+alpha) j / (1 - 2(1+alpha)(1-lambda) j) dlambda) evaluated
/// by adaptive quadrature; equals 1 - 2(1+alpha) j analytically.
double theorem_main_bound(double j_op, double alpha);

} // namespace spinlab::approx

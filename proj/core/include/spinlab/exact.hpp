#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "spinlab/model.hpp"

namespace spinlab::exact {

/// Size caps for the brute-force engine.  `threads` partitions the Gray-code
/// sweep into fixed blocks, so results are bit-identical for any thread count.
struct EnumLimits {
    int max_enum_n = 24;   // full-enumeration ops (partition function, moments)
    int max_kernel_n = 14; // ops touching the 2^n transition kernel
    int threads = 1;
};

struct GibbsSummary {
    double logZ = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd cor;
    /// Sites with |mean_i| = 1 to machine precision; their cor entries are NaN.
    std::vector<int> degenerate_sites;
};

struct ChainDiagnostics {
    double gap = 0.0;
    double mlsi_upper = 1.0;
    std::map<double, long> tmix;
};

/// log Z by streaming log-sum-exp over all 2^n states.
double partition_function(const IsingModel& m, const EnumLimits& lim = {});

/// Exact mean, covariance and correlation.  Gray-code sweep: each state's
/// exponent is an O(n) update from its predecessor.
GibbsSummary gibbs_moments(const IsingModel& m, const EnumLimits& lim = {});

/// Dense random-scan kernel, rows indexed by state mask (bit i = spin i).
Eigen::MatrixXd transition_matrix(const IsingModel& m, const EnumLimits& lim = {});

/// 1 - lambda_2 of the pi-symmetrized kernel.  Dense solve for small state
/// spaces, deflated Lanczos above that.
double spectral_gap(const IsingModel& m, const EnumLimits& lim = {});

/// Certified upper bound on the MLSI constant: min over witness functions f
/// of 1 - Ent(Pf)/Ent(f).  Witnesses come from canonical starts (smoothed
/// indicators, exponentiated linear functions) plus `restarts` random starts,
/// each polished by projected gradient ascent on the entropy ratio.
double mlsi_upper_estimate(const IsingModel& m, int restarts, std::uint64_t seed,
                           const EnumLimits& lim = {});

/// Least t with TV(delta_start P^t, pi) <= eps, by sparse distribution-vector
/// products.
long tv_mixing_time(const IsingModel& m, double eps, const SpinConfig& start,
                    const EnumLimits& lim = {});

/// Q(S, S^c)/pi(S) for an explicit set of state masks.
double conductance(const IsingModel& m, const std::vector<std::uint32_t>& S,
                   const EnumLimits& lim = {});

// ---- lower-level pieces shared by diagnostics and tests ----

/// Normalized log-probabilities and per-(state, site) conditional
/// plus-probabilities for the kernel ops.
struct KernelTable {
    int n = 0;
    std::vector<double> log_pi; // 2^n, normalized
    std::vector<double> pplus;  // [mask * n + i] = P(X_i = +1 | rest of mask)
    double prob_keep(std::uint32_t mask, int i) const {
        double p = pplus[static_cast<size_t>(mask) * n + static_cast<size_t>(i)];
        return (mask >> i) & 1u ? p : 1.0 - p;
    }
};

KernelTable kernel_table(const IsingModel& m, const EnumLimits& lim = {});

/// Apply the plain kernel to a function vector: out = P f.
void kernel_apply(const KernelTable& t, const double* f, double* out);

/// Apply the pi-symmetrized kernel: out = D^{1/2} P D^{-1/2} g.
void kernel_apply_sym(const KernelTable& t, const double* g, double* out);

} // namespace spinlab::exact

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

/// Spin configuration on the hypercube; entries are exactly -1 or +1.
using SpinConfig = std::vector<std::int8_t>;

SpinConfig all_plus(int n);
SpinConfig all_minus(int n);
void check_spins(const SpinConfig& x);

/// Ising measure with a negative rank-one outlier:
///   mu(x) proportional to exp( -(beta/n)<u,x>^2 + <x,Jx> + <h,x> )
/// An empty (0x0) J stands for J = 0 and enables O(1)-per-flip updates.
struct IsingModel {
    int n = 0;
    double beta = 0.0;
    Eigen::VectorXd u;
    Eigen::MatrixXd J;
    Eigen::VectorXd h;

    IsingModel(int n_, double beta_, Eigen::VectorXd u_, Eigen::MatrixXd J_,
               Eigen::VectorXd h_);

    bool zero_J() const { return J.size() == 0; }

    /// JSON object {n, beta, u, J, h}, J row-major ([] when J = 0).
    /// Numbers carry 17 significant digits; round-trip is lossless.
    std::string to_json() const;
    static IsingModel from_json(const std::string& text);

    /// FNV-1a 64 over the canonical serialization, as fixed-width hex.
    std::string hash_hex() const;
};

/// Unnormalized log-weight -(beta/n)<u,x>^2 + <x,Jx> + <h,x>.
double energy_exponent(const IsingModel& m, const SpinConfig& x);

/// P(X_i = +1 | X_j = x_j for j != i) = logistic(log-weight difference).
double conditional_plus_prob(const IsingModel& m, const SpinConfig& x, int i);

/// One random-scan update: pick a uniform site, resample it from its
/// conditional.  Mutates x; draws exactly (site, coin) from rng.
void glauber_step(const IsingModel& m, SpinConfig& x, Rng& rng);

/// <u,x>/n.
double magnetization(const Eigen::VectorXd& u, const SpinConfig& x);

} // namespace spinlab

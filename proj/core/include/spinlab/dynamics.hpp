#pragma once

#include <cstdint>
#include <vector>

#include "spinlab/ensembles.hpp"
#include "spinlab/model.hpp"

namespace spinlab::dynamics {

/// Observable time series from a Glauber run; entries recorded at t = 0 and
/// then every `thin` steps, giving floor(steps/thin) + 1 rows.
struct Trace {
    long steps = 0;
    long thin = 1;
    std::vector<double> magnetization;   // <u,x>/n
    std::vector<double> energy_exponent; // unnormalized Gibbs log-weight
    std::vector<double> overlap;         // <x, x0>/n against the start
};

Trace run_glauber(const IsingModel& m, const SpinConfig& x0, long steps, long thin,
                  std::uint64_t seed);

/// H(x) = -(1/sqrt(d)) <x, A x>.
double hamiltonian(const ensembles::Graph& g, const SpinConfig& x, double d);

/// dH/dx_i = -(2/sqrt(d)) sum_j A_ij x_j; equals x_i (H(x) - H(x flipped at i))/2.
double local_field(const ensembles::Graph& g, const SpinConfig& x, long i, double d);

struct GappedReport {
    double kappa = 0.0;
    std::vector<long> violating_sites; // {i : x_i dH/dx_i < kappa}
    double delta_achieved = 0.0;       // |violating| / n
    bool is_gapped(double delta) const { return delta_achieved <= delta; }
};

GappedReport gapped_check(const ensembles::Graph& g, const SpinConfig& x, double kappa,
                          double d);

/// Flips sites with x_i dH/dx_i < 0 (strictly; ties stay put) until a local
/// maximum of H or the sweep budget.  H never decreases.
SpinConfig greedy_ascent(const ensembles::Graph& g, const SpinConfig& x0, double d,
                         long max_sweeps);

/// Ascent over pair swaps (one +1 site and one -1 site flip together), so
/// <1, x> = 0 is preserved exactly; only strictly H-increasing swaps execute.
SpinConfig balanced_greedy_ascent(const ensembles::Graph& g, const SpinConfig& x0, double d,
                                  long max_sweeps);

struct ConductancePair {
    double ratio = 0.0; // Q(S, S^c) / pi(S) for S = {x_1 = +1}
    double bound = 0.0; // 4 / (n e^{4 beta0})
};

/// Exact escape ratio for pi proportional to exp(-beta0 (sum_i x_i)^2),
/// aggregated over magnetization levels: O(n), far beyond enumeration reach.
ConductancePair cw_conductance_exact(long n, double beta0);

struct EnergyDropResult {
    bool holds = false;
    double margin = 0.0; // H(x) - H(y) - rho*kappa*n/4
};

EnergyDropResult energy_drop_check(const ensembles::Graph& g, const SpinConfig& x,
                                   const SpinConfig& y, double kappa, double rho, double d);

} // namespace spinlab::dynamics

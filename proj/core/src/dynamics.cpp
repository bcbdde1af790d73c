#include "spinlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab::dynamics {

namespace {

constexpr long kLevelCap = 1000000;

void check_graph_config(const ensembles::Graph& g, const SpinConfig& x, double d) {
    if (!(d > 0.0)) throw ArgumentError("degree normalization must be positive");
    if (static_cast<long>(x.size()) != g.n) throw ArgumentError("configuration length mismatch");
    check_spins(x);
}

std::vector<std::vector<long>> neighbor_lists(const ensembles::Graph& g) {
    std::vector<std::vector<long>> nb(static_cast<size_t>(g.n));
    for (const auto& [a, b] : g.edges) {
        nb[static_cast<size_t>(a)].push_back(b);
        nb[static_cast<size_t>(b)].push_back(a);
    }
    return nb;
}

// integer row sums s_i = sum_j A_ij x_j; all ascent logic stays exact in these
std::vector<long> adjacency_sums(const ensembles::Graph& g, const SpinConfig& x) {
    std::vector<long> s(static_cast<size_t>(g.n), 0);
    for (const auto& [a, b] : g.edges) {
        s[static_cast<size_t>(a)] += x[static_cast<size_t>(b)];
        s[static_cast<size_t>(b)] += x[static_cast<size_t>(a)];
    }
    return s;
}

double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log(1/(1+e^{-t})), saturation-safe
double log_sigmoid(double t) {
    if (t >= 0.0) return -std::log1p(std::exp(-t));
    return t - std::log1p(std::exp(t));
}

} // namespace

Trace run_glauber(const IsingModel& m, const SpinConfig& x0, long steps, long thin,
                  std::uint64_t seed) {
    if (steps < 0) throw ArgumentError("run_glauber: steps must be nonnegative");
    if (thin < 1) throw ArgumentError("run_glauber: thin must be at least 1");
    if (static_cast<int>(x0.size()) != m.n) throw ArgumentError("run_glauber: length mismatch");
    check_spins(x0);

    Trace tr;
    tr.steps = steps;
    tr.thin = thin;
    const long rows = steps / thin + 1;
    tr.magnetization.reserve(static_cast<size_t>(rows));
    tr.energy_exponent.reserve(static_cast<size_t>(rows));
    tr.overlap.reserve(static_cast<size_t>(rows));

    SpinConfig x = x0;
    Rng rng(seed);
    auto record = [&]() {
        tr.magnetization.push_back(magnetization(m.u, x));
        tr.energy_exponent.push_back(energy_exponent(m, x));
        double ov = 0.0;
        for (size_t i = 0; i < x.size(); ++i)
            ov += static_cast<double>(x[i]) * static_cast<double>(x0[i]);
        tr.overlap.push_back(ov / static_cast<double>(m.n));
    };
    record();
    for (long t = 1; t <= steps; ++t) {
        glauber_step(m, x, rng);
        if (t % thin == 0) record();
    }
    return tr;
}

double hamiltonian(const ensembles::Graph& g, const SpinConfig& x, double d) {
    check_graph_config(g, x, d);
    long s = 0;
    for (const auto& [a, b] : g.edges)
        s += static_cast<long>(x[static_cast<size_t>(a)]) * x[static_cast<size_t>(b)];
    return -2.0 * static_cast<double>(s) / std::sqrt(d);
}

double local_field(const ensembles::Graph& g, const SpinConfig& x, long i, double d) {
    check_graph_config(g, x, d);
    if (i < 0 || i >= g.n) throw ArgumentError("local_field: site out of range");
    long s = 0;
    for (const auto& [a, b] : g.edges) {
        if (a == i) s += x[static_cast<size_t>(b)];
        if (b == i) s += x[static_cast<size_t>(a)];
    }
    return -2.0 * static_cast<double>(s) / std::sqrt(d);
}

GappedReport gapped_check(const ensembles::Graph& g, const SpinConfig& x, double kappa,
                          double d) {
    if (!(kappa > 0.0)) throw ArgumentError("gapped_check: kappa must be positive");
    check_graph_config(g, x, d);
    auto s = adjacency_sums(g, x);
    GappedReport rep;
    rep.kappa = kappa;
    const double scale = -2.0 / std::sqrt(d);
    for (long i = 0; i < g.n; ++i) {
        double xdh = static_cast<double>(x[static_cast<size_t>(i)]) * scale *
                     static_cast<double>(s[static_cast<size_t>(i)]);
        if (xdh < kappa) rep.violating_sites.push_back(i);
    }
    rep.delta_achieved =
        static_cast<double>(rep.violating_sites.size()) / static_cast<double>(g.n);
    return rep;
}

SpinConfig greedy_ascent(const ensembles::Graph& g, const SpinConfig& x0, double d,
                         long max_sweeps) {
    if (max_sweeps < 1) throw ArgumentError("greedy_ascent: max_sweeps must be at least 1");
    check_graph_config(g, x0, d);
    SpinConfig x = x0;
    auto nb = neighbor_lists(g);
    auto s = adjacency_sums(g, x);
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        long flips = 0;
        for (long i = 0; i < g.n; ++i) {
            // x_i dH_i < 0  <=>  x_i s_i > 0, in exact integer arithmetic
            if (static_cast<long>(x[static_cast<size_t>(i)]) * s[static_cast<size_t>(i)] > 0) {
                x[static_cast<size_t>(i)] = static_cast<std::int8_t>(-x[static_cast<size_t>(i)]);
                for (long j : nb[static_cast<size_t>(i)])
                    s[static_cast<size_t>(j)] += 2 * x[static_cast<size_t>(i)];
                ++flips;
            }
        }
        if (flips == 0) break;
    }
    return x;
}

SpinConfig balanced_greedy_ascent(const ensembles::Graph& g, const SpinConfig& x0, double d,
                                  long max_sweeps) {
    if (max_sweeps < 1)
        throw ArgumentError("balanced_greedy_ascent: max_sweeps must be at least 1");
    check_graph_config(g, x0, d);
    if (g.n % 2 != 0) throw ArgumentError("balanced_greedy_ascent: vertex count must be even");
    long bal = 0;
    for (auto v : x0) bal += v;
    if (bal != 0) throw ArgumentError("balanced_greedy_ascent: start must have zero sum");

    SpinConfig x = x0;
    auto nb = neighbor_lists(g);
    for (auto& v : nb) std::sort(v.begin(), v.end());
    auto s = adjacency_sums(g, x);
    auto adjacent = [&](long a, long b) {
        const auto& v = nb[static_cast<size_t>(a)];
        return std::binary_search(v.begin(), v.end(), b);
    };
    auto flip = [&](long i) {
        x[static_cast<size_t>(i)] = static_cast<std::int8_t>(-x[static_cast<size_t>(i)]);
        for (long j : nb[static_cast<size_t>(i)])
            s[static_cast<size_t>(j)] += 2 * x[static_cast<size_t>(i)];
    };

    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        long swaps = 0;
        for (long i = 0; i < g.n; ++i) {
            if (x[static_cast<size_t>(i)] != 1) continue;
            for (long j = 0; j < g.n; ++j) {
                if (x[static_cast<size_t>(j)] != -1) continue;
                // sqrt(d)/4 * (H(swapped) - H(x)), exact in integers
                long gain = s[static_cast<size_t>(i)] - s[static_cast<size_t>(j)] +
                            (adjacent(i, j) ? 2 : 0);
                if (gain > 0) {
                    flip(i);
                    flip(j);
                    ++swaps;
                    break; // i is now a -1 site; move on
                }
            }
        }
        if (swaps == 0) break;
    }
    return x;
}

ConductancePair cw_conductance_exact(long n, double beta0) {
    if (n < 2) throw ArgumentError("cw_conductance_exact: need n >= 2");
    if (n % 2 != 0) throw ArgumentError("cw_conductance_exact: n must be even");
    if (n > kLevelCap) throw CapacityError("cw_conductance_exact: level sum capped at 10^6");
    if (!std::isfinite(beta0)) throw ArgumentError("cw_conductance_exact: beta0 must be finite");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    double lden = neg_inf, lnum = neg_inf;
    const double lg_n = std::lgamma(static_cast<double>(n)); // log (n-1)!
    for (long k = 0; k <= n - 1; ++k) {
        // k = number of +1 spins among the n-1 free sites; site 1 is pinned +1
        double lbin = lg_n - std::lgamma(static_cast<double>(k + 1)) -
                      std::lgamma(static_cast<double>(n - k));
        double mag = static_cast<double>(2 * k - n + 2); // total magnetization
        double lw = lbin - beta0 * mag * mag;
        double t = 4.0 * beta0 * static_cast<double>(2 * k - n + 1);
        lden = logaddexp(lden, lw);
        lnum = logaddexp(lnum, lw + log_sigmoid(t));
    }
    ConductancePair out;
    out.ratio = std::exp(lnum - lden) / static_cast<double>(n);
    out.bound = 4.0 * std::exp(-4.0 * beta0) / static_cast<double>(n);
    return out;
}

EnergyDropResult energy_drop_check(const ensembles::Graph& g, const SpinConfig& x,
                                   const SpinConfig& y, double kappa, double rho, double d) {
    check_graph_config(g, x, d);
    check_graph_config(g, y, d);
    long l1 = 0;
    for (size_t i = 0; i < x.size(); ++i) l1 += std::abs(static_cast<long>(x[i]) - y[i]);
    if (std::abs(static_cast<double>(l1) - rho * static_cast<double>(g.n)) > 1e-9)
        throw ArgumentError("energy_drop_check: |x - y|_1 must equal rho * n");
    EnergyDropResult out;
    out.margin = hamiltonian(g, x, d) - hamiltonian(g, y, d) -
                 rho * kappa * static_cast<double>(g.n) / 4.0;
    out.holds = out.margin >= 0.0;
    return out;
}

} // namespace spinlab::dynamics

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "spinlab/dynamics.hpp"
#include "spinlab/ensembles.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/exact.hpp"
#include "util.hpp"

using namespace spinlab;
using namespace spinlab::dynamics;
using ensembles::Graph;

namespace {

Graph single_edge() {
    Graph g;
    g.n = 2;
    g.edges = {{0, 1}};
    g.degree = {1, 1};
    return g;
}

Graph isolated(long n) {
    Graph g;
    g.n = n;
    g.degree.assign(static_cast<size_t>(n), 0);
    return g;
}

SpinConfig random_spins(Rng& r, long n) {
    SpinConfig x(static_cast<size_t>(n));
    for (auto& v : x) v = r.bernoulli(0.5) ? 1 : -1;
    return x;
}

IsingModel free_model(int n) {
    return IsingModel(n, 0.0, Eigen::VectorXd::Ones(n), Eigen::MatrixXd(),
                      Eigen::VectorXd::Zero(n));
}

} // namespace

TEST_CASE("glauber traces: shape, determinism, start row") {
    Rng r(881);
    auto m = random_model(r, 5, 1.2, true);
    SpinConfig x0 = random_spins(r, 5);

    auto t0 = run_glauber(m, x0, 0, 3, 10);
    REQUIRE(t0.magnetization.size() == 1);
    CHECK(t0.magnetization[0] == magnetization(m.u, x0));
    CHECK(t0.energy_exponent[0] == energy_exponent(m, x0));
    CHECK(t0.overlap[0] == 1.0);

    for (auto [steps, thin] : {std::pair<long, long>{10, 3}, {9, 3}, {5, 10}, {100, 1}}) {
        auto tr = run_glauber(m, x0, steps, thin, 4);
        CHECK(static_cast<long>(tr.magnetization.size()) == steps / thin + 1);
        CHECK(tr.energy_exponent.size() == tr.magnetization.size());
        CHECK(tr.overlap.size() == tr.magnetization.size());
    }

    auto a = run_glauber(m, x0, 500, 7, 99);
    auto b = run_glauber(m, x0, 500, 7, 99);
    CHECK(a.magnetization == b.magnetization);
    CHECK(a.energy_exponent == b.energy_exponent);
    CHECK(a.overlap == b.overlap);
    auto c = run_glauber(m, x0, 500, 7, 100);
    CHECK(a.magnetization != c.magnetization);

    CHECK_THROWS_AS((void)run_glauber(m, x0, -1, 1, 0), ArgumentError);
    CHECK_THROWS_AS((void)run_glauber(m, x0, 10, 0, 0), ArgumentError);
    SpinConfig bad(5, 0);
    CHECK_THROWS_AS((void)run_glauber(m, bad, 10, 1, 0), ArgumentError);
}

TEST_CASE("free chain equilibrates to zero magnetization") {
    const int n = 100;
    auto m = free_model(n);
    auto tr = run_glauber(m, all_plus(n), 100000, 10, 2024);
    double acc = 0.0;
    long cnt = 0;
    for (size_t k = tr.magnetization.size() / 2; k < tr.magnetization.size(); ++k) {
        acc += tr.magnetization[k];
        ++cnt;
    }
    // relaxation time ~ n steps; variance of the half-trace average is ~ 2/T
    double sigma = std::sqrt(2.0 / 50000.0);
    CHECK(std::abs(acc / static_cast<double>(cnt)) <= 4.0 * sigma);
}

TEST_CASE("long chain visits states with stationary frequencies") {
    Rng r(883);
    auto m = random_model(r, 3, 0.8, true);
    auto tab = exact::kernel_table(m);
    auto tr = run_glauber(m, all_minus(3), 300000, 1, 55);

    // re-run the chain by hand to histogram states (Trace only keeps scalars)
    SpinConfig x = all_minus(3);
    Rng chain(55);
    std::vector<double> freq(8, 0.0);
    for (long t = 0; t < 300000; ++t) {
        glauber_step(m, x, chain);
        unsigned mask = 0;
        for (int i = 0; i < 3; ++i)
            if (x[static_cast<size_t>(i)] > 0) mask |= 1u << i;
        freq[mask] += 1.0;
    }
    for (int s = 0; s < 8; ++s)
        CHECK(std::abs(freq[static_cast<size_t>(s)] / 300000.0 - std::exp(tab.log_pi[static_cast<size_t>(s)])) <=
              0.01);
    (void)tr;
}

TEST_CASE("hamiltonian and local fields") {
    SpinConfig pp{1, 1}, pm{1, -1};
    auto e = single_edge();
    CHECK(hamiltonian(e, pp, 1.0) == -2.0);
    CHECK(hamiltonian(e, pm, 1.0) == 2.0);
    CHECK(local_field(e, pp, 0, 1.0) == -2.0);
    CHECK(local_field(e, pp, 1, 1.0) == -2.0);

    auto iso = isolated(3);
    SpinConfig z{1, -1, 1};
    CHECK(hamiltonian(iso, z, 2.0) == 0.0);
    CHECK(local_field(iso, z, 1, 2.0) == 0.0);

    // flip identity dH_i = x_i (H(x) - H(x^i)) / 2 at every site
    auto g = ensembles::erdos_renyi(10, 0.4, 314);
    Rng r(887);
    for (int rep = 0; rep < 5; ++rep) {
        auto x = random_spins(r, 10);
        double H = hamiltonian(g, x, 3.0);
        for (long i = 0; i < 10; ++i) {
            SpinConfig y = x;
            y[static_cast<size_t>(i)] = static_cast<std::int8_t>(-y[static_cast<size_t>(i)]);
            double want = x[static_cast<size_t>(i)] * (H - hamiltonian(g, y, 3.0)) / 2.0;
            CHECK(local_field(g, x, i, 3.0) == doctest::Approx(want).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS((void)hamiltonian(e, pp, 0.0), ArgumentError);
    CHECK_THROWS_AS((void)local_field(e, pp, 2, 1.0), ArgumentError);
}

TEST_CASE("graph hamiltonian reweights to the exact engine's gibbs law") {
    auto g = ensembles::erdos_renyi(10, 0.5, 2718);
    const double beta = 0.35, d = 4.0;
    Eigen::MatrixXd J = -beta * g.adjacency();
    IsingModel m(10, 0.0, Eigen::VectorXd::Zero(10), std::move(J), Eigen::VectorXd::Zero(10));
    auto gm = exact::gibbs_moments(m);

    // direct enumeration against exp(beta * sqrt(d) * H)
    std::vector<double> w(1024);
    double mx = -1e300;
    for (unsigned long mask = 0; mask < 1024; ++mask) {
        auto x = config_from_mask(10, mask);
        w[mask] = beta * std::sqrt(d) * hamiltonian(g, x, d);
        mx = std::max(mx, w[mask]);
    }
    double Z = 0.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(10);
    for (unsigned long mask = 0; mask < 1024; ++mask) {
        double p = std::exp(w[mask] - mx);
        Z += p;
        auto x = config_from_mask(10, mask);
        for (int i = 0; i < 10; ++i) mean[i] += p * x[static_cast<size_t>(i)];
    }
    for (int i = 0; i < 10; ++i)
        CHECK(gm.mean[i] == doctest::Approx(mean[i] / Z).epsilon(1e-10));
}

TEST_CASE("gapped state detection") {
    {
        auto rep = gapped_check(single_edge(), SpinConfig{1, -1}, 1.0, 1.0);
        CHECK(rep.violating_sites.empty());
        CHECK(rep.delta_achieved == 0.0);
        CHECK(rep.is_gapped(0.0));
    }
    {
        auto rep = gapped_check(isolated(5), SpinConfig(5, 1), 0.5, 2.0);
        CHECK(rep.violating_sites.size() == 5);
        CHECK(rep.delta_achieved == 1.0);
        CHECK(!rep.is_gapped(0.99));
        CHECK(rep.is_gapped(1.0));
    }
    {
        // oracle: recompute I_x from raw energy flip differences
        Rng r(991);
        for (int rep_i = 0; rep_i < 10; ++rep_i) {
            auto g = ensembles::erdos_renyi(12, 0.35, 500u + static_cast<std::uint64_t>(rep_i));
            auto x = random_spins(r, 12);
            double kappa = r.uniform(0.1, 2.0);
            auto rep = gapped_check(g, x, kappa, 5.0);
            std::vector<long> want;
            double H = hamiltonian(g, x, 5.0);
            for (long i = 0; i < 12; ++i) {
                SpinConfig y = x;
                y[static_cast<size_t>(i)] =
                    static_cast<std::int8_t>(-y[static_cast<size_t>(i)]);
                // x_i dH_i = (H(x) - H(x^i)) / 2 since x_i^2 = 1
                if ((H - hamiltonian(g, y, 5.0)) / 2.0 < kappa)
                    want.push_back(i);
            }
            CHECK(rep.violating_sites == want);
        }
    }
    CHECK_THROWS_AS((void)gapped_check(single_edge(), SpinConfig{1, 1}, 0.0, 1.0),
                    ArgumentError);
}

TEST_CASE("greedy ascent") {
    {
        auto out = greedy_ascent(single_edge(), SpinConfig{1, 1}, 1.0, 10);
        CHECK(hamiltonian(single_edge(), out, 1.0) == 2.0);
        CHECK(out[0] * out[1] == -1);
    }
    {
        Rng r(997);
        auto g = ensembles::erdos_renyi(50, 0.1, 606);
        for (int rep = 0; rep < 5; ++rep) {
            auto x0 = random_spins(r, 50);
            double h_prev = hamiltonian(g, x0, 5.0);
            // monotone across increasing budgets
            for (long budget : {1L, 2L, 200L}) {
                auto out = greedy_ascent(g, x0, 5.0, budget);
                double h = hamiltonian(g, out, 5.0);
                CHECK(h >= h_prev - 1e-12);
                h_prev = h;
            }
            auto out = greedy_ascent(g, x0, 5.0, 200);
            // converged: no strictly positive local move remains
            for (long i = 0; i < 50; ++i)
                CHECK(out[static_cast<size_t>(i)] * local_field(g, out, i, 5.0) >= 0.0);
        }
    }
    CHECK_THROWS_AS((void)greedy_ascent(single_edge(), SpinConfig{1, 1}, 1.0, 0),
                    ArgumentError);
}

TEST_CASE("balanced greedy ascent preserves zero magnetization") {
    {
        // path 0-1-2-3, alternating start is the global maximum already
        Graph path;
        path.n = 4;
        path.edges = {{0, 1}, {1, 2}, {2, 3}};
        path.degree = {1, 2, 2, 1};
        SpinConfig alt{1, -1, 1, -1};
        auto out = balanced_greedy_ascent(path, alt, 2.0, 50);
        CHECK(out == alt);

        SpinConfig blocks{1, 1, -1, -1};
        auto out2 = balanced_greedy_ascent(path, blocks, 2.0, 50);
        long mag = std::accumulate(out2.begin(), out2.end(), 0L);
        CHECK(mag == 0);
        CHECK(hamiltonian(path, out2, 2.0) > hamiltonian(path, blocks, 2.0));
    }
    {
        Rng r(1009);
        auto g = ensembles::erdos_renyi(20, 0.3, 707);
        for (int rep = 0; rep < 5; ++rep) {
            SpinConfig x0(20);
            std::vector<long> idx(20);
            std::iota(idx.begin(), idx.end(), 0L);
            for (size_t i = 19; i > 0; --i)
                std::swap(idx[i], idx[static_cast<size_t>(r.below(i + 1))]);
            for (int k = 0; k < 20; ++k)
                x0[static_cast<size_t>(idx[static_cast<size_t>(k)])] = k < 10 ? 1 : -1;
            auto out = balanced_greedy_ascent(g, x0, 6.0, 100);
            CHECK(std::accumulate(out.begin(), out.end(), 0L) == 0);
            CHECK(hamiltonian(g, out, 6.0) >= hamiltonian(g, x0, 6.0) - 1e-12);
        }
    }
    CHECK_THROWS_AS(
        (void)balanced_greedy_ascent(single_edge(), SpinConfig{1, 1}, 1.0, 10),
        ArgumentError);
    {
        Graph tri;
        tri.n = 3;
        tri.edges = {{0, 1}, {0, 2}, {1, 2}};
        tri.degree = {2, 2, 2};
        CHECK_THROWS_AS((void)balanced_greedy_ascent(tri, SpinConfig{1, -1, 1}, 1.0, 10),
                        ArgumentError);
    }
}

TEST_CASE("mean-field escape ratio, exact by level sums") {
    {
        auto [ratio, bound] = cw_conductance_exact(2, 0.0);
        CHECK(ratio == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(bound == doctest::Approx(2.0).epsilon(1e-14));
    }
    {
        auto [ratio, bound] = cw_conductance_exact(100, 1.0);
        CHECK(ratio > 0.0);
        CHECK(ratio <= bound);
        CHECK(bound == doctest::Approx(4.0 / (100.0 * std::exp(4.0))).epsilon(1e-13));
    }
    for (double b0 : {0.25, 0.5, 1.0, 2.0})
        for (long n : {100L, 10000L})
            CHECK(cw_conductance_exact(n, b0).ratio * std::exp(4.0 * b0) *
                      static_cast<double>(n) <=
                  4.0);
    {
        // n = 10^6 stays exact and within the bound
        auto [ratio, bound] = cw_conductance_exact(1000000, 0.5);
        CHECK(ratio > 0.0);
        CHECK(ratio <= bound);
    }
    {
        // cross-check against the enumeration engine's conductance
        for (double b0 : {0.0, 0.3}) {
            const int n = 8;
            IsingModel m(n, b0 * n, Eigen::VectorXd::Ones(n), Eigen::MatrixXd(),
                         Eigen::VectorXd::Zero(n));
            std::vector<std::uint32_t> S;
            for (std::uint32_t mask = 0; mask < 256u; ++mask)
                if (mask & 1u) S.push_back(mask);
            double want = exact::conductance(m, S);
            CHECK(cw_conductance_exact(n, b0).ratio == doctest::Approx(want).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS((void)cw_conductance_exact(7, 0.1), ArgumentError);
    CHECK_THROWS_AS((void)cw_conductance_exact(1000002, 0.1), CapacityError);
}

TEST_CASE("energy drop margins") {
    auto e = single_edge();
    {
        SpinConfig x{1, -1};
        auto res = energy_drop_check(e, x, x, 1.0, 0.0, 1.0);
        CHECK(res.holds);
        CHECK(res.margin == 0.0);
    }
    {
        SpinConfig x{1, -1}, y{-1, -1};
        auto res = energy_drop_check(e, x, y, 2.0, 1.0, 1.0);
        CHECK(res.margin == doctest::Approx(4.0 - 1.0 * 2.0 * 2.0 / 4.0).epsilon(1e-14));
        CHECK(res.holds);
        CHECK_THROWS_AS((void)energy_drop_check(e, x, y, 2.0, 0.5, 1.0), ArgumentError);
    }
    {
        Rng r(1013);
        auto g = ensembles::erdos_renyi(30, 0.25, 808);
        auto x = random_spins(r, 30);
        SpinConfig y = x;
        for (long i = 0; i < 6; ++i)
            y[static_cast<size_t>(5 * i)] = static_cast<std::int8_t>(-y[static_cast<size_t>(5 * i)]);
        const double rho = 2.0 * 6.0 / 30.0, kappa = 0.7, d = 9.0;
        auto res = energy_drop_check(g, x, y, kappa, rho, d);
        double want = hamiltonian(g, x, d) - hamiltonian(g, y, d) - rho * kappa * 30.0 / 4.0;
        CHECK(res.margin == doctest::Approx(want).epsilon(1e-12));
        CHECK(res.holds == (want >= 0.0));
    }
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "spinlab/ensembles.hpp"
#include "spinlab/errors.hpp"
#include "spinlab/linalg.hpp"
#include "util.hpp"

using namespace spinlab;
using namespace spinlab::ensembles;

namespace {

// structural sanity: normalized, sorted, unique, loop-free, degrees consistent
void check_well_formed(const Graph& g) {
    std::set<std::pair<long, long>> seen;
    std::vector<long> deg(static_cast<size_t>(g.n), 0);
    std::pair<long, long> prev{-1, -1};
    for (const auto& e : g.edges) {
        REQUIRE(e.first < e.second);
        REQUIRE(e.first >= 0);
        REQUIRE(e.second < g.n);
        REQUIRE(prev < e);
        prev = e;
        REQUIRE(seen.insert(e).second);
        ++deg[static_cast<size_t>(e.first)];
        ++deg[static_cast<size_t>(e.second)];
    }
    REQUIRE(g.degree == deg);
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> A(static_cast<size_t>(M.rows()),
                                       std::vector<double>(static_cast<size_t>(M.cols())));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            A[static_cast<size_t>(i)][static_cast<size_t>(j)] = M(i, j);
    return A;
}

Eigen::MatrixXd complete_adjacency(long n) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(n, n);
    A.diagonal().setZero();
    return A;
}

} // namespace

TEST_CASE("regular graphs: pairing model basics") {
    // n=4, d=3 admits exactly one simple graph
    auto k4 = random_regular(4, 3, 11);
    check_well_formed(k4);
    std::vector<std::pair<long, long>> want{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(k4.edges == want);

    for (auto [n, d, seed] : {std::tuple<long, long, int>{30, 3, 1},
                              {29, 4, 2},
                              {40, 7, 3},
                              {16, 5, 4}}) {
        auto g = random_regular(n, d, static_cast<std::uint64_t>(seed));
        check_well_formed(g);
        for (long v = 0; v < n; ++v) CHECK(g.degree[static_cast<size_t>(v)] == d);
    }

    // same seed reproduces; different seed (overwhelmingly) does not
    auto a = random_regular(50, 3, 77), b = random_regular(50, 3, 77);
    CHECK(a.edges == b.edges);
    auto c = random_regular(50, 3, 78);
    CHECK(a.edges != c.edges);

    CHECK_THROWS_AS((void)random_regular(5, 3, 1), ArgumentError);  // dn odd
    CHECK_THROWS_AS((void)random_regular(10, 2, 1), ArgumentError); // d < 3
    CHECK_THROWS_AS((void)random_regular(6, 6, 1), ArgumentError);  // d >= n
}

TEST_CASE("regular graphs: dense-degree fallback stays d-regular") {
    // pairing rejection is hopeless here, so the switch-randomized circulant kicks in
    auto g = random_regular(10, 7, 5);
    check_well_formed(g);
    for (long v = 0; v < 10; ++v) CHECK(g.degree[static_cast<size_t>(v)] == 7);
    auto h = random_regular(10, 7, 6);
    check_well_formed(h);
    CHECK(g.edges != h.edges);
}

TEST_CASE("sparse regular graphs concentrate the second eigenvalue") {
    const long n = 1000;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    int good = 0;
    for (int s = 1; s <= 20; ++s) {
        auto g = random_regular(n, 3, 7000u + static_cast<std::uint64_t>(s));
        auto apply = [&g](const double* x, double* y) { g.multiply(x, y); };
        // Rayleigh-Ritz only ever under-estimates, so this cannot pass spuriously
        double l2 = linalg::lanczos_top(apply, static_cast<size_t>(n), ones, 250, 1e-10, 42);
        if (l2 <= 2.0 * std::sqrt(2.0) + 0.2) ++good;
    }
    CHECK(good >= 19);
}

TEST_CASE("erdos-renyi sampling") {
    auto empty = erdos_renyi(40, 0.0, 9);
    CHECK(empty.edges.empty());
    auto full = erdos_renyi(40, 1.0, 9);
    CHECK(static_cast<long>(full.edges.size()) == 40 * 39 / 2);
    check_well_formed(full);

    const long n = 2000;
    const double p = 0.01;
    auto g = erdos_renyi(n, p, 12345);
    check_well_formed(g);
    double pairs = 0.5 * n * (n - 1);
    double sigma = std::sqrt(pairs * p * (1.0 - p));
    CHECK(std::abs(static_cast<double>(g.edges.size()) - pairs * p) <= 4.0 * sigma);

    auto g2 = erdos_renyi(n, p, 12345);
    CHECK(g.edges == g2.edges);

    CHECK_THROWS_AS((void)erdos_renyi(10, -0.1, 1), ArgumentError);
    CHECK_THROWS_AS((void)erdos_renyi(10, 1.1, 1), ArgumentError);
}

TEST_CASE("gaussian disorder matrices") {
    {
        auto M = sk_matrix(6, 0.0, 0.9, 3);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(M(i, j) == (i == j ? 0.0 : -0.9 / 6.0));
    }
    {
        const long n = 200;
        const double beta = 0.5, mu = 0.7;
        auto M = sk_matrix(n, beta, mu, 31);
        CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(M.diagonal().cwiseAbs().maxCoeff() == 0.0);
        double acc = 0.0;
        long cnt = 0;
        for (long i = 0; i < n; ++i)
            for (long j = i + 1; j < n; ++j) {
                acc += M(i, j);
                ++cnt;
            }
        double se = (beta / std::sqrt(static_cast<double>(n))) / std::sqrt(static_cast<double>(cnt));
        CHECK(std::abs(acc / static_cast<double>(cnt) + mu / static_cast<double>(n)) <= 4.0 * se);
    }
    {
        // semicircle edge near 2*beta for centered disorder
        auto rep = spectrum(sk_matrix(500, 1.0, 0.0, 17));
        CHECK(rep.eigenvalues[0] >= 1.8);
        CHECK(rep.eigenvalues[0] <= 2.2);
    }
    CHECK_THROWS_AS((void)sk_matrix(10, -1.0, 0.0, 1), ArgumentError);
}

TEST_CASE("dense spectral reports") {
    {
        auto rep = spectrum(complete_adjacency(6));
        CHECK(rep.full);
        CHECK(rep.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));
        for (int k = 1; k < 6; ++k)
            CHECK(rep.eigenvalues[k] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(rep.spectral_width == doctest::Approx(6.0).epsilon(1e-12));
        CHECK(rep.second_width == doctest::Approx(0.0).epsilon(1e-12));
        // Perron vector of the complete graph is flat and positive
        for (int k = 0; k < 6; ++k)
            CHECK(rep.top_vector[k] == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-10));
    }
    {
        Graph cyc;
        cyc.n = 6;
        for (long v = 0; v < 6; ++v) cyc.edges.push_back({std::min(v, (v + 1) % 6), std::max(v, (v + 1) % 6)});
        std::sort(cyc.edges.begin(), cyc.edges.end());
        cyc.degree.assign(6, 2);
        auto rep = spectrum(cyc);
        CHECK(rep.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(rep.eigenvalues[5] == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(rep.spectral_width == doctest::Approx(4.0).epsilon(1e-12));
    }
    {
        Rng r(271828);
        Eigen::MatrixXd S(64, 64);
        for (int i = 0; i < 64; ++i)
            for (int j = i; j < 64; ++j) {
                double v = r.normal();
                S(i, j) = v;
                S(j, i) = v;
            }
        auto rep = spectrum(S);
        auto want = jacobi_eigenvalues(to_rows(S)); // ascending
        REQUIRE(rep.eigenvalues.size() == 64);
        for (int k = 0; k < 64; ++k)
            CHECK(rep.eigenvalues[k] ==
                  doctest::Approx(want[static_cast<size_t>(63 - k)]).epsilon(1e-8));
        CHECK(rep.eigenvalues.sum() == doctest::Approx(S.trace()).epsilon(1e-8));
    }
    {
        Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
        bad(0, 1) = 1.0; // asymmetric
        CHECK_THROWS_AS((void)spectrum(bad), ArgumentError);
    }
}

TEST_CASE("oversize graphs fall back to extreme-eigenvalue iteration") {
    const long n = 4100;
    auto g = random_regular(n, 6, 424242);
    CHECK_THROWS_AS((void)g.adjacency(), CapacityError);
    auto rep = spectrum(g);
    CHECK(!rep.full);
    REQUIRE(rep.eigenvalues.size() == 3);
    CHECK(rep.eigenvalues[0] == doctest::Approx(6.0).epsilon(1e-9));
    double flat = 1.0 / std::sqrt(static_cast<double>(n));
    CHECK((rep.top_vector - Eigen::VectorXd::Constant(n, flat)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(rep.eigenvalues[1] <= 2.0 * std::sqrt(5.0) + 0.3);
    CHECK(rep.eigenvalues[1] >= 3.5);
    CHECK(rep.eigenvalues[2] <= -4.0);
    CHECK(rep.eigenvalues[2] >= -6.0 - 1e-9);
    CHECK(rep.spectral_width ==
          doctest::Approx(rep.eigenvalues[0] - rep.eigenvalues[2]).epsilon(1e-14));
}

TEST_CASE("antiferromagnetic decomposition: triangle closed form") {
    const double beta = 0.8;
    auto dec = decompose_antiferro(complete_adjacency(3), beta);
    CHECK(!dec.degenerate_top);
    CHECK(dec.shift == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dec.outlier_scale == doctest::Approx(2.0 * beta).epsilon(1e-10));
    for (int i = 0; i < 3; ++i) CHECK(dec.u[i] == doctest::Approx(1.0).epsilon(1e-10));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double want = i == j ? 2.0 * beta / 3.0 : -beta / 3.0;
            CHECK(dec.J(i, j) == doctest::Approx(want).epsilon(1e-10));
        }
    CHECK(dec.j_opnorm == doctest::Approx(beta).epsilon(1e-12));
    CHECK(linalg::opnorm_sym(dec.J) == doctest::Approx(beta).epsilon(1e-10));
    CHECK(dec.reconstruction_error <= 1e-8);
}

TEST_CASE("antiferromagnetic decomposition: regular graphs and random graphs") {
    {
        const double beta = 1.3;
        auto g = random_regular(20, 4, 5);
        auto dec = decompose_antiferro(g.adjacency(), beta);
        CHECK(dec.outlier_scale == doctest::Approx(beta * 4.0).epsilon(1e-9));
        for (int i = 0; i < 20; ++i) CHECK(dec.u[i] == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int s = 0; s < 20; ++s) {
        const double beta = 0.2 + 0.1 * s;
        auto g = erdos_renyi(30, 0.4, 900u + static_cast<std::uint64_t>(s));
        Eigen::MatrixXd A = g.adjacency();
        auto dec = decompose_antiferro(A, beta);

        // independent reconstruction of the defining identity
        Eigen::MatrixXd lhs = -beta * A;
        lhs.diagonal().array() += dec.shift;
        Eigen::MatrixXd rhs = dec.J - (dec.outlier_scale / 30.0) * dec.u * dec.u.transpose();
        auto dev = jacobi_eigenvalues(to_rows(lhs - rhs)); // ascending
        CHECK(std::max(std::abs(dev.front()), std::abs(dev.back())) <= 1e-8);
        CHECK(dec.reconstruction_error <= 1e-8);

        auto jev = jacobi_eigenvalues(to_rows(dec.J));
        CHECK(jev.front() >= -1e-8); // PSD remainder
        CHECK(dec.j_opnorm ==
              doctest::Approx(std::max(std::abs(jev.front()), std::abs(jev.back())))
                  .epsilon(1e-8));
        CHECK(dec.u.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        // two disjoint triangles: top eigenvalue has multiplicity two
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
        for (auto [a, b] : {std::pair<int, int>{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}}) {
            A(a, b) = 1.0;
            A(b, a) = 1.0;
        }
        auto dec = decompose_antiferro(A, 0.5);
        CHECK(dec.degenerate_top);
        CHECK(dec.reconstruction_error <= 1e-8);
        auto jev = jacobi_eigenvalues(to_rows(dec.J));
        CHECK(jev.front() >= -1e-8);
    }
    CHECK_THROWS_AS((void)decompose_antiferro(complete_adjacency(3), -1.0), ArgumentError);
    {
        Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
        bad(0, 1) = 1.0;
        CHECK_THROWS_AS((void)decompose_antiferro(bad, 1.0), ArgumentError);
    }
}

TEST_CASE("admissible temperature rules") {
    {
        auto rep = regime_check(regular_descriptor(1000, 3, true), 0.08, 0.1);
        REQUIRE(rep.rules.size() == 1);
        CHECK(rep.rules[0].rule == "fixed-degree");
        CHECK(rep.rules[0].threshold ==
              doctest::Approx(1.0 / (8.0 * std::sqrt(2.0))).epsilon(1e-14));
        CHECK(rep.rules[0].pass);
        CHECK(rep.all_pass);
        CHECK(!regime_check(regular_descriptor(1000, 3, true), 0.09, 0.1).all_pass);
    }
    {
        auto rep = regime_check(regular_descriptor(1000, 3, true, 2.8, -2.9), 0.05, 0.1);
        REQUIRE(rep.rules.size() == 2);
        CHECK(rep.rules[0].rule == "outlier-split");
        CHECK(rep.rules[0].binding == "spectral-gap");
        CHECK(rep.rules[0].threshold == doctest::Approx(1.0 / 11.4).epsilon(1e-12));
        CHECK(rep.all_pass);
    }
    {
        auto rep = regime_check(regular_descriptor(100, 10, false), 0.02, 0.1);
        REQUIRE(rep.rules.size() == 1);
        CHECK(rep.rules[0].rule == "growing-degree");
        CHECK(rep.rules[0].binding == "degree-spread");
        CHECK(rep.rules[0].threshold == doctest::Approx(1.0 / 24.0).epsilon(1e-12));
        CHECK(rep.rules[0].pass);
    }
    {
        auto rep = regime_check(er_descriptor(10000, 0.01), 0.012, 0.1);
        REQUIRE(rep.rules.size() == 1);
        CHECK(rep.rules[0].rule == "edge-density");
        CHECK(rep.rules[0].binding == "mean-degree");
        CHECK(rep.rules[0].threshold == doctest::Approx(0.0125).epsilon(1e-12));
        CHECK(rep.rules[0].pass);
        CHECK(!regime_check(er_descriptor(10000, 0.01), 0.013, 0.1).all_pass);
        // the sharpness knob scales the admissible range linearly
        CHECK(regime_check(er_descriptor(10000, 0.01, 2.0), 0.02, 0.1).all_pass);
        // empty graph never binds
        CHECK(regime_check(er_descriptor(10000, 0.0), 100.0, 0.1).all_pass);
    }
    {
        CHECK(regime_check(sk_descriptor(300), 0.1249, 0.1).all_pass);
        auto rep = regime_check(sk_descriptor(300), 0.125, 0.1);
        CHECK(rep.rules[0].rule == "gaussian-disorder");
        CHECK(rep.rules[0].threshold == 0.125);
        CHECK(!rep.all_pass); // strict inequality at the boundary
    }
    {
        // ferromagnetic mean-field interaction has unscaled width 1; the known
        // mixing transition sits exactly at the strict spectral-width boundary
        CHECK(regime_check(matrix_descriptor(64, 1.0), 0.49, 0.1).all_pass);
        CHECK(!regime_check(matrix_descriptor(64, 1.0), 0.50, 0.1).all_pass);
        CHECK(!regime_check(matrix_descriptor(64, 1.0), 0.51, 0.1).all_pass);
    }
    {
        // beta = 0 admissible everywhere
        CHECK(regime_check(regular_descriptor(50, 3, true), 0.0, 0.1).all_pass);
        CHECK(regime_check(regular_descriptor(50, 10, false), 0.0, 0.1).all_pass);
        CHECK(regime_check(er_descriptor(50, 0.3), 0.0, 0.1).all_pass);
        CHECK(regime_check(sk_descriptor(50), 0.0, 0.1).all_pass);
        CHECK(regime_check(matrix_descriptor(50, 3.0), 0.0, 0.1).all_pass);
    }
    CHECK_THROWS_AS((void)regime_check(sk_descriptor(10), -0.5, 0.1), ArgumentError);
    CHECK_THROWS_AS((void)regime_check(sk_descriptor(10), 0.1, 1.5), ArgumentError);
    CHECK_THROWS_AS((void)regime_check(sk_descriptor(10), 0.1, -0.1), ArgumentError);
    CHECK_THROWS_AS((void)er_descriptor(10, 0.5, 0.0), ArgumentError);
}

TEST_CASE("edge list serialization") {
    auto k4 = random_regular(4, 3, 1);
    CHECK(edge_list_text(k4) == "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
}

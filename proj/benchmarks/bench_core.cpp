#include <benchmark/benchmark.h>

#include "spinlab/approx.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/model.hpp"
#include "spinlab/tilted.hpp"

static void BM_glauber_step(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    spinlab::IsingModel m(n, 1.0, u, Eigen::MatrixXd(), h);
    spinlab::Rng r(1);
    auto x = spinlab::all_plus(n);
    for (auto _ : state) {
        spinlab::glauber_step(m, x, r);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_glauber_step)->Arg(64)->Arg(1024);

static spinlab::IsingModel bench_model(int n, double beta) {
    spinlab::Rng r(7u + static_cast<std::uint64_t>(n));
    Eigen::VectorXd u(n), h(n);
    for (int i = 0; i < n; ++i) {
        u[i] = r.uniform(-1.0, 1.0);
        h[i] = 0.5 * r.normal();
    }
    return spinlab::IsingModel(n, beta, u, Eigen::MatrixXd(), h);
}

static void BM_gibbs_moments(benchmark::State& state) {
    auto m = bench_model(static_cast<int>(state.range(0)), 1.0);
    for (auto _ : state) {
        auto gm = spinlab::exact::gibbs_moments(m);
        benchmark::DoNotOptimize(gm.cov.data());
    }
}
BENCHMARK(BM_gibbs_moments)->Arg(10)->Arg(14)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_binomial_tilted_moment(benchmark::State& state) {
    auto ens = spinlab::tilted::fair_coin(state.range(0), 4.0, 0.0);
    for (auto _ : state) {
        double v = spinlab::tilted::exact_tilted_moment(ens, 2);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_binomial_tilted_moment)->Arg(1024)->Arg(65536)->Arg(1000000)
    ->Unit(benchmark::kMicrosecond);

static void BM_cavity_covariance(benchmark::State& state) {
    auto m = bench_model(static_cast<int>(state.range(0)), 1.0);
    for (auto _ : state) {
        double v = spinlab::approx::cov_via_cavity(m, 0, 1);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_cavity_covariance)->Arg(10)->Arg(16)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

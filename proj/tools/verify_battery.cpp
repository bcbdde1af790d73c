#include "verify_battery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "spinlab/approx.hpp"
#include "spinlab/dynamics.hpp"
#include "spinlab/ensembles.hpp"
#include "spinlab/exact.hpp"
#include "spinlab/linalg.hpp"
#include "spinlab/model.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/tilted.hpp"

namespace spinlab::verify {
namespace {

namespace fs = std::filesystem;

Eigen::VectorXd box_vector(Rng& r, int n) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = r.uniform(-1.0, 1.0);
    return u;
}

Eigen::VectorXd gauss_vector(Rng& r, int n, double sigma) {
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h[i] = sigma * r.normal();
    return h;
}

/// Random symmetric PSD matrix rescaled to a prescribed operator norm.
Eigen::MatrixXd psd_with_norm(Rng& r, int n, double target) {
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = r.normal();
    Eigen::MatrixXd S = G.transpose() * G;
    return S * (target / linalg::opnorm_sym(S));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Crit {
    CriterionResult r;
    std::chrono::steady_clock::time_point t0;
    explicit Crit(int id, std::string name) {
        r.id = id;
        r.name = std::move(name);
        t0 = std::chrono::steady_clock::now();
    }
    CriterionResult done(bool pass, double measured, std::string detail) {
        r.pass = pass;
        r.measured = measured;
        r.detail = std::move(detail);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }
};

CriterionResult crit_cavity_identity() {
    Crit c(1, "cavity covariance identity");
    Rng r(101);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        int n = 2 + static_cast<int>(r.below(9)); // 2..10
        double beta = r.uniform(0.0, 2.0);
        IsingModel m(n, beta, box_vector(r, n), Eigen::MatrixXd(), gauss_vector(r, n, 0.5));
        auto gm = exact::gibbs_moments(m);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                worst = std::max(worst, std::abs(approx::cov_via_cavity(m, i, j) - gm.cov(i, j)));
    }
    return c.done(worst <= 1e-10, worst, "max |cavity - enumeration| over 50 models, n <= 10");
}

CriterionResult crit_independent_collapse() {
    Crit c(2, "independent-case covariance collapse");
    Rng r(202);
    double worst = 0.0;
    const int n = 10;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd u = box_vector(r, n), h = gauss_vector(r, n, 1.0);
        IsingModel m(n, 0.0, u, Eigen::MatrixXd(), h);
        auto gm = exact::gibbs_moments(m);
        Eigen::MatrixXd A = approx::approx_covariance(approx::approx_params(0.0, u, h), n);
        worst = std::max(worst, (A - gm.cov).cwiseAbs().maxCoeff());
    }
    return c.done(worst <= 1e-12, worst, "max entrywise error over 20 product measures");
}

/// Criteria 3 and 4 share the same instance sweep; computed once.
std::pair<CriterionResult, CriterionResult> crit_correlation_rate_and_psd() {
    Crit c3(3, "correlation approximation shrinks with n");
    const double beta = 1.0;
    std::map<int, double> median_err;
    double min_eig = 1e300, max_eig = -1e300;
    for (int n : {8, 12, 16}) {
        Rng r(303 + static_cast<std::uint64_t>(n));
        std::vector<double> errs;
        for (int rep = 0; rep < 100; ++rep) {
            Eigen::VectorXd u = box_vector(r, n), h = gauss_vector(r, n, 0.5);
            IsingModel m(n, beta, u, Eigen::MatrixXd(), h);
            auto gm = exact::gibbs_moments(m);
            Eigen::MatrixXd C = approx::approx_correlation(approx::approx_params(beta, u, h), n);
            errs.push_back(approx::opnorm_error(gm.cor, C));
            Eigen::VectorXd ev = linalg::sym_eigenvalues(C);
            min_eig = std::min(min_eig, ev[0]);
            max_eig = std::max(max_eig, ev[ev.size() - 1]);
        }
        std::nth_element(errs.begin(), errs.begin() + 49, errs.end());
        double lo = errs[49];
        std::nth_element(errs.begin(), errs.begin() + 50, errs.end());
        median_err[n] = 0.5 * (lo + errs[50]);
    }
    double ratio = median_err[16] / median_err[8];
    auto r3 = c3.done(ratio <= 0.65, ratio,
                      "median opnorm error n=8: " + fmt(median_err[8]) + ", n=12: " +
                          fmt(median_err[12]) + ", n=16: " + fmt(median_err[16]));

    Crit c4(4, "correlation approximant spectrum inside [0, 1]"); // shares criterion 3's sweep
    bool ok = min_eig >= 0.0 && max_eig <= 1.0 + 1e-12;
    auto r4 = c4.done(ok, max_eig,
                      "eigenvalue range [" + fmt(min_eig) + ", " + fmt(max_eig) + "] over 300 instances");
    return {r3, r4};
}

CriterionResult crit_smooth_interaction_bound() {
    Crit c(5, "covariance norm under the smooth-interaction bound");
    Rng r(505);
    const int n = 10;
    double worst_slack = -1e300;
    for (int rep = 0; rep < 50; ++rep) {
        double jn = r.uniform(0.1, 0.4);
        Eigen::MatrixXd J = psd_with_norm(r, n, jn);
        double bound = approx::hs_bound(1.0, jn);
        for (int k = 0; k < 20; ++k) {
            IsingModel m(n, 0.0, Eigen::VectorXd::Zero(n), J, gauss_vector(r, n, 1.0));
            double nrm = linalg::opnorm_sym(exact::gibbs_moments(m).cov);
            worst_slack = std::max(worst_slack, nrm - bound);
        }
    }
    return c.done(worst_slack <= 1e-9, worst_slack,
                  "max ||Cov||op minus 1/(1-2||J||op) over 1000 runs");
}

CriterionResult crit_ferro_gap_collapse() {
    Crit c(6, "mean-field ferromagnet gap collapse past the transition");
    const int n = 12;
    std::map<double, double> gap;
    for (double b : {0.3, 0.45, 0.7}) {
        Eigen::MatrixXd J = (b / n) * Eigen::MatrixXd::Ones(n, n);
        IsingModel m(n, 0.0, Eigen::VectorXd::Zero(n), J, Eigen::VectorXd::Zero(n));
        gap[b] = exact::spectral_gap(m);
    }
    double ratio = gap[0.3] / gap[0.7];
    return c.done(ratio >= 5.0, ratio,
                  "n*gap at b=0.3/0.45/0.7: " + fmt(n * gap[0.3]) + "/" + fmt(n * gap[0.45]) +
                      "/" + fmt(n * gap[0.7]));
}

CriterionResult crit_outlier_gap_floor() {
    Crit c(7, "negative-outlier chains keep an order-1/n gap");
    const int n = 12;
    double worst = 1e300;
    Rng r(707);
    for (int s = 0; s < 20; ++s) {
        Eigen::VectorXd u = box_vector(r, n);
        Eigen::MatrixXd J = psd_with_norm(r, n, 0.3);
        for (double beta : {1.0, 4.0}) {
            IsingModel m(n, beta, u, J, Eigen::VectorXd::Zero(n));
            worst = std::min(worst, n * exact::spectral_gap(m));
        }
    }
    return c.done(worst >= 0.5 * (1.0 - 2.0 * 0.3), worst,
                  "min n*gap over 20 seeds x {beta 1, 4}, ||J||op = 0.3");
}

CriterionResult crit_deficit_parity_rates() {
    Crit c(8, "tilted-moment deficit parity rates");
    const double gamma = 4.0;
    std::map<long, double> even, odd;
    for (long omega : {256L, 512L, 1024L}) {
        even[omega] = tilted::deficit(tilted::fair_coin(omega, gamma, 0.0), 2);
        // biased coins, sized so the variance proxy lands on the same omega
        long n = std::lround(static_cast<double>(omega) / 0.96);
        tilted::TiltedEnsemble ens(Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(n, 0.2),
                                   gamma, 0.0);
        odd[omega] = tilted::deficit(ens, 1);
    }
    double e1 = even[512] / even[256], e2 = even[1024] / even[512];
    double o1 = odd[512] / odd[256], o2 = odd[1024] / odd[512];
    bool ok = e1 >= 0.35 && e1 <= 0.7 && e2 >= 0.35 && e2 <= 0.7 && o1 >= 0.55 && o1 <= 0.85 &&
              o2 >= 0.55 && o2 <= 0.85;
    return c.done(ok, e2,
                  "doubling ratios even m=2: " + fmt(e1) + ", " + fmt(e2) + "; odd m=1 biased: " +
                      fmt(o1) + ", " + fmt(o2));
}

CriterionResult crit_tilted_variance_accuracy() {
    Crit c(9, "tilted variance matches the gaussian law at 1/n accuracy");
    const double beta = 16.0;
    const double cap = 10.0 * std::pow(std::log1p(beta), 2.0);
    std::map<long, double> scaled;
    for (long n : {512L, 1024L, 2048L}) {
        auto ens = tilted::fair_coin(n, 0.0, 0.0);
        auto res = tilted::tilted_variance(ens, beta / std::sqrt(static_cast<double>(n)), beta);
        scaled[n] = std::abs(res.variance - res.gaussian_prediction) * static_cast<double>(n) *
                    (1.0 + 2.0 * beta * res.zeta);
    }
    bool ok = scaled[1024] <= 1.5 * scaled[512] && scaled[2048] <= 1.5 * scaled[1024] &&
              std::max({scaled[512], scaled[1024], scaled[2048]}) <= cap;
    return c.done(ok, scaled[2048],
                  "scaled errors n=512/1024/2048: " + fmt(scaled[512]) + "/" + fmt(scaled[1024]) +
                      "/" + fmt(scaled[2048]) + ", cap " + fmt(cap));
}

CriterionResult crit_gaussian_parity() {
    Crit c(10, "gaussian parity identities vanish");
    double worst = 0.0;
    for (int m = 1; m <= 6; ++m)
        for (int ell = 0; ell <= 4; ++ell) {
            if ((m + ell) % 2 != 0) continue;
            for (double gamma : {0.5, 2.0, 8.0})
                for (double a : {0.5, 0.75, 1.0})
                    worst = std::max(
                        worst, std::abs(tilted::gaussian_parity_expectation(m, ell, gamma, a)));
        }
    return c.done(worst <= 1e-13, worst, "max |E f_m^(l)(G_a)| over even m+l, m <= 6, l <= 4");
}

CriterionResult crit_stein_residual() {
    Crit c(11, "normal-approximation residual closes");
    Rng r(1111);
    double worst = 0.0;
    for (int m = 1; m <= 8; ++m)
        for (double gamma : {0.5, 2.0, 8.0})
            for (int k = 0; k < 100; ++k) {
                double x = r.uniform(-3.0, 3.0);
                double e = std::exp(-gamma * x * x) / (1.0 + 2.0 * gamma);
                double fp = -((m >= 2 ? (m - 1) * std::pow(x, m - 2) : 0.0) -
                              2.0 * gamma * std::pow(x, static_cast<double>(m))) *
                            e;
                double res = fp - x * tilted::poisson_solution_eval(m, gamma, x) -
                             tilted::tilde_h_eval(m, gamma, x);
                worst = std::max(worst, std::abs(res));
            }
    return c.done(worst <= 1e-9, worst, "max |Pf' - x Pf - (h - E h(G))| at 100 points per (m, gamma)");
}

CriterionResult crit_escape_ratio_bound() {
    Crit c(12, "mean-field escape ratio under the explicit bound");
    double worst = -1e300;
    bool ok = true;
    for (long n : {100L, 10000L, 1000000L})
        for (double b0 : {0.25, 0.5, 1.0, 2.0}) {
            auto [ratio, bound] = dynamics::cw_conductance_exact(n, b0);
            ok = ok && ratio <= bound;
            worst = std::max(worst, ratio * static_cast<double>(n) * std::exp(4.0 * b0));
        }
    return c.done(ok && worst <= 4.0, worst, "max ratio * n * e^{4 b0} over 12 cells (bound 4)");
}

CriterionResult crit_gapped_detector() {
    Crit c(13, "gapped-state detector agrees with flip differences");
    Rng r(1313);
    long mismatches = 0;
    for (int rep = 0; rep < 50; ++rep) {
        long n = 4 + static_cast<long>(r.below(9)); // 4..12
        auto g = ensembles::erdos_renyi(n, r.uniform(0.2, 0.6), 9000 + static_cast<std::uint64_t>(rep));
        SpinConfig x(static_cast<size_t>(n));
        for (auto& v : x) v = r.bernoulli(0.5) ? 1 : -1;
        double kappa = r.uniform(0.05, 2.0), d = r.uniform(1.0, 8.0);
        auto rep_out = dynamics::gapped_check(g, x, kappa, d);
        std::vector<long> want;
        double H = dynamics::hamiltonian(g, x, d);
        for (long i = 0; i < n; ++i) {
            SpinConfig y = x;
            y[static_cast<size_t>(i)] = static_cast<std::int8_t>(-y[static_cast<size_t>(i)]);
            if ((H - dynamics::hamiltonian(g, y, d)) / 2.0 < kappa) want.push_back(i);
        }
        if (rep_out.violating_sites != want) ++mismatches;
    }
    return c.done(mismatches == 0, static_cast<double>(mismatches),
                  "site-set mismatches over 50 random (graph, configuration) pairs");
}

CriterionResult crit_regular_second_eigenvalue() {
    Crit c(14, "sparse regular graphs concentrate the second eigenvalue");
    const long n = 1000, d = 3;
    const double edge = 2.0 * std::sqrt(2.0) + 0.2;
    int inside = 0;
    double worst = -1e300;
    for (int s = 0; s < 20; ++s) {
        auto g = ensembles::random_regular(n, d, 1400 + static_cast<std::uint64_t>(s));
        std::vector<std::vector<long>> nb(static_cast<size_t>(n));
        for (auto& e : g.edges) {
            nb[static_cast<size_t>(e.first)].push_back(e.second);
            nb[static_cast<size_t>(e.second)].push_back(e.first);
        }
        auto apply = [&nb, n](const double* in, double* out) {
            for (long i = 0; i < n; ++i) {
                double acc = 0.0;
                for (long j : nb[static_cast<size_t>(i)]) acc += in[j];
                out[i] = acc;
            }
        };
        double lam2 = linalg::lanczos_top(apply, static_cast<std::size_t>(n),
                                          Eigen::VectorXd::Ones(n), 250, 1e-10, 42);
        if (lam2 <= edge) ++inside;
        worst = std::max(worst, lam2);
    }
    return c.done(inside >= 19, worst,
                  std::to_string(inside) + "/20 runs with lambda2 <= 2*sqrt(2) + 0.2; max " +
                      fmt(worst));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CriterionResult crit_cli_determinism(const std::string& cli_path) {
    Crit c(15, "byte-identical driver outputs under fixed seeds");
    if (cli_path.empty())
        return c.done(false, -1.0, "no driver binary supplied to the battery");
    const std::vector<std::string> invocations = {
        "approx-error --n 6 --beta 0.8 --seeds 2 --seed 11",
        "tilted-sweep --m 1,2 --gamma 4 --omega 64,128 --seed 11",
        "mixing --n 6 --beta 1 --eps 0.25 --restarts 2 --seed 11",
        "mixing --n 6 --beta 1 --trace-steps 200 --thin 10 --seed 11",
        "spectra --ensemble regular --n 24 --d 3 --seed 11",
        "regime --ensemble er --n 500 --p 0.01 --beta 0.05 --seed 11",
        "cw-bound --n 100 --beta0 1 --seed 11",
        "gapped-search --n 40 --d 5 --kappa 0.5 --seeds 2 --sweeps 20 --seed 11",
    };
    fs::path dir = fs::temp_directory_path() /
                   ("spinlab-verify-" + std::to_string(static_cast<long>(::getpid())));
    std::error_code ec;
    fs::create_directories(dir, ec);
    long mismatches = 0, failures = 0;
    for (size_t k = 0; k < invocations.size(); ++k) {
        fs::path a = dir / ("a" + std::to_string(k)), b = dir / ("b" + std::to_string(k));
        for (const fs::path& out : {a, b}) {
            std::string cmd = "'" + cli_path + "' " + invocations[k] + " --out '" + out.string() +
                              "' 2>/dev/null";
            if (std::system(cmd.c_str()) != 0) ++failures;
        }
        std::string sa = slurp(a), sb = slurp(b);
        if (sa.empty() || sa != sb) ++mismatches;
    }
    fs::remove_all(dir, ec);
    bool ok = mismatches == 0 && failures == 0;
    return c.done(ok, static_cast<double>(mismatches),
                  std::to_string(mismatches) + " of " + std::to_string(invocations.size()) +
                      " command pairs differed, " + std::to_string(failures) + " runs failed");
}

} // namespace

std::vector<CriterionResult> run_battery(Level level, const std::string& cli_path) {
    std::vector<CriterionResult> out;
    out.push_back(crit_cavity_identity());
    out.push_back(crit_independent_collapse());
    if (level == Level::Full) {
        auto [r3, r4] = crit_correlation_rate_and_psd();
        out.push_back(r3);
        out.push_back(r4);
        out.push_back(crit_smooth_interaction_bound());
        out.push_back(crit_ferro_gap_collapse());
        out.push_back(crit_outlier_gap_floor());
        out.push_back(crit_deficit_parity_rates());
        out.push_back(crit_tilted_variance_accuracy());
    }
    out.push_back(crit_gaussian_parity());
    out.push_back(crit_stein_residual());
    out.push_back(crit_escape_ratio_bound());
    out.push_back(crit_gapped_detector());
    if (level == Level::Full) {
        out.push_back(crit_regular_second_eigenvalue());
        out.push_back(crit_cli_determinism(cli_path));
    }
    std::sort(out.begin(), out.end(),
              [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
    return out;
}

bool all_pass(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
        if (!r.pass) return false;
    return true;
}

} // namespace spinlab::verify

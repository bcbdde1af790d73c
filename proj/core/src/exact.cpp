#include "spinlab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "spinlab/errors.hpp"
#include "spinlab/linalg.hpp"
#include "spinlab/rng.hpp"

namespace spinlab::exact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier compensated accumulator.
struct Acc {
    double s = 0.0, c = 0.0;
    void add(double v) {
        double t = s + v;
        if (std::abs(s) >= std::abs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

inline std::uint64_t gray(std::uint64_t k) { return k ^ (k >> 1); }

// Incremental sweep state along the binary-reflected Gray sequence.  The
// exponent is re-derived from scratch at block starts, so rounding drift is
// bounded by the block length rather than 2^n.
struct Sweep {
    const IsingModel* m = nullptr;
    int n = 0;
    std::vector<double> x;  // spins as +-1.0
    std::vector<double> Jx; // J * x (empty when J = 0)
    double s_u = 0.0;
    double E = 0.0;

    void init(const IsingModel& model, std::uint64_t mask) {
        m = &model;
        n = model.n;
        x.assign(static_cast<size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = (mask >> i) & 1u ? 1.0 : -1.0;
        s_u = 0.0;
        double hx = 0.0;
        for (int i = 0; i < n; ++i) {
            s_u += model.u[i] * x[static_cast<size_t>(i)];
            hx += model.h[i] * x[static_cast<size_t>(i)];
        }
        E = -(model.beta / n) * s_u * s_u + hx;
        if (!model.zero_J()) {
            Jx.assign(static_cast<size_t>(n), 0.0);
            double q = 0.0;
            for (int i = 0; i < n; ++i) {
                double row = 0.0;
                for (int j = 0; j < n; ++j) row += model.J(i, j) * x[static_cast<size_t>(j)];
                Jx[static_cast<size_t>(i)] = row;
                q += row * x[static_cast<size_t>(i)];
            }
            E += q;
        } else {
            Jx.clear();
        }
    }

    void flip(int i) {
        const double xi = x[static_cast<size_t>(i)];
        const double ui = m->u[i];
        double dE = (4.0 * m->beta / n) * ui * xi * (s_u - ui * xi) - 2.0 * m->h[i] * xi;
        if (!Jx.empty()) {
            dE -= 4.0 * xi * (Jx[static_cast<size_t>(i)] - m->J(i, i) * xi);
            for (int j = 0; j < n; ++j) Jx[static_cast<size_t>(j)] -= 2.0 * xi * m->J(j, i);
        }
        s_u -= 2.0 * ui * xi;
        x[static_cast<size_t>(i)] = -xi;
        E += dE;
    }
};

// Fixed block count keeps results independent of the thread count.
std::uint64_t block_count(std::uint64_t total) { return std::min<std::uint64_t>(total, 64); }

template <class PerBlock>
void run_blocks(std::uint64_t total, int threads, PerBlock&& work) {
    const std::uint64_t B = block_count(total);
    if (threads <= 1) {
        for (std::uint64_t b = 0; b < B; ++b) work(b, total * b / B, total * (b + 1) / B);
        return;
    }
    std::vector<std::thread> pool;
    std::uint64_t per = (B + static_cast<std::uint64_t>(threads) - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        std::uint64_t b0 = per * static_cast<std::uint64_t>(t);
        std::uint64_t b1 = std::min(B, b0 + per);
        if (b0 >= b1) break;
        pool.emplace_back([&work, total, B, b0, b1] {
            for (std::uint64_t b = b0; b < b1; ++b) work(b, total * b / B, total * (b + 1) / B);
        });
    }
    for (auto& th : pool) th.join();
}

void check_enum_cap(const IsingModel& m, const EnumLimits& lim) {
    if (m.n > lim.max_enum_n)
        throw CapacityError("enumeration requested at n = " + std::to_string(m.n) +
                            " exceeds cap " + std::to_string(lim.max_enum_n));
}

void check_kernel_cap(const IsingModel& m, const EnumLimits& lim) {
    if (m.n > lim.max_kernel_n)
        throw CapacityError("kernel op requested at n = " + std::to_string(m.n) +
                            " exceeds cap " + std::to_string(lim.max_kernel_n));
}

std::uint32_t mask_of(const SpinConfig& x) {
    std::uint32_t mask = 0;
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] == 1) mask |= 1u << i;
    return mask;
}

} // namespace

double partition_function(const IsingModel& m, const EnumLimits& lim) {
    check_enum_cap(m, lim);
    const std::uint64_t N = 1ull << m.n;
    const std::uint64_t B = block_count(N);
    std::vector<double> bmax(B, -std::numeric_limits<double>::infinity());
    std::vector<double> bsum(B, 0.0);
    run_blocks(N, lim.threads, [&](std::uint64_t b, std::uint64_t k0, std::uint64_t k1) {
        Sweep sw;
        sw.init(m, gray(k0));
        double mx = sw.E;
        Acc sum;
        sum.add(1.0);
        for (std::uint64_t k = k0 + 1; k < k1; ++k) {
            sw.flip(static_cast<int>(__builtin_ctzll(k)));
            if (sw.E > mx) {
                double r = std::exp(mx - sw.E);
                sum.s *= r;
                sum.c *= r;
                mx = sw.E;
                sum.add(1.0);
            } else {
                sum.add(std::exp(sw.E - mx));
            }
        }
        bmax[b] = mx;
        bsum[b] = sum.value();
    });
    double M = *std::max_element(bmax.begin(), bmax.end());
    Acc total;
    for (std::uint64_t b = 0; b < B; ++b) total.add(bsum[b] * std::exp(bmax[b] - M));
    return M + std::log(total.value());
}

GibbsSummary gibbs_moments(const IsingModel& m, const EnumLimits& lim) {
    check_enum_cap(m, lim);
    const int n = m.n;
    const std::uint64_t N = 1ull << n;
    const std::uint64_t B = block_count(N);
    const size_t P = static_cast<size_t>(n) * (n + 1) / 2; // packed upper triangle

    // pass 1: global exponent maximum
    std::vector<double> bmax(B, -std::numeric_limits<double>::infinity());
    run_blocks(N, lim.threads, [&](std::uint64_t b, std::uint64_t k0, std::uint64_t k1) {
        Sweep sw;
        sw.init(m, gray(k0));
        double mx = sw.E;
        for (std::uint64_t k = k0 + 1; k < k1; ++k) {
            sw.flip(static_cast<int>(__builtin_ctzll(k)));
            mx = std::max(mx, sw.E);
        }
        bmax[b] = mx;
    });
    const double M = *std::max_element(bmax.begin(), bmax.end());

    // pass 2: weighted first and second moments against exp(E - M)
    std::vector<Acc> bZ(B);
    std::vector<std::vector<Acc>> bW1(B), bW2(B);
    run_blocks(N, lim.threads, [&](std::uint64_t b, std::uint64_t k0, std::uint64_t k1) {
        auto& W1 = bW1[b];
        auto& W2 = bW2[b];
        W1.assign(static_cast<size_t>(n), Acc{});
        W2.assign(P, Acc{});
        Sweep sw;
        sw.init(m, gray(k0));
        std::vector<double> wx(static_cast<size_t>(n));
        for (std::uint64_t k = k0;; ++k) {
            double w = std::exp(sw.E - M);
            bZ[b].add(w);
            size_t idx = 0;
            for (int i = 0; i < n; ++i) {
                double v = w * sw.x[static_cast<size_t>(i)];
                wx[static_cast<size_t>(i)] = v;
                W1[static_cast<size_t>(i)].add(v);
            }
            for (int i = 0; i < n; ++i) {
                double v = wx[static_cast<size_t>(i)];
                for (int j = i; j < n; ++j) W2[idx++].add(v * sw.x[static_cast<size_t>(j)]);
            }
            if (k + 1 >= k1) break;
            sw.flip(static_cast<int>(__builtin_ctzll(k + 1)));
        }
    });

    Acc Z;
    std::vector<Acc> W1(static_cast<size_t>(n)), W2(P);
    for (std::uint64_t b = 0; b < B; ++b) {
        Z.add(bZ[b].value());
        for (size_t i = 0; i < static_cast<size_t>(n); ++i) W1[i].add(bW1[b][i].value());
        for (size_t p = 0; p < P; ++p) W2[p].add(bW2[b][p].value());
    }

    GibbsSummary out;
    const double Zv = Z.value();
    out.logZ = M + std::log(Zv);
    out.mean.resize(n);
    for (int i = 0; i < n; ++i) out.mean[i] = W1[static_cast<size_t>(i)].value() / Zv;
    out.cov.resize(n, n);
    size_t idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double second = W2[idx++].value() / Zv;
            double cv = second - out.mean[i] * out.mean[j];
            out.cov(i, j) = cv;
            out.cov(j, i) = cv;
        }
    out.cor.resize(n, n);
    std::vector<bool> degen(static_cast<size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        if (1.0 - std::abs(out.mean[i]) < 1e-14 || out.cov(i, i) <= 0.0) {
            degen[static_cast<size_t>(i)] = true;
            out.degenerate_sites.push_back(i);
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                out.cor(i, j) = 1.0;
            } else if (degen[static_cast<size_t>(i)] || degen[static_cast<size_t>(j)]) {
                out.cor(i, j) = kNaN;
            } else {
                out.cor(i, j) = out.cov(i, j) / std::sqrt(out.cov(i, i) * out.cov(j, j));
            }
        }
    return out;
}

KernelTable kernel_table(const IsingModel& m, const EnumLimits& lim) {
    check_kernel_cap(m, lim);
    const int n = m.n;
    const std::uint64_t N = 1ull << n;
    KernelTable t;
    t.n = n;
    t.log_pi.assign(N, 0.0);

    std::vector<double>& E = t.log_pi; // filled with raw exponents first
    run_blocks(N, lim.threads, [&](std::uint64_t, std::uint64_t k0, std::uint64_t k1) {
        Sweep sw;
        sw.init(m, gray(k0));
        E[gray(k0)] = sw.E;
        for (std::uint64_t k = k0 + 1; k < k1; ++k) {
            sw.flip(static_cast<int>(__builtin_ctzll(k)));
            E[gray(k)] = sw.E;
        }
    });
    double M = *std::max_element(E.begin(), E.end());
    Acc sum;
    for (std::uint64_t s = 0; s < N; ++s) sum.add(std::exp(E[s] - M));
    double logZ = M + std::log(sum.value());
    for (std::uint64_t s = 0; s < N; ++s) E[s] -= logZ;

    // conditional plus-probabilities from exponent gaps; detailed balance is
    // then exact by construction
    t.pplus.assign(N * static_cast<size_t>(n), 0.0);
    for (std::uint64_t s = 0; s < N; ++s) {
        for (int i = 0; i < n; ++i) {
            std::uint64_t on = s | (1ull << i), off = s & ~(1ull << i);
            double d = t.log_pi[on] - t.log_pi[off];
            double p;
            if (d >= 0.0) {
                p = 1.0 / (1.0 + std::exp(-d));
            } else {
                double e = std::exp(d);
                p = e / (1.0 + e);
            }
            t.pplus[s * static_cast<size_t>(n) + static_cast<size_t>(i)] = p;
        }
    }
    return t;
}

void kernel_apply(const KernelTable& t, const double* f, double* out) {
    const int n = t.n;
    const std::uint64_t N = 1ull << n;
    const double inv = 1.0 / n;
    for (std::uint64_t s = 0; s < N; ++s) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double keep = t.prob_keep(static_cast<std::uint32_t>(s), i);
            acc += keep * f[s] + (1.0 - keep) * f[s ^ (1ull << i)];
        }
        out[s] = acc * inv;
    }
}

void kernel_apply_sym(const KernelTable& t, const double* g, double* out) {
    const int n = t.n;
    const std::uint64_t N = 1ull << n;
    const double inv = 1.0 / n;
    for (std::uint64_t s = 0; s < N; ++s) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double keep = t.prob_keep(static_cast<std::uint32_t>(s), i);
            acc += keep * g[s] + std::sqrt(keep * (1.0 - keep)) * g[s ^ (1ull << i)];
        }
        out[s] = acc * inv;
    }
}

Eigen::MatrixXd transition_matrix(const IsingModel& m, const EnumLimits& lim) {
    KernelTable t = kernel_table(m, lim);
    const int n = m.n;
    const auto N = static_cast<Eigen::Index>(1ull << n);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
    const double inv = 1.0 / n;
    for (Eigen::Index s = 0; s < N; ++s) {
        double stay = 0.0;
        for (int i = 0; i < n; ++i) {
            double keep = t.prob_keep(static_cast<std::uint32_t>(s), i);
            stay += keep;
            P(s, s ^ (1ll << i)) = (1.0 - keep) * inv;
        }
        P(s, s) = stay * inv;
    }
    return P;
}

double spectral_gap(const IsingModel& m, const EnumLimits& lim) {
    KernelTable t = kernel_table(m, lim);
    const std::uint64_t N = 1ull << m.n;
    if (m.n <= 10) {
        const auto Ni = static_cast<Eigen::Index>(N);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Ni, Ni);
        const double inv = 1.0 / m.n;
        for (Eigen::Index s = 0; s < Ni; ++s) {
            double stay = 0.0;
            for (int i = 0; i < m.n; ++i) {
                double keep = t.prob_keep(static_cast<std::uint32_t>(s), i);
                stay += keep;
                A(s, s ^ (1ll << i)) = std::sqrt(keep * (1.0 - keep)) * inv;
            }
            A(s, s) = stay * inv;
        }
        Eigen::VectorXd ev = linalg::sym_eigenvalues(A);
        return 1.0 - ev[ev.size() - 2];
    }
    Eigen::VectorXd sqrt_pi(static_cast<Eigen::Index>(N));
    for (std::uint64_t s = 0; s < N; ++s)
        sqrt_pi[static_cast<Eigen::Index>(s)] = std::exp(0.5 * t.log_pi[s]);
    auto apply = [&t](const double* in, double* out) { kernel_apply_sym(t, in, out); };
    double lam2 = linalg::lanczos_top(apply, N, sqrt_pi, 400, 1e-13, 0x5ca1ab1e);
    return 1.0 - lam2;
}

long tv_mixing_time(const IsingModel& m, double eps, const SpinConfig& start,
                    const EnumLimits& lim) {
    if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("tv_mixing_time: eps must lie in (0,1)");
    check_spins(start);
    if (static_cast<int>(start.size()) != m.n)
        throw ArgumentError("tv_mixing_time: start configuration length mismatch");
    KernelTable t = kernel_table(m, lim);
    const std::uint64_t N = 1ull << m.n;
    std::vector<double> pi(N);
    for (std::uint64_t s = 0; s < N; ++s) pi[s] = std::exp(t.log_pi[s]);
    std::vector<double> nu(N, 0.0), next(N, 0.0);
    nu[mask_of(start)] = 1.0;
    auto tv = [&](const std::vector<double>& v) {
        Acc a;
        for (std::uint64_t s = 0; s < N; ++s) a.add(std::abs(v[s] - pi[s]));
        return 0.5 * a.value();
    };
    const double inv = 1.0 / m.n;
    const long cap = 1000000;
    if (tv(nu) <= eps) return 0;
    for (long step = 1; step <= cap; ++step) {
        for (std::uint64_t s = 0; s < N; ++s) {
            double acc = 0.0;
            for (int i = 0; i < m.n; ++i)
                acc += t.prob_keep(static_cast<std::uint32_t>(s), i) * (nu[s] + nu[s ^ (1ull << i)]);
            next[s] = acc * inv;
        }
        nu.swap(next);
        if (tv(nu) <= eps) return step;
    }
    throw CapacityError("tv_mixing_time: not mixed within step cap");
}

double conductance(const IsingModel& m, const std::vector<std::uint32_t>& S,
                   const EnumLimits& lim) {
    KernelTable t = kernel_table(m, lim);
    const std::uint64_t N = 1ull << m.n;
    std::vector<char> in_S(N, 0);
    for (auto s : S) {
        if (s >= N) throw ArgumentError("conductance: state mask out of range");
        in_S[s] = 1;
    }
    std::uint64_t count = 0;
    for (std::uint64_t s = 0; s < N; ++s) count += in_S[s] ? 1u : 0u;
    if (count == 0 || count == N) throw ArgumentError("conductance: S must be proper and nonempty");

    const double inv = 1.0 / m.n;
    Acc q, ps;
    for (std::uint64_t s = 0; s < N; ++s) {
        if (!in_S[s]) continue;
        double pi_s = std::exp(t.log_pi[s]);
        ps.add(pi_s);
        for (int i = 0; i < m.n; ++i) {
            std::uint64_t y = s ^ (1ull << i);
            if (in_S[y]) continue;
            double keep = t.prob_keep(static_cast<std::uint32_t>(s), i);
            q.add(pi_s * (1.0 - keep) * inv);
        }
    }
    return q.value() / ps.value();
}

double mlsi_upper_estimate(const IsingModel& m, int restarts, std::uint64_t seed,
                           const EnumLimits& lim) {
    if (m.n > 12)
        throw CapacityError("mlsi_upper_estimate capped at n = 12, requested n = " +
                            std::to_string(m.n));
    KernelTable t = kernel_table(m, lim);
    const std::uint64_t N = 1ull << m.n;
    std::vector<double> pi(N);
    for (std::uint64_t s = 0; s < N; ++s) pi[s] = std::exp(t.log_pi[s]);

    std::vector<double> pf(N), logpf(N), plog(N);
    auto entropy = [&](const std::vector<double>& f, double Ef) {
        Acc e;
        double lE = std::log(Ef);
        for (std::uint64_t s = 0; s < N; ++s) e.add(pi[s] * f[s] * (std::log(f[s]) - lE));
        return e.value();
    };
    auto mean_pi = [&](const std::vector<double>& f) {
        Acc a;
        for (std::uint64_t s = 0; s < N; ++s) a.add(pi[s] * f[s]);
        return a.value();
    };

    // Entropy-contraction ratio Ent(Pf)/Ent(f); larger witnesses a weaker MLSI.
    // Entropies at rounding-noise scale are floored to zero so that ratios of
    // noise cannot masquerade as genuine contraction witnesses.
    auto ratio = [&](const std::vector<double>& f, bool* ok) {
        double Ef = mean_pi(f);
        double floor = 1e-12 * std::max(1.0, std::abs(Ef));
        double entf = entropy(f, Ef);
        if (!(entf > floor)) {
            *ok = false;
            return 0.0;
        }
        kernel_apply(t, f.data(), pf.data());
        double entp = entropy(pf, Ef);
        if (entp < floor) entp = 0.0;
        *ok = true;
        return entp / entf;
    };

    // gradient of the ratio with respect to f (not log f)
    auto ratio_grad = [&](const std::vector<double>& f, std::vector<double>& grad) {
        double Ef = mean_pi(f);
        double lE = std::log(Ef);
        kernel_apply(t, f.data(), pf.data());
        double entf = entropy(f, Ef), entp = entropy(pf, Ef);
        for (std::uint64_t s = 0; s < N; ++s) logpf[s] = std::log(pf[s]) - lE;
        kernel_apply(t, logpf.data(), plog.data());
        for (std::uint64_t s = 0; s < N; ++s) {
            double dnum = pi[s] * plog[s];
            double dden = pi[s] * (std::log(f[s]) - lE);
            grad[s] = (dnum * entf - entp * dden) / (entf * entf);
        }
        return entp / entf;
    };

    std::vector<std::vector<double>> starts;
    // smoothed half-space indicators per site
    for (int i = 0; i < m.n; ++i) {
        std::vector<double> f(N, 1e-3);
        for (std::uint64_t s = 0; s < N; ++s)
            if ((s >> i) & 1u) f[s] = 1.0;
        starts.push_back(std::move(f));
    }
    // smoothed indicators of positive field/outlier magnetization
    for (int which = 0; which < 2; ++which) {
        const Eigen::VectorXd& v = which == 0 ? m.u : m.h;
        if (v.cwiseAbs().maxCoeff() == 0.0) continue;
        std::vector<double> f(N, 1e-3);
        bool nonconst = false;
        for (std::uint64_t s = 0; s < N; ++s) {
            double dot = 0.0;
            for (int i = 0; i < m.n; ++i) dot += v[i] * ((s >> i) & 1u ? 1.0 : -1.0);
            if (dot > 0) f[s] = 1.0;
            nonconst |= dot <= 0;
        }
        if (nonconst) starts.push_back(std::move(f));
    }
    // exponentiated linear functions
    for (int i = 0; i < std::min(m.n, 3); ++i) {
        std::vector<double> f(N);
        for (std::uint64_t s = 0; s < N; ++s) f[s] = std::exp((s >> i) & 1u ? 1.0 : -1.0);
        starts.push_back(std::move(f));
    }
    Rng rng(seed);
    for (int r = 0; r < restarts; ++r) {
        auto child = rng.split(static_cast<std::uint64_t>(r));
        std::vector<double> f(N);
        for (std::uint64_t s = 0; s < N; ++s) f[s] = std::exp(child.normal());
        starts.push_back(std::move(f));
    }

    double best = 0.0;
    std::vector<double> grad(N), g(N), gtrial(N), f(N);
    for (auto& f0 : starts) {
        bool ok = false;
        double r0 = ratio(f0, &ok);
        if (!ok) continue;
        best = std::max(best, r0);
        for (std::uint64_t s = 0; s < N; ++s) g[s] = std::log(f0[s]);
        double cur = r0, step = 0.25;
        for (int it = 0; it < 200 && step > 1e-7; ++it) {
            for (std::uint64_t s = 0; s < N; ++s) f[s] = std::exp(g[s]);
            ratio_grad(f, grad);
            double mg = 0.0;
            for (std::uint64_t s = 0; s < N; ++s) {
                grad[s] *= f[s]; // chain rule into log-space
                mg = std::max(mg, std::abs(grad[s]));
            }
            if (mg == 0.0) break;
            double shift = 0.0;
            for (std::uint64_t s = 0; s < N; ++s) {
                gtrial[s] = g[s] + step * grad[s] / mg;
                shift = std::max(shift, gtrial[s]);
            }
            for (std::uint64_t s = 0; s < N; ++s) f[s] = std::exp(gtrial[s] - shift);
            for (std::uint64_t s = 0; s < N; ++s) f[s] = std::max(f[s], 1e-12);
            double rt = ratio(f, &ok);
            if (ok && rt > cur) {
                cur = rt;
                for (std::uint64_t s = 0; s < N; ++s) g[s] = std::log(f[s]);
                step *= 1.2;
            } else {
                step *= 0.5;
            }
        }
        best = std::max(best, cur);
    }
    double est = 1.0 - best;
    if (est < 0.0) est = 0.0;
    if (est > 1.0) est = 1.0;
    return est;
}

} // namespace spinlab::exact

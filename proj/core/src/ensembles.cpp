#include "spinlab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "spinlab/errors.hpp"
#include "spinlab/linalg.hpp"
#include "spinlab/rng.hpp"

namespace spinlab::ensembles {

namespace {

constexpr long kDenseCap = 4096;
constexpr int kPairingRetries = 500;

std::pair<long, long> norm_edge(long a, long b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

Graph finish(long n, const std::set<std::pair<long, long>>& es) {
    Graph g;
    g.n = n;
    g.edges.assign(es.begin(), es.end());
    g.degree.assign(static_cast<size_t>(n), 0);
    for (const auto& [a, b] : g.edges) {
        ++g.degree[static_cast<size_t>(a)];
        ++g.degree[static_cast<size_t>(b)];
    }
    return g;
}

// flip sign so the max-abs entry is positive; returns that magnitude
double sign_normalize(Eigen::VectorXd& v) {
    Eigen::Index at = 0;
    double mx = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > mx) {
            mx = std::abs(v[i]);
            at = i;
        }
    if (v[at] < 0.0) v = -v;
    return mx;
}

SpectralReport finish_report(Eigen::VectorXd evs_desc, Eigen::VectorXd top, bool full) {
    SpectralReport rep;
    rep.eigenvalues = std::move(evs_desc);
    rep.full = full;
    const auto N = rep.eigenvalues.size();
    rep.spectral_width = rep.eigenvalues[0] - rep.eigenvalues[N - 1];
    rep.second_width = N >= 2 ? rep.eigenvalues[1] - rep.eigenvalues[N - 1] : 0.0;
    rep.top_vector = std::move(top);
    rep.top_max_abs = sign_normalize(rep.top_vector);
    return rep;
}

// three extreme eigenvalues + leading vector for operators too big to densify
SpectralReport extremes_report(const std::function<void(const double*, double*)>& apply, long n) {
    Eigen::VectorXd none;
    auto [l1, v1] = linalg::lanczos_top_vector(apply, static_cast<size_t>(n), none, 600, 1e-13,
                                              0xadce55u);
    auto neg = [&](const double* x, double* y) {
        apply(x, y);
        for (long i = 0; i < n; ++i) y[i] = -y[i];
    };
    double ln = -linalg::lanczos_top(neg, static_cast<size_t>(n), none, 600, 1e-13, 0xadce56u);
    double l2 = linalg::lanczos_top(apply, static_cast<size_t>(n), v1, 600, 1e-13, 0xadce57u);
    l2 = std::min(l2, l1);
    Eigen::VectorXd evs(3);
    evs << l1, l2, ln;
    return finish_report(std::move(evs), std::move(v1), false);
}

} // namespace

Eigen::MatrixXd Graph::adjacency() const {
    if (n > kDenseCap) throw CapacityError("dense adjacency capped at 4096 vertices");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, b] : edges) {
        A(a, b) = 1.0;
        A(b, a) = 1.0;
    }
    return A;
}

void Graph::multiply(const double* x, double* y) const {
    std::fill(y, y + n, 0.0);
    for (const auto& [a, b] : edges) {
        y[a] += x[b];
        y[b] += x[a];
    }
}

Graph random_regular(long n, long d, std::uint64_t seed) {
    if (d < 3 || d >= n) throw ArgumentError("random_regular: need 3 <= d < n");
    if ((d * n) % 2 != 0) throw ArgumentError("random_regular: d*n must be even");
    Rng r(seed);

    std::vector<long> stubs(static_cast<size_t>(d * n));
    for (long v = 0; v < n; ++v)
        for (long k = 0; k < d; ++k) stubs[static_cast<size_t>(v * d + k)] = v;

    for (int attempt = 0; attempt < kPairingRetries; ++attempt) {
        for (size_t i = stubs.size() - 1; i > 0; --i)
            std::swap(stubs[i], stubs[static_cast<size_t>(r.below(i + 1))]);
        std::set<std::pair<long, long>> es;
        bool simple = true;
        for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
            long a = stubs[i], b = stubs[i + 1];
            if (a == b || !es.insert(norm_edge(a, b)).second) {
                simple = false;
                break;
            }
        }
        if (simple) return finish(n, es);
    }

    // Dense-degree fallback: deterministic circulant start, then degree-preserving
    // double-edge switches.  Not exactly uniform, but well mixed for spectral use.
    std::set<std::pair<long, long>> es;
    for (long v = 0; v < n; ++v) {
        for (long j = 1; j <= d / 2; ++j) es.insert(norm_edge(v, (v + j) % n));
        if (d % 2 == 1) es.insert(norm_edge(v, (v + n / 2) % n));
    }
    std::vector<std::pair<long, long>> list(es.begin(), es.end());
    const long swaps = 30 * static_cast<long>(list.size());
    for (long t = 0; t < swaps; ++t) {
        size_t e1 = static_cast<size_t>(r.below(list.size()));
        size_t e2 = static_cast<size_t>(r.below(list.size()));
        if (e1 == e2) continue;
        auto [a, b] = list[e1];
        auto [c, dd] = list[e2];
        if (r.bernoulli(0.5)) std::swap(c, dd);
        if (a == c || a == dd || b == c || b == dd) continue;
        auto na = norm_edge(a, c), nb = norm_edge(b, dd);
        if (es.count(na) != 0 || es.count(nb) != 0) continue;
        es.erase(list[e1]);
        es.erase(list[e2]);
        es.insert(na);
        es.insert(nb);
        list[e1] = na;
        list[e2] = nb;
    }
    return finish(n, es);
}

Graph erdos_renyi(long n, double p, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("erdos_renyi: need n >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("erdos_renyi: p must lie in [0, 1]");
    Rng r(seed);
    Graph g;
    g.n = n;
    g.degree.assign(static_cast<size_t>(n), 0);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            if (r.bernoulli(p)) {
                g.edges.emplace_back(i, j);
                ++g.degree[static_cast<size_t>(i)];
                ++g.degree[static_cast<size_t>(j)];
            }
    return g;
}

Eigen::MatrixXd sk_matrix(long n, double beta, double mu_mean, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("sk_matrix: need n >= 1");
    if (!(beta >= 0.0)) throw ArgumentError("sk_matrix: beta must be nonnegative");
    Rng r(seed);
    const double sd = beta / std::sqrt(static_cast<double>(n));
    const double mean = -mu_mean / static_cast<double>(n);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) {
            double v = mean + sd * r.normal();
            M(i, j) = v;
            M(j, i) = v;
        }
    return M;
}

SpectralReport spectrum(const Eigen::MatrixXd& M) {
    const auto N = M.rows();
    if (N < 1 || M.cols() != N) throw ArgumentError("spectrum: matrix must be square, nonempty");
    double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw ArgumentError("spectrum: matrix asymmetry beyond 1e-10");

    if (N <= kDenseCap) {
        auto [ev, V] = linalg::sym_eigensystem(0.5 * (M + M.transpose()));
        return finish_report(ev.reverse(), V.col(N - 1), true);
    }
    auto apply = [&M, N](const double* x, double* y) {
        Eigen::Map<const Eigen::VectorXd> xv(x, N);
        Eigen::Map<Eigen::VectorXd> yv(y, N);
        yv.noalias() = M.selfadjointView<Eigen::Upper>() * xv;
    };
    return extremes_report(apply, N);
}

SpectralReport spectrum(const Graph& g) {
    if (g.n < 1) throw ArgumentError("spectrum: empty graph");
    if (g.n <= kDenseCap) return spectrum(g.adjacency());
    auto apply = [&g](const double* x, double* y) { g.multiply(x, y); };
    return extremes_report(apply, g.n);
}

AntiferroDecomposition decompose_antiferro(const Eigen::MatrixXd& A, double beta) {
    const auto N = A.rows();
    if (N < 2) throw ArgumentError("decompose_antiferro: need at least 2 vertices");
    if (N > kDenseCap) throw CapacityError("decompose_antiferro: dense remainder capped at 4096");
    if (!(beta >= 0.0)) throw ArgumentError("decompose_antiferro: beta must be nonnegative");
    SpectralReport rep = spectrum(A); // also validates symmetry

    const double l1 = rep.eigenvalues[0];
    const double l2 = rep.eigenvalues[1];
    const double ln = rep.eigenvalues[N - 1];
    const Eigen::VectorXd& v1 = rep.top_vector;
    const double mx = rep.top_max_abs;

    AntiferroDecomposition out;
    out.degenerate_top = (l1 - l2) < 1e-8;
    out.shift = beta * std::max(l2, 0.0);
    out.u = v1 / mx;
    out.outlier_scale = beta * l1 * static_cast<double>(N) * mx * mx;
    out.J = -beta * (A - l1 * v1 * v1.transpose());
    out.J.diagonal().array() += out.shift;
    out.J = 0.5 * (out.J + out.J.transpose()).eval();
    out.j_opnorm = beta * (std::max(l2, 0.0) - ln);

    Eigen::MatrixXd lhs = -beta * A;
    lhs.diagonal().array() += out.shift;
    Eigen::MatrixXd rhs =
        out.J - (out.outlier_scale / static_cast<double>(N)) * out.u * out.u.transpose();
    out.reconstruction_error = linalg::opnorm_sym(lhs - rhs);
    return out;
}

EnsembleDescriptor regular_descriptor(long n, long d, bool fixed_degree) {
    if (n < 1 || d < 1) throw ArgumentError("regular_descriptor: need n, d >= 1");
    EnsembleDescriptor e;
    e.kind = EnsembleDescriptor::Kind::Regular;
    e.n = n;
    e.d = d;
    e.fixed_degree = fixed_degree;
    return e;
}

EnsembleDescriptor regular_descriptor(long n, long d, bool fixed_degree, double lambda2,
                                      double lambda_min) {
    EnsembleDescriptor e = regular_descriptor(n, d, fixed_degree);
    e.have_spectrum = true;
    e.lambda2 = lambda2;
    e.lambda_min = lambda_min;
    return e;
}

EnsembleDescriptor er_descriptor(long n, double p, double c) {
    if (n < 1) throw ArgumentError("er_descriptor: need n >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("er_descriptor: p must lie in [0, 1]");
    if (!(c > 0.0)) throw ArgumentError("er_descriptor: c must be positive");
    EnsembleDescriptor e;
    e.kind = EnsembleDescriptor::Kind::ErdosRenyi;
    e.n = n;
    e.p = p;
    e.c = c;
    return e;
}

EnsembleDescriptor sk_descriptor(long n) {
    if (n < 1) throw ArgumentError("sk_descriptor: need n >= 1");
    EnsembleDescriptor e;
    e.kind = EnsembleDescriptor::Kind::SK;
    e.n = n;
    return e;
}

EnsembleDescriptor matrix_descriptor(long n, double spectral_width) {
    if (n < 1) throw ArgumentError("matrix_descriptor: need n >= 1");
    if (!(spectral_width >= 0.0))
        throw ArgumentError("matrix_descriptor: width must be nonnegative");
    EnsembleDescriptor e;
    e.kind = EnsembleDescriptor::Kind::Matrix;
    e.n = n;
    e.width = spectral_width;
    return e;
}

namespace {

RegimeRule min_rule(std::string name, double beta, double ta, const char* na, double tb,
                    const char* nb) {
    RegimeRule r;
    r.rule = std::move(name);
    if (ta <= tb) {
        r.threshold = ta;
        r.binding = na;
    } else {
        r.threshold = tb;
        r.binding = nb;
    }
    r.pass = beta < r.threshold;
    return r;
}

RegimeRule flat_rule(std::string name, double beta, double t, const char* binding) {
    RegimeRule r;
    r.rule = std::move(name);
    r.threshold = t;
    r.binding = binding;
    r.pass = beta < t;
    return r;
}

} // namespace

RegimeReport regime_check(const EnsembleDescriptor& desc, double beta, double epsilon) {
    if (!(beta >= 0.0)) throw ArgumentError("regime_check: beta must be nonnegative");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw ArgumentError("regime_check: epsilon must lie in [0, 1]");
    const double inf = std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(desc.n);
    const double growth_num = std::pow(nd, 1.0 - epsilon);

    RegimeReport rep;
    switch (desc.kind) {
    case EnsembleDescriptor::Kind::Regular: {
        const double dd = static_cast<double>(desc.d);
        if (desc.have_spectrum) {
            double split = desc.lambda2 - desc.lambda_min;
            double ta = split > 0.0 ? 1.0 / (2.0 * split) : inf;
            rep.rules.push_back(
                min_rule("outlier-split", beta, ta, "spectral-gap", growth_num / dd,
                         "degree-growth"));
        }
        if (desc.fixed_degree) {
            double t = desc.d > 1 ? 1.0 / (8.0 * std::sqrt(dd - 1.0)) : inf;
            rep.rules.push_back(flat_rule("fixed-degree", beta, t, "degree"));
        } else {
            double var = dd * (1.0 - dd / nd);
            double ta = var > 0.0 ? 1.0 / (8.0 * std::sqrt(var)) : inf;
            rep.rules.push_back(min_rule("growing-degree", beta, ta, "degree-spread",
                                         growth_num / dd, "degree-growth"));
        }
        break;
    }
    case EnsembleDescriptor::Kind::ErdosRenyi: {
        const double np = nd * desc.p;
        double ta = np > 0.0 ? desc.c / (8.0 * std::sqrt(np)) : inf;
        double tb = np > 0.0 ? growth_num / np : inf;
        rep.rules.push_back(min_rule("edge-density", beta, ta, "mean-degree", tb,
                                     "degree-growth"));
        break;
    }
    case EnsembleDescriptor::Kind::SK:
        rep.rules.push_back(flat_rule("gaussian-disorder", beta, 0.125, "universal"));
        break;
    case EnsembleDescriptor::Kind::Matrix: {
        double t = desc.width > 0.0 ? 0.5 / desc.width : inf;
        rep.rules.push_back(flat_rule("spectral-width", beta, t, "width"));
        break;
    }
    }
    rep.all_pass = true;
    for (const auto& r : rep.rules) rep.all_pass = rep.all_pass && r.pass;
    return rep;
}

std::string edge_list_text(const Graph& g) {
    std::ostringstream os;
    for (const auto& [a, b] : g.edges) os << a << ' ' << b << '\n';
    return os.str();
}

} // namespace spinlab::ensembles

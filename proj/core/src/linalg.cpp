#include "spinlab/linalg.hpp"

#include <cmath>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab::linalg {

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eigensystem(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    return {es.eigenvalues(), es.eigenvectors()};
}

double opnorm_sym(const Eigen::MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    Eigen::VectorXd ev = sym_eigenvalues(A);
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

std::pair<double, Eigen::VectorXd>
lanczos_top_vector(const std::function<void(const double*, double*)>& apply, std::size_t dim,
                   const Eigen::VectorXd& deflate, int max_iter, double tol, std::uint64_t seed) {
    using Eigen::VectorXd;
    if (dim == 0) throw ArgumentError("lanczos_top: empty operator");
    const auto N = static_cast<Eigen::Index>(dim);
    VectorXd d;
    if (deflate.size() != 0) {
        if (deflate.size() != N) throw ArgumentError("lanczos_top: deflation vector length mismatch");
        d = deflate.normalized();
    }
    auto project = [&](VectorXd& v) {
        if (d.size() != 0) v -= (d.dot(v)) * d;
    };

    int m = std::min<int>(max_iter, static_cast<int>(dim));
    std::vector<VectorXd> basis;
    basis.reserve(static_cast<size_t>(m));
    VectorXd v(N);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = rng.normal();
    project(v);
    double nv = v.norm();
    if (nv == 0.0) {
        v.setOnes();
        project(v);
        nv = v.norm();
        // operator effectively one-dimensional
        if (nv == 0.0) return {0.0, VectorXd::Zero(N)};
    }
    v /= nv;

    std::vector<double> alpha, beta; // T diagonal / off-diagonal
    auto build_t = [&](int j) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j + 1, j + 1);
        for (int k = 0; k <= j; ++k) T(k, k) = alpha[static_cast<size_t>(k)];
        for (int k = 0; k + 1 <= j; ++k) T(k, k + 1) = T(k + 1, k) = beta[static_cast<size_t>(k)];
        return T;
    };
    auto ritz_vector = [&](const Eigen::MatrixXd& T) {
        auto [ev, U] = sym_eigensystem(T);
        VectorXd out = VectorXd::Zero(N);
        for (Eigen::Index k = 0; k < T.rows(); ++k)
            out += U(k, ev.size() - 1) * basis[static_cast<size_t>(k)];
        double nn = out.norm();
        if (nn > 0.0) out /= nn;
        return out;
    };

    VectorXd w(N), prev;
    double best = -std::numeric_limits<double>::infinity(), prev_best = best;
    for (int j = 0; j < m; ++j) {
        basis.push_back(v);
        apply(v.data(), w.data());
        project(w);
        double a = v.dot(w);
        alpha.push_back(a);
        w -= a * v;
        if (j > 0) w -= beta.back() * prev;
        // full reorthogonalization, twice for numerical safety
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) w -= (b.dot(w)) * b;
        project(w);
        double nb = w.norm();

        if (j % 8 == 7 || nb < 1e-13 || j == m - 1) {
            Eigen::MatrixXd T = build_t(j);
            best = sym_eigenvalues(T).maxCoeff();
            if (std::abs(best - prev_best) < tol && j > 16) return {best, ritz_vector(T)};
            prev_best = best;
            if (nb < 1e-13) return {best, ritz_vector(T)};
        }
        beta.push_back(nb);
        prev = v;
        v = w / nb;
    }
    return {best, ritz_vector(build_t(m - 1))};
}

double lanczos_top(const std::function<void(const double*, double*)>& apply, std::size_t dim,
                   const Eigen::VectorXd& deflate, int max_iter, double tol, std::uint64_t seed) {
    return lanczos_top_vector(apply, dim, deflate, max_iter, tol, seed).first;
}

} // namespace spinlab::linalg

#pragma once

// Shared helpers for the test suites.  Oracle-style routines here are written
// naively and independently of the library internals on purpose.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "spinlab/model.hpp"
#include "spinlab/rng.hpp"

inline spinlab::IsingModel random_model(spinlab::Rng& r, int n, double beta, bool with_J,
                                        double h_scale = 1.0) {
    Eigen::VectorXd u(n), h(n);
    for (int i = 0; i < n; ++i) u[i] = r.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i) h[i] = h_scale * r.normal();
    Eigen::MatrixXd J;
    if (with_J) {
        J.setZero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = 0.1 * r.normal() / n;
                J(i, j) = v;
                J(j, i) = v;
            }
    }
    return spinlab::IsingModel(n, beta, std::move(u), std::move(J), std::move(h));
}

// PSD matrix with operator norm exactly `opnorm`.
inline Eigen::MatrixXd random_psd(spinlab::Rng& r, int n, double opnorm) {
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = r.normal();
    Eigen::MatrixXd S = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::VectorXd lam = es.eigenvalues().cwiseAbs();
    double mx = lam.maxCoeff();
    if (mx <= 0.0) lam.setConstant(1.0), mx = 1.0;
    lam *= opnorm / mx;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Naive unnormalized log-weight, written as plain triple loops.
inline double naive_log_weight(const spinlab::IsingModel& m, const spinlab::SpinConfig& x) {
    double s = 0.0;
    for (int i = 0; i < m.n; ++i) s += m.u[i] * x[i];
    double e = -(m.beta / m.n) * s * s;
    if (!m.zero_J())
        for (int i = 0; i < m.n; ++i)
            for (int j = 0; j < m.n; ++j) e += x[i] * m.J(i, j) * x[j];
    for (int i = 0; i < m.n; ++i) e += m.h[i] * x[i];
    return e;
}

// All 2^n spin configurations, index bit b -> spin of site b.
inline spinlab::SpinConfig config_from_mask(int n, unsigned long mask) {
    spinlab::SpinConfig x(n);
    for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1 ? 1 : -1;
    return x;
}

// Cyclic Jacobi eigenvalue oracle for small symmetric matrices, ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> A) {
    const int n = static_cast<int>(A.size());
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(A[p][q]));
        if (off < 1e-14) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A[p][q]) < 1e-300) continue;
                double theta = 0.5 * std::atan2(2.0 * A[p][q], A[q][q] - A[p][p]);
                double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> d(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = A[i][i];
    std::sort(d.begin(), d.end());
    return d;
}

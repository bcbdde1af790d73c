#include "spinlab/approx.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "spinlab/errors.hpp"
#include "spinlab/linalg.hpp"

namespace spinlab::approx {

namespace {

void validate_pair(double beta, const Eigen::VectorXd& u, const Eigen::VectorXd& h) {
    if (!(beta >= 0.0)) throw ArgumentError("beta must be nonnegative");
    if (u.size() < 1 || u.size() != h.size())
        throw ArgumentError("u and h must share a positive length");
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (!(std::abs(u[i]) <= 1.0)) throw ArgumentError("u entries must lie in [-1,1]");
}

double sech_clamped(double a) {
    a = std::clamp(a, -350.0, 350.0);
    return 1.0 / std::cosh(a);
}

double logaddexp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_quadrature(const std::function<double(double)>& f, double a, double b,
                           double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace

std::pair<double, double> solve_fixed_point(double beta, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& h) {
    validate_pair(beta, u, h);
    const auto n = static_cast<double>(u.size());
    auto g = [&](double m, double* deriv) {
        double acc = 0.0, dacc = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            double a = h[i] - 2.0 * beta * m * u[i];
            double t = std::tanh(a);
            acc += u[i] * t;
            double se = sech_clamped(a);
            dacc += u[i] * u[i] * se * se;
        }
        if (deriv) *deriv = 1.0 + (2.0 * beta / n) * dacc;
        return m - acc / n;
    };
    double lo = -1.0, hi = 1.0, m = 0.0;
    for (int it = 0; it < 200; ++it) {
        double deriv = 1.0;
        double val = g(m, &deriv);
        if (std::abs(val) <= 1e-13) break;
        if (val > 0.0)
            hi = m;
        else
            lo = m;
        double step = m - val / deriv;
        m = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
    }
    return {m, -2.0 * beta * m};
}

ApproxParams approx_params(double beta, const Eigen::VectorXd& u, const Eigen::VectorXd& h) {
    auto [m_star, lambda_star] = solve_fixed_point(beta, u, h);
    const auto n = u.size();
    ApproxParams p;
    p.m_star = m_star;
    p.lambda_star = lambda_star;
    p.v_star.resize(n);
    p.w_star.resize(n);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double se = sech_clamped(h[i] - 2.0 * beta * m_star * u[i]);
        p.v_star[i] = se * se;
        p.w_star[i] = u[i] * se;
        acc += p.w_star[i] * p.w_star[i];
    }
    p.F_second = acc / static_cast<double>(n);
    p.alpha_star = 2.0 * beta / (1.0 + 2.0 * beta * p.F_second);
    return p;
}

Eigen::MatrixXd approx_covariance(const ApproxParams& p, int n) {
    if (n != p.v_star.size()) throw ArgumentError("dimension does not match parameter vectors");
    Eigen::VectorXd vu(n); // v .* u, recovered as w .* sqrt(v)
    for (int i = 0; i < n; ++i) vu[i] = p.w_star[i] * std::sqrt(p.v_star[i]);
    Eigen::MatrixXd M = p.v_star.asDiagonal();
    M.noalias() -= (p.alpha_star / n) * vu * vu.transpose();
    return M;
}

Eigen::MatrixXd approx_correlation(const ApproxParams& p, int n) {
    if (n != p.w_star.size()) throw ArgumentError("dimension does not match parameter vectors");
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    M.noalias() -= (p.alpha_star / n) * p.w_star * p.w_star.transpose();
    return M;
}

std::vector<double> cavity_cgf_batch(const IsingModel& m, const std::vector<int>& I,
                                     const std::vector<double>& svals, int max_enum_n) {
    if (!m.zero_J()) throw ArgumentError("cavity identities require J = 0");
    if (I.size() > 2) throw ArgumentError("cavity subset limited to at most two sites");
    std::vector<char> removed(static_cast<size_t>(m.n), 0);
    for (int i : I) {
        if (i < 0 || i >= m.n) throw ArgumentError("cavity site index out of range");
        if (removed[static_cast<size_t>(i)]) throw ArgumentError("cavity sites must be distinct");
        removed[static_cast<size_t>(i)] = 1;
    }
    const int k = m.n - static_cast<int>(I.size());
    if (k > max_enum_n)
        throw CapacityError("cavity enumeration over " + std::to_string(k) +
                            " sites exceeds cap " + std::to_string(max_enum_n));
    const size_t ns = svals.size();
    if (k == 0) return std::vector<double>(ns, 0.0); // empty cavity: M = 0
    std::vector<double> uu, hh;
    uu.reserve(static_cast<size_t>(k));
    hh.reserve(static_cast<size_t>(k));
    for (int i = 0; i < m.n; ++i)
        if (!removed[static_cast<size_t>(i)]) {
            uu.push_back(m.u[i]);
            hh.push_back(m.h[i]);
        }

    // one Gray-code sweep accumulating a log-sum-exp per tilt plus the s = 0
    // normalizer; magnetization keeps the full 1/n normalization
    const double coef = m.beta / m.n;
    const double invn = 1.0 / m.n;
    std::vector<double> mx(ns + 1, -std::numeric_limits<double>::infinity());
    std::vector<double> sum(ns + 1, 0.0);
    const std::uint64_t N = 1ull << k;
    std::vector<double> y(static_cast<size_t>(k));
    double t = 0.0, hy = 0.0;
    for (std::uint64_t g = 0; g < N; ++g) {
        std::uint64_t mask = g ^ (g >> 1);
        if ((g & 0xFFFu) == 0) { // periodic re-anchor bounds additive drift
            t = hy = 0.0;
            for (int i = 0; i < k; ++i) {
                y[static_cast<size_t>(i)] = (mask >> i) & 1u ? 1.0 : -1.0;
                t += uu[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
                hy += hh[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
            }
        } else {
            int b = __builtin_ctzll(g);
            double yb = y[static_cast<size_t>(b)];
            t -= 2.0 * uu[static_cast<size_t>(b)] * yb;
            hy -= 2.0 * hh[static_cast<size_t>(b)] * yb;
            y[static_cast<size_t>(b)] = -yb;
        }
        double base = -coef * t * t + hy;
        for (size_t j = 0; j <= ns; ++j) {
            double e = base + (j < ns ? svals[j] * t * invn : 0.0);
            if (e > mx[j]) {
                double r = std::exp(mx[j] - e);
                sum[j] = sum[j] * r + 1.0;
                mx[j] = e;
            } else {
                sum[j] += std::exp(e - mx[j]);
            }
        }
    }
    std::vector<double> out(ns);
    double norm = mx[ns] + std::log(sum[ns]);
    for (size_t j = 0; j < ns; ++j) out[j] = mx[j] + std::log(sum[j]) - norm;
    return out;
}

double cavity_cgf(const IsingModel& m, const std::vector<int>& I, double s, int max_enum_n) {
    return cavity_cgf_batch(m, I, {s}, max_enum_n)[0];
}

double cov_via_cavity(const IsingModel& m, int i, int j, int max_enum_n) {
    if (i < 0 || i >= m.n || j < 0 || j >= m.n) throw ArgumentError("site index out of range");
    if (m.n > max_enum_n)
        throw CapacityError("cavity covariance capped at n = " + std::to_string(max_enum_n));
    const double b = m.beta;
    if (i == j) {
        auto psi = cavity_cgf_batch(m, {i}, {2.0 * b * m.u[i], -2.0 * b * m.u[i]}, max_enum_n);
        double log_var = std::log(4.0) + psi[0] + psi[1] -
                         2.0 * logaddexp(m.h[i] + psi[1], -m.h[i] + psi[0]);
        return std::exp(log_var);
    }
    const double ui = m.u[i], uj = m.u[j], hi = m.h[i], hj = m.h[j];
    const double p = 2.0 * b * (ui + uj), q = 2.0 * b * (ui - uj);
    auto psi = cavity_cgf_batch(m, {i, j}, {p, -p, q, -q}, max_enum_n);
    const double cross = 2.0 * b * ui * uj / m.n;
    double A = -2.0 * cross + psi[0] + psi[1];
    double B = 2.0 * cross + psi[2] + psi[3];
    // Xi = e^A - e^B, kept in signed log form to survive large tilts
    double diff = A - B;
    double log_abs_xi = B + std::log(std::abs(std::expm1(diff)));
    double sign = diff >= 0.0 ? 1.0 : -1.0;
    double log_theta = logaddexp(logaddexp(-cross + hi + hj + psi[1], -cross - hi - hj + psi[0]),
                                 logaddexp(cross + hi - hj + psi[3], cross - hi + hj + psi[2]));
    if (std::expm1(diff) == 0.0) return 0.0;
    return sign * std::exp(std::log(4.0) + log_abs_xi - 2.0 * log_theta);
}

double opnorm_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols())
        throw ArgumentError("operator-norm distance needs square matrices of equal shape");
    Eigen::MatrixXd D = A - B;
    if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, D.cwiseAbs().maxCoeff()))
        throw ArgumentError("operator-norm distance expects symmetric inputs");
    D = 0.5 * (D + D.transpose());
    if (D.rows() <= 2048) return linalg::opnorm_sym(D);
    auto applyP = [&D](const double* in, double* out) {
        Eigen::Map<const Eigen::VectorXd> x(in, D.rows());
        Eigen::Map<Eigen::VectorXd> y(out, D.rows());
        y.noalias() = D * x;
    };
    auto applyM = [&D](const double* in, double* out) {
        Eigen::Map<const Eigen::VectorXd> x(in, D.rows());
        Eigen::Map<Eigen::VectorXd> y(out, D.rows());
        y.noalias() = -(D * x);
    };
    Eigen::VectorXd none;
    double top = linalg::lanczos_top(applyP, static_cast<std::size_t>(D.rows()), none, 300, 1e-12, 17);
    double bot = linalg::lanczos_top(applyM, static_cast<std::size_t>(D.rows()), none, 300, 1e-12, 18);
    return std::max(std::abs(top), std::abs(bot));
}

double gamma_mlsi_bound(long n, double delta) {
    if (n < 1) throw ArgumentError("n must be positive");
    if (!(delta >= 0.0 && delta < 1.0))
        throw ArgumentError("delta must lie in [0,1)");
    return 1.0 / (std::pow(static_cast<double>(n), 1.0 + delta) * std::tgamma(1.0 - delta));
}

double hs_bound(double L, double j_op) {
    if (!(L >= 0.0) || !(j_op >= 0.0)) throw ArgumentError("arguments must be nonnegative");
    if (!(2.0 * L * j_op < 1.0)) throw DomainError("requires 2 L j_op < 1");
    return L / (1.0 - 2.0 * L * j_op);
}

double theorem_main_bound(double j_op, double alpha) {
    if (!(alpha >= 0.0) || !(j_op >= 0.0)) throw ArgumentError("arguments must be nonnegative");
    const double c = 2.0 * (1.0 + alpha) * j_op;
    if (!(c < 1.0)) throw DomainError("requires 2 (1+alpha) j_op < 1");
    if (c == 0.0) return 1.0;
    auto integrand = [c](double lam) { return c / (1.0 - c * (1.0 - lam)); };
    double q = adaptive_quadrature(integrand, 0.0, 1.0, 1e-13);
    return std::exp(-q);
}

} // namespace spinlab::approx

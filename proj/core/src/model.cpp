#include "spinlab/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace spinlab {

SpinConfig all_plus(int n) { return SpinConfig(static_cast<size_t>(n), 1); }
SpinConfig all_minus(int n) { return SpinConfig(static_cast<size_t>(n), -1); }

void check_spins(const SpinConfig& x) {
    for (auto s : x)
        if (s != 1 && s != -1) throw ArgumentError("spin entries must be -1 or +1");
}

IsingModel::IsingModel(int n_, double beta_, Eigen::VectorXd u_, Eigen::MatrixXd J_,
                       Eigen::VectorXd h_)
    : n(n_), beta(beta_), u(std::move(u_)), J(std::move(J_)), h(std::move(h_)) {
    if (n < 1) throw ArgumentError("model dimension must be positive");
    if (beta < 0.0) throw ArgumentError("beta must be nonnegative");
    if (u.size() != n || h.size() != n)
        throw ArgumentError("u and h must have length n");
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(u[i]) <= 1.0))
            throw ArgumentError("outlier direction requires max|u_i| <= 1");
    }
    if (J.size() != 0) {
        if (J.rows() != n || J.cols() != n) throw ArgumentError("J must be n x n");
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(J(i, j) - J(j, i)) > 1e-12)
                    throw ArgumentError("J must be symmetric to 1e-12");
        if (J.cwiseAbs().maxCoeff() == 0.0) J.resize(0, 0); // canonical J = 0
    }
}

double energy_exponent(const IsingModel& m, const SpinConfig& x) {
    if (static_cast<int>(x.size()) != m.n) throw ArgumentError("configuration length mismatch");
    double s = 0.0, hx = 0.0;
    for (int i = 0; i < m.n; ++i) {
        s += m.u[i] * x[i];
        hx += m.h[i] * x[i];
    }
    double e = -(m.beta / m.n) * s * s + hx;
    if (!m.zero_J()) {
        double q = 0.0;
        for (int i = 0; i < m.n; ++i) {
            double row = 0.0;
            for (int j = 0; j < m.n; ++j) row += m.J(i, j) * x[j];
            q += row * x[i];
        }
        e += q;
    }
    return e;
}

// Log-weight gap between x_i = +1 and x_i = -1 with the rest held fixed.
static double plus_minus_gap(const IsingModel& m, const SpinConfig& x, int i) {
    double s_rest = 0.0;
    for (int j = 0; j < m.n; ++j) s_rest += m.u[j] * x[j];
    s_rest -= m.u[i] * x[i];
    double d = -(4.0 * m.beta / m.n) * m.u[i] * s_rest + 2.0 * m.h[i];
    if (!m.zero_J()) {
        double row = 0.0;
        for (int j = 0; j < m.n; ++j)
            if (j != i) row += m.J(i, j) * x[j];
        d += 4.0 * row;
    }
    return d;
}

double conditional_plus_prob(const IsingModel& m, const SpinConfig& x, int i) {
    if (static_cast<int>(x.size()) != m.n) throw ArgumentError("configuration length mismatch");
    if (i < 0 || i >= m.n) throw ArgumentError("site index out of range");
    double d = plus_minus_gap(m, x, i);
    // logistic in a saturation-safe form
    if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
    double e = std::exp(d);
    return e / (1.0 + e);
}

void glauber_step(const IsingModel& m, SpinConfig& x, Rng& rng) {
    int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.n)));
    double p = conditional_plus_prob(m, x, i);
    x[static_cast<size_t>(i)] = rng.bernoulli(p) ? 1 : -1;
}

double magnetization(const Eigen::VectorXd& u, const SpinConfig& x) {
    if (u.size() != static_cast<Eigen::Index>(x.size()))
        throw ArgumentError("magnetization: dimension mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += u[i] * x[static_cast<size_t>(i)];
    return s / static_cast<double>(x.size());
}

// ---- serialization ----

static void append_num(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

std::string IsingModel::to_json() const {
    std::string out;
    out.reserve(64 + 24 * static_cast<size_t>(n) * (zero_J() ? 2 : n + 2));
    out += "{\"n\":";
    out += std::to_string(n);
    out += ",\"beta\":";
    append_num(out, beta);
    out += ",\"u\":[";
    for (int i = 0; i < n; ++i) {
        if (i) out += ',';
        append_num(out, u[i]);
    }
    out += "],\"J\":[";
    if (!zero_J()) {
        for (int i = 0; i < n; ++i) {
            if (i) out += ',';
            out += '[';
            for (int j = 0; j < n; ++j) {
                if (j) out += ',';
                append_num(out, J(i, j));
            }
            out += ']';
        }
    }
    out += "],\"h\":[";
    for (int i = 0; i < n; ++i) {
        if (i) out += ',';
        append_num(out, h[i]);
    }
    out += "]}";
    return out;
}

IsingModel IsingModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ArgumentError(std::string("model JSON parse failure: ") + e.what());
    }
    if (!j.is_object()) throw ArgumentError("model JSON must be an object");
    for (auto& el : j.items()) {
        const std::string& k = el.key();
        if (k != "n" && k != "beta" && k != "u" && k != "J" && k != "h")
            throw ArgumentError("model JSON: unknown field '" + k + "'");
    }
    for (const char* k : {"n", "beta", "u", "J", "h"})
        if (!j.contains(k)) throw ArgumentError(std::string("model JSON: missing field '") + k + "'");
    int n = j["n"].get<int>();
    if (n < 1) throw ArgumentError("model JSON: n must be positive");
    double beta = j["beta"].get<double>();
    auto get_vec = [&](const char* k) {
        const auto& a = j[k];
        if (!a.is_array() || static_cast<int>(a.size()) != n)
            throw ArgumentError(std::string("model JSON: '") + k + "' must be a length-n array");
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = a[static_cast<size_t>(i)].get<double>();
        return v;
    };
    Eigen::VectorXd u = get_vec("u"), h = get_vec("h");
    Eigen::MatrixXd J;
    const auto& mj = j["J"];
    if (!mj.is_array()) throw ArgumentError("model JSON: 'J' must be an array");
    if (!mj.empty()) {
        if (static_cast<int>(mj.size()) != n)
            throw ArgumentError("model JSON: 'J' must be empty or n rows");
        J.resize(n, n);
        for (int r = 0; r < n; ++r) {
            const auto& row = mj[static_cast<size_t>(r)];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw ArgumentError("model JSON: 'J' rows must have length n");
            for (int c = 0; c < n; ++c) J(r, c) = row[static_cast<size_t>(c)].get<double>();
        }
    }
    return IsingModel(n, beta, std::move(u), std::move(J), std::move(h));
}

std::string IsingModel::hash_hex() const {
    std::string s = to_json();
    std::uint64_t hh = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        hh ^= c;
        hh *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hh));
    return std::string(buf);
}

} // namespace spinlab

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spinlab::ensembles {

/// Undirected simple graph; edges normalized (i < j), sorted, unique.
struct Graph {
    long n = 0;
    std::vector<std::pair<long, long>> edges;
    std::vector<long> degree;

    /// Dense adjacency matrix; capped at 4096 vertices.
    Eigen::MatrixXd adjacency() const;

    /// y = A x straight off the edge list (any size).
    void multiply(const double* x, double* y) const;
};

/// Uniform-ish random d-regular graph via the configuration model with whole
/// pairing rejection; falls back to edge-switch randomization from a circulant
/// start when the rejection budget is exhausted (dense-degree regime).
Graph random_regular(long n, long d, std::uint64_t seed);

/// G(n, p): each of the C(n,2) edges present independently.
Graph erdos_renyi(long n, double p, std::uint64_t seed);

/// Symmetric disorder matrix, zero diagonal, upper-triangle entries i.i.d.
/// normal with mean -mu_mean/n and variance beta^2/n.
Eigen::MatrixXd sk_matrix(long n, double beta, double mu_mean, std::uint64_t seed);

struct SpectralReport {
    /// Descending.  Full spectrum up to 4096; above that only the three
    /// extremes {l1, l2, ln} are computed (full = false).
    Eigen::VectorXd eigenvalues;
    double spectral_width = 0.0; // l1 - ln
    double second_width = 0.0;   // l2 - ln
    Eigen::VectorXd top_vector;  // unit leading eigenvector, max-abs entry > 0
    double top_max_abs = 0.0;
    bool full = true;
};

SpectralReport spectrum(const Eigen::MatrixXd& M);
SpectralReport spectrum(const Graph& g);

/// -beta*A + shift*I = -(outlier_scale/n) u u^T + J with |u|_inf = 1 and J PSD.
struct AntiferroDecomposition {
    double outlier_scale = 0.0;
    Eigen::VectorXd u;
    Eigen::MatrixXd J;
    double j_opnorm = 0.0; // operator norm of J after the PSD shift
    double shift = 0.0;    // beta * max(l2, 0)
    double reconstruction_error = 0.0;
    bool degenerate_top = false; // l1 - l2 < 1e-8
};

AntiferroDecomposition decompose_antiferro(const Eigen::MatrixXd& A, double beta);

/// One admissibility rule: the inverse temperature is admissible iff
/// beta < threshold (strict); `binding` names the constraint achieving the min.
struct RegimeRule {
    std::string rule;
    std::string binding;
    double threshold = 0.0;
    bool pass = false;
};

struct RegimeReport {
    std::vector<RegimeRule> rules;
    bool all_pass = true;
};

struct EnsembleDescriptor {
    enum class Kind { Regular, ErdosRenyi, SK, Matrix };
    Kind kind = Kind::Matrix;
    long n = 0;
    long d = 0;               // Regular
    bool fixed_degree = true; // Regular: degree held fixed as n grows
    double p = 0.0;           // ErdosRenyi
    double c = 1.0;           // ErdosRenyi sharpness constant (non-explicit in theory)
    bool have_spectrum = false; // Regular: lambda2 / lambda_min measured
    double lambda2 = 0.0;
    double lambda_min = 0.0;
    double width = 0.0;       // Matrix: spectral width of the unscaled interaction
};

EnsembleDescriptor regular_descriptor(long n, long d, bool fixed_degree);
EnsembleDescriptor regular_descriptor(long n, long d, bool fixed_degree, double lambda2,
                                      double lambda_min);
EnsembleDescriptor er_descriptor(long n, double p, double c = 1.0);
EnsembleDescriptor sk_descriptor(long n);
EnsembleDescriptor matrix_descriptor(long n, double spectral_width);

RegimeReport regime_check(const EnsembleDescriptor& desc, double beta, double epsilon);

/// One "i j" pair per line, 0-indexed, i < j, sorted.
std::string edge_list_text(const Graph& g);

} // namespace spinlab::ensembles

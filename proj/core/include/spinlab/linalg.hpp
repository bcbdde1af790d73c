#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

namespace spinlab::linalg {

/// Eigenvalues of a symmetric matrix, ascending.
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& A);

/// Eigenvalues (ascending) and matching eigenvectors as columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eigensystem(const Eigen::MatrixXd& A);

/// Operator norm (largest |eigenvalue|) of a symmetric matrix.
double opnorm_sym(const Eigen::MatrixXd& A);

/// Largest eigenvalue of a symmetric operator restricted to the orthogonal
/// complement of `deflate` (pass a zero-length vector to skip deflation).
/// Lanczos with full reorthogonalization; `apply` maps in -> out, both of
/// length dim.
double lanczos_top(const std::function<void(const double*, double*)>& apply, std::size_t dim,
                   const Eigen::VectorXd& deflate, int max_iter, double tol, std::uint64_t seed);

/// Same iteration, but also assembles the unit Ritz vector for the leading
/// eigenvalue from the stored basis.
std::pair<double, Eigen::VectorXd>
lanczos_top_vector(const std::function<void(const double*, double*)>& apply, std::size_t dim,
                   const Eigen::VectorXd& deflate, int max_iter, double tol, std::uint64_t seed);

} // namespace spinlab::linalg

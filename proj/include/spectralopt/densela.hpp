#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "spectralopt/matrix.hpp"

namespace spectralopt::la {

// Eigendecomposition of a symmetric matrix. Values ascending, vectors stored
// as columns in matching order.
struct EigResult {
  std::vector<double> values;
  Matrix vectors;
};

// Thin SVD of an m x n input with m <= n: u is m x m orthogonal, sigma is
// descending and non-negative, v is n x m with orthonormal columns, and
// g = u * diag(sigma) * v^T.
struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

inline constexpr std::size_t kKronCapElements = std::size_t{4096} * std::size_t{4096};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double trace(const Matrix& a);

// Column-stacking: vec(a) has a(i,j) at position j*rows + i.
Matrix vec(const Matrix& a);

// Kronecker product; refuses results with more than cap_elements entries.
Matrix kron(const Matrix& a, const Matrix& b,
            std::size_t cap_elements = kKronCapElements);

// Cyclic Jacobi. Input must be square and symmetric to 1e-9 * ||s||_F
// (it is symmetrized internally); converges until the off-diagonal Frobenius
// mass is <= 1e-12 * ||s||_F or fails after max_sweeps.
EigResult sym_eig(const Matrix& s, int max_sweeps = 100);

// One-sided Jacobi on the columns of g^T. Requires rows <= cols; callers
// with tall matrices transpose around the call.
SvdResult svd(const Matrix& g, int max_sweeps = 60);

// Power iteration with a deterministic all-ones start vector. Input must be
// symmetric PSD. Stops when the eigen-residual falls below tol relative to
// the current estimate.
double lambda_max_power(const Matrix& s, double tol = 1e-6, int max_iters = 100000);

// SPD square root and inverse square root via eigendecomposition. The
// smallest eigenvalue must be >= eig_floor_rel * lambda_max; below the floor
// is an error rather than a silent regularization.
Matrix sqrt_spd(const Matrix& s, double eig_floor_rel = 1e-12);
Matrix sqrt_inv_spd(const Matrix& s, double eig_floor_rel = 1e-12);

}  // namespace spectralopt::la

#pragma once

#include <cstddef>
#include <vector>

#include "chyvae/errors.hpp"

namespace chyvae {

// Dense symmetric positive definite matrix, row-major, 64-bit entries.
// Houses every covariance-like quantity in the model (Sigma, Psi, Phi, ...).
struct SpdMatrix {
  int dim = 0;
  std::vector<double> a;  // dim*dim entries, row-major

  SpdMatrix() = default;
  explicit SpdMatrix(int p) : dim(p), a(static_cast<std::size_t>(p) * p, 0.0) {}
  SpdMatrix(int p, std::vector<double> entries);

  static SpdMatrix identity(int p);
  static SpdMatrix diagonal(const std::vector<double>& d);

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * dim + j]; }

  bool is_symmetric(double rel_tol = 1e-12) const;
  void symmetrize();
  SpdMatrix scaled(double c) const;
};

// Lower triangular matrix with strictly positive diagonal. Full row-major
// storage; entries above the diagonal are exactly zero.
struct LowerTriangular {
  int dim = 0;
  std::vector<double> a;

  LowerTriangular() = default;
  explicit LowerTriangular(int p) : dim(p), a(static_cast<std::size_t>(p) * p, 0.0) {}

  static LowerTriangular identity(int p);

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * dim + j]; }

  // L * L^T as a dense SPD matrix.
  SpdMatrix gram() const;
};

// Lower Cholesky factor of s. Reads only the lower triangle of s.
// Throws NotPositiveDefinite when a pivot is <= 0.
LowerTriangular cholesky(const SpdMatrix& s);

// log|s| = 2 * sum_i log K_ii of the Cholesky factor K.
double log_det_spd(const SpdMatrix& s);

// Inverse via Cholesky; result is symmetrized exactly.
SpdMatrix spd_inverse(const SpdMatrix& s);

LowerTriangular lower_tri_inverse(const LowerTriangular& l);

// log|Psi + z z^T| through the matrix-determinant lemma:
// logdet_psi + log(1 + z^T Psi^{-1} z). No factorization of the rank-1 update.
double rank1_logdet(double logdet_psi, const SpdMatrix& psi_inv, const std::vector<double>& z);

// (Psi + z z^T)^{-1} by Sherman-Morrison:
// Psi^{-1} - (Psi^{-1} z)(Psi^{-1} z)^T / (1 + z^T Psi^{-1} z).
SpdMatrix rank1_inverse(const SpdMatrix& psi_inv, const std::vector<double>& z);

// Shared dense kernels.
double dot(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> spd_matvec(const SpdMatrix& m, const std::vector<double>& x);
std::vector<double> lower_tri_matvec(const LowerTriangular& l, const std::vector<double>& x);
double trace_product(const SpdMatrix& a, const SpdMatrix& b);  // Tr(a b), both symmetric
SpdMatrix spd_add(const SpdMatrix& a, const SpdMatrix& b);
SpdMatrix outer_product(const std::vector<double>& z);  // z z^T

double frobenius_distance(const SpdMatrix& a, const SpdMatrix& b);

}  // namespace chyvae

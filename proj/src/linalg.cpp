#include "chyvae/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace chyvae {

SpdMatrix::SpdMatrix(int p, std::vector<double> entries) : dim(p), a(std::move(entries)) {
  if (a.size() != static_cast<std::size_t>(p) * p) {
    throw DimensionMismatch("SpdMatrix: entry count does not match dim*dim");
  }
}

SpdMatrix SpdMatrix::identity(int p) {
  SpdMatrix m(p);
  for (int i = 0; i < p; ++i) m(i, i) = 1.0;
  return m;
}

SpdMatrix SpdMatrix::diagonal(const std::vector<double>& d) {
  SpdMatrix m(static_cast<int>(d.size()));
  for (int i = 0; i < m.dim; ++i) m(i, i) = d[i];
  return m;
}

bool SpdMatrix::is_symmetric(double rel_tol) const {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      if (std::abs((*this)(i, j) - (*this)(j, i)) > rel_tol * scale) return false;
    }
  }
  return true;
}

void SpdMatrix::symmetrize() {
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
      (*this)(i, j) = v;
      (*this)(j, i) = v;
    }
  }
}

SpdMatrix SpdMatrix::scaled(double c) const {
  SpdMatrix m(dim);
  for (std::size_t k = 0; k < a.size(); ++k) m.a[k] = c * a[k];
  return m;
}

LowerTriangular LowerTriangular::identity(int p) {
  LowerTriangular l(p);
  for (int i = 0; i < p; ++i) l(i, i) = 1.0;
  return l;
}

SpdMatrix LowerTriangular::gram() const {
  SpdMatrix s(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int k = 0; k <= j; ++k) acc += (*this)(i, k) * (*this)(j, k);
      s(i, j) = acc;
      s(j, i) = acc;
    }
  }
  return s;
}

LowerTriangular cholesky(const SpdMatrix& s) {
  const int p = s.dim;
  if (p < 1) throw DimensionMismatch("cholesky: dim must be >= 1");
  LowerTriangular l(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = s(i, j);
      for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      if (i == j) {
        if (acc <= 0.0) throw NotPositiveDefinite("cholesky: pivot <= 0 at row " + std::to_string(i));
        l(i, i) = std::sqrt(acc);
      } else {
        l(i, j) = acc / l(j, j);
      }
    }
  }
  return l;
}

double log_det_spd(const SpdMatrix& s) {
  LowerTriangular k = cholesky(s);
  double acc = 0.0;
  for (int i = 0; i < k.dim; ++i) acc += std::log(k(i, i));
  return 2.0 * acc;
}

LowerTriangular lower_tri_inverse(const LowerTriangular& l) {
  const int p = l.dim;
  LowerTriangular inv(p);
  for (int i = 0; i < p; ++i) {
    inv(i, i) = 1.0 / l(i, i);
    for (int j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int k = j; k < i; ++k) acc += l(i, k) * inv(k, j);
      inv(i, j) = -acc / l(i, i);
    }
  }
  return inv;
}

SpdMatrix spd_inverse(const SpdMatrix& s) {
  LowerTriangular linv = lower_tri_inverse(cholesky(s));
  // s^{-1} = L^{-T} L^{-1}
  const int p = s.dim;
  SpdMatrix out(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int k = i; k < p; ++k) acc += linv(k, i) * linv(k, j);
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

double rank1_logdet(double logdet_psi, const SpdMatrix& psi_inv, const std::vector<double>& z) {
  std::vector<double> u = spd_matvec(psi_inv, z);
  return logdet_psi + std::log1p(dot(z, u));
}

SpdMatrix rank1_inverse(const SpdMatrix& psi_inv, const std::vector<double>& z) {
  const int p = psi_inv.dim;
  std::vector<double> u = spd_matvec(psi_inv, z);
  double denom = 1.0 + dot(z, u);
  SpdMatrix out = psi_inv;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      out(i, j) -= u[i] * u[j] / denom;
    }
  }
  return out;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

std::vector<double> spd_matvec(const SpdMatrix& m, const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(m.dim)) throw DimensionMismatch("spd_matvec: length mismatch");
  std::vector<double> y(m.dim, 0.0);
  for (int i = 0; i < m.dim; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m.dim; ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> lower_tri_matvec(const LowerTriangular& l, const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(l.dim)) throw DimensionMismatch("lower_tri_matvec: length mismatch");
  std::vector<double> y(l.dim, 0.0);
  for (int i = 0; i < l.dim; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += l(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

double trace_product(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim != b.dim) throw DimensionMismatch("trace_product: dim mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.a.size(); ++k) acc += a.a[k] * b.a[k];
  return acc;
}

SpdMatrix spd_add(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim != b.dim) throw DimensionMismatch("spd_add: dim mismatch");
  SpdMatrix out = a;
  for (std::size_t k = 0; k < out.a.size(); ++k) out.a[k] += b.a[k];
  return out;
}

SpdMatrix outer_product(const std::vector<double>& z) {
  const int p = static_cast<int>(z.size());
  SpdMatrix out(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) out(i, j) = z[i] * z[j];
  return out;
}

double frobenius_distance(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim != b.dim) throw DimensionMismatch("frobenius_distance: dim mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.a.size(); ++k) {
    double d = a.a[k] - b.a[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace chyvae

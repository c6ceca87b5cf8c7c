#include "chyvae/distributions.hpp"

#include <cmath>
#include <string>

namespace chyvae {

namespace {
constexpr double kLogPi = 1.1447298858494001741434273513531;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kLn2 = 0.69314718055994530941723212145818;
}  // namespace

HyperpriorParams::HyperpriorParams(SpdMatrix psi_, double nu_) : psi(std::move(psi_)), nu(nu_) {
  const int p = psi.dim;
  if (nu <= p - 1) throw DomainError("HyperpriorParams: requires nu > p - 1");
  psi_inv = spd_inverse(psi);
  logdet_psi = log_det_spd(psi);
}

HyperpriorParams HyperpriorParams::from_sigma0(const SpdMatrix& sigma0, double nu) {
  const int p = sigma0.dim;
  if (nu <= p + 1) throw DomainError("HyperpriorParams::from_sigma0: requires nu > p + 1");
  return HyperpriorParams(sigma0.scaled(nu - p - 1), nu);
}

double digamma(double x) {
  if (x <= 0.0) throw DomainError("digamma: requires x > 0");
  double acc = 0.0;
  // Shift into the asymptotic regime, then apply the series in 1/x^2.
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  acc += std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return acc;
}

double mv_gamma_ln(int p, double a) {
  if (p < 1) throw DomainError("mv_gamma_ln: p must be >= 1");
  if (a <= 0.5 * (p - 1)) throw DomainError("mv_gamma_ln: requires a > (p-1)/2");
  double acc = 0.25 * p * (p - 1) * kLogPi;
  for (int j = 1; j <= p; ++j) acc += std::lgamma(a + 0.5 * (1 - j));
  return acc;
}

double mv_digamma(int p, double a) {
  if (p < 1) throw DomainError("mv_digamma: p must be >= 1");
  if (a <= 0.5 * (p - 1)) throw DomainError("mv_digamma: requires a > (p-1)/2");
  double acc = 0.0;
  for (int j = 1; j <= p; ++j) acc += digamma(a + 0.5 * (1 - j));
  return acc;
}

std::vector<double> gaussian_reparam(const std::vector<double>& mu, const LowerTriangular& l,
                                     const std::vector<double>& eps) {
  if (mu.size() != static_cast<std::size_t>(l.dim) || eps.size() != mu.size()) {
    throw DimensionMismatch("gaussian_reparam: dims disagree");
  }
  std::vector<double> z = lower_tri_matvec(l, eps);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += mu[i];
  return z;
}

double gaussian_kl(const std::vector<double>& mu1, const SpdMatrix& sigma1,
                   const std::vector<double>& mu0, const SpdMatrix& sigma0) {
  const int p = sigma1.dim;
  if (sigma0.dim != p || mu1.size() != static_cast<std::size_t>(p) || mu0.size() != mu1.size()) {
    throw DimensionMismatch("gaussian_kl: dims disagree");
  }
  double logdet1 = log_det_spd(sigma1);
  double logdet0 = log_det_spd(sigma0);
  SpdMatrix prec0 = spd_inverse(sigma0);
  double trace = trace_product(prec0, sigma1);
  std::vector<double> d(p);
  for (int i = 0; i < p; ++i) d[i] = mu0[i] - mu1[i];
  double quad = dot(d, spd_matvec(prec0, d));
  return 0.5 * (logdet0 - logdet1 - p + trace + quad);
}

double mvn_log_pdf(const std::vector<double>& x, const std::vector<double>& mu,
                   const SpdMatrix& sigma) {
  const int p = sigma.dim;
  if (x.size() != static_cast<std::size_t>(p) || mu.size() != x.size()) {
    throw DimensionMismatch("mvn_log_pdf: dims disagree");
  }
  LowerTriangular lchol = cholesky(sigma);
  double logdet = 0.0;
  for (int i = 0; i < p; ++i) logdet += std::log(lchol(i, i));
  logdet *= 2.0;
  // Solve L y = (x - mu); the quadratic form is |y|^2.
  std::vector<double> y(p);
  for (int i = 0; i < p; ++i) {
    double acc = x[i] - mu[i];
    for (int j = 0; j < i; ++j) acc -= lchol(i, j) * y[j];
    y[i] = acc / lchol(i, i);
  }
  double quad = dot(y, y);
  return -0.5 * (p * kLog2Pi + logdet + quad);
}

double iw_log_pdf(const SpdMatrix& x, const HyperpriorParams& hp) {
  const int p = hp.dim();
  if (x.dim != p) throw DimensionMismatch("iw_log_pdf: dims disagree");
  double logdet_x = log_det_spd(x);
  SpdMatrix x_inv = spd_inverse(x);
  double tr = trace_product(hp.psi, x_inv);
  return 0.5 * hp.nu * hp.logdet_psi - 0.5 * hp.nu * p * kLn2 - mv_gamma_ln(p, 0.5 * hp.nu) -
         0.5 * (hp.nu + p + 1) * logdet_x - 0.5 * tr;
}

SpdMatrix iw_mean(const HyperpriorParams& hp) {
  if (hp.nu <= hp.dim() + 1) throw DomainError("iw_mean: undefined for nu <= p + 1");
  return hp.psi.scaled(1.0 / (hp.nu - hp.dim() - 1));
}

double iw_expected_logdet(const HyperpriorParams& hp) {
  const int p = hp.dim();
  return hp.logdet_psi - p * kLn2 - mv_digamma(p, 0.5 * hp.nu);
}

SpdMatrix iw_expected_inverse(const HyperpriorParams& hp) {
  return hp.psi_inv.scaled(hp.nu);
}

double iw_kl(const SpdMatrix& q_phi, double q_lambda, const HyperpriorParams& hp) {
  const int p = hp.dim();
  if (q_phi.dim != p) throw DimensionMismatch("iw_kl: dims disagree");
  if (q_lambda <= p - 1) throw DomainError("iw_kl: requires lambda > p - 1");
  double logdet_phi = log_det_spd(q_phi);
  SpdMatrix phi_inv = spd_inverse(q_phi);
  double tr = trace_product(hp.psi, phi_inv);
  return -0.5 * hp.nu * (hp.logdet_psi - logdet_phi) + 0.5 * q_lambda * (tr - p) +
         mv_gamma_ln(p, 0.5 * hp.nu) - mv_gamma_ln(p, 0.5 * q_lambda) +
         0.5 * (q_lambda - hp.nu) * mv_digamma(p, 0.5 * q_lambda);
}

double chi_square_sample(double k, RngStream& rng) {
  if (k <= 0.0) throw DomainError("chi_square_sample: requires k > 0");
  return rng.next_gamma(0.5 * k, 2.0);
}

SpdMatrix iw_sample_bartlett(const HyperpriorParams& hp, RngStream& rng) {
  const int p = hp.dim();
  // Draw order is fixed row by row: off-diagonals first, then the diagonal.
  LowerTriangular b(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) b(i, j) = rng.next_gaussian();
    b(i, i) = std::sqrt(chi_square_sample(hp.nu - i, rng));
  }
  LowerTriangular v = cholesky(hp.psi_inv);
  // m = V * B is lower triangular; the Wishart draw is m m^T, and the
  // inverse-Wishart draw is its inverse (m^{-1})^T (m^{-1}).
  LowerTriangular m(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int k = j; k <= i; ++k) acc += v(i, k) * b(k, j);
      m(i, j) = acc;
    }
  }
  LowerTriangular minv = lower_tri_inverse(m);
  SpdMatrix out(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int k = i; k < p; ++k) acc += minv(k, i) * minv(k, j);
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

PosteriorIwParams conjugate_posterior(const HyperpriorParams& hp, const std::vector<double>& z) {
  if (z.size() != static_cast<std::size_t>(hp.dim())) {
    throw DimensionMismatch("conjugate_posterior: dims disagree");
  }
  PosteriorIwParams post;
  post.phi_logdet = rank1_logdet(hp.logdet_psi, hp.psi_inv, z);
  post.phi_inv = rank1_inverse(hp.psi_inv, z);
  post.lambda = hp.nu + 1.0;
  return post;
}

}  // namespace chyvae

#pragma once

#include <vector>

#include "chyvae/linalg.hpp"
#include "chyvae/rng.hpp"

namespace chyvae {

// Inverse-Wishart scale/DoF pair with the two derived quantities every loss
// term needs. psi_inv and logdet_psi are computed once at construction.
struct HyperpriorParams {
  SpdMatrix psi;
  double nu = 0.0;
  SpdMatrix psi_inv;
  double logdet_psi = 0.0;

  HyperpriorParams() = default;
  HyperpriorParams(SpdMatrix psi_, double nu_);  // requires nu > p - 1

  // Mean-matching construction: Psi = (nu - p - 1) * Sigma0, so that the prior
  // mean equals the desired covariance Sigma0. Requires nu > p + 1.
  static HyperpriorParams from_sigma0(const SpdMatrix& sigma0, double nu);

  int dim() const { return psi.dim; }
};

// Conjugate posterior over the latent covariance given one code z:
// W^{-1}(Phi, lambda) with Phi = Psi + z z^T and lambda = nu + 1. Only the
// forms the loss consumes are stored; the rank-1 identities produce them
// without ever factorizing Phi.
struct PosteriorIwParams {
  double phi_logdet = 0.0;
  SpdMatrix phi_inv;
  double lambda = 0.0;
};

// Scalar digamma, accurate to ~1e-12 for x > 0.
double digamma(double x);

// log of the multivariate gamma function:
// log Gamma_p(a) = p(p-1)/4 * log(pi) + sum_{j=1..p} log Gamma(a + (1-j)/2).
double mv_gamma_ln(int p, double a);

// Multivariate digamma: psi_p(a) = sum_{j=1..p} psi(a + (1-j)/2).
double mv_digamma(int p, double a);

// z = mu + L * eps.
std::vector<double> gaussian_reparam(const std::vector<double>& mu, const LowerTriangular& l,
                                     const std::vector<double>& eps);

// KL( N(mu1, sigma1) || N(mu0, sigma0) ).
double gaussian_kl(const std::vector<double>& mu1, const SpdMatrix& sigma1,
                   const std::vector<double>& mu0, const SpdMatrix& sigma0);

double mvn_log_pdf(const std::vector<double>& x, const std::vector<double>& mu,
                   const SpdMatrix& sigma);

// log density of W^{-1}(psi, nu) at X.
double iw_log_pdf(const SpdMatrix& x, const HyperpriorParams& hp);

// Psi / (nu - p - 1); requires nu > p + 1.
SpdMatrix iw_mean(const HyperpriorParams& hp);

// E[log|X|] = log(|Psi| / 2^p) - psi_p(nu/2) for X ~ W^{-1}(Psi, nu).
double iw_expected_logdet(const HyperpriorParams& hp);

// E[X^{-1}] = nu * Psi^{-1}.
SpdMatrix iw_expected_inverse(const HyperpriorParams& hp);

// KL( W^{-1}(phi, lambda) || W^{-1}(hp.psi, hp.nu) ).
double iw_kl(const SpdMatrix& q_phi, double q_lambda, const HyperpriorParams& hp);

// Chi-square draw with k degrees of freedom (k real, > 0).
double chi_square_sample(double k, RngStream& rng);

// Bartlett construction: lower-triangular B with B_ii^2 ~ chi2(nu - i + 1)
// and N(0,1) below the diagonal, V = chol(Psi^{-1}); then V B B^T V^T is
// Wishart(Psi^{-1}, nu) and its inverse is the returned W^{-1}(Psi, nu) draw.
SpdMatrix iw_sample_bartlett(const HyperpriorParams& hp, RngStream& rng);

// Posterior parameters for Sigma | z via the rank-1 identities.
PosteriorIwParams conjugate_posterior(const HyperpriorParams& hp, const std::vector<double>& z);

}  // namespace chyvae

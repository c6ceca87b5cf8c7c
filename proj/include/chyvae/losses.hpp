#pragma once

#include <vector>

#include "chyvae/autodiff.hpp"
#include "chyvae/distributions.hpp"
#include "chyvae/nn.hpp"

namespace chyvae::losses {

// Per-batch mean terms of the training objective. The training form drops
// every constant: total = recon - gaussian_term - iw_term.
struct ElboBreakdown {
  double recon = 0.0;
  double gaussian_term = 0.0;
  double iw_term = 0.0;
  double total = 0.0;
};

// sum_j x_j log xhat_j + (1 - x_j) log(1 - xhat_j); a log-likelihood, <= 0.
double bernoulli_recon(const std::vector<double>& x, const std::vector<double>& x_hat);

// Graph form; x is data (constant), x_hat a var of the same length (or a
// [B, D] batch). Returns the scalar sum over all entries.
ad::Var bernoulli_recon_graph(ad::Tape& tape, const std::vector<double>& x, ad::Var x_hat);

// Per-example latent terms of the closed-form objective, built through the
// rank-1 identities so nothing on the tape factorizes a matrix:
//   gaussian = 1/2 [ -log|Sigma~| + log|Phi| + lambda Tr(Phi^{-1}(Sigma~ + mu mu^T)) ]
//   iw       = nu/2 log|Phi| + lambda/2 Tr(Psi Phi^{-1})
// with Phi = Psi + z z^T, lambda = nu + 1. log|Sigma~| is taken from the
// Cholesky diagonal (2 sum log L_ii, jitter ignored); the trace uses the
// jittered Sigma~ = L L^T + 1e-4 I.
struct LatentTermVars {
  ad::Var gaussian_term;
  ad::Var iw_term;
};
LatentTermVars chyvae_latent_terms_graph(ad::Tape& tape, ad::Var mu, ad::Var chol, ad::Var z,
                                         const HyperpriorParams& hp);

struct ChyvaeTermVars {
  ad::Var recon;
  ad::Var gaussian_term;
  ad::Var iw_term;
  ad::Var total;  // recon - gaussian_term - iw_term
};
ChyvaeTermVars chyvae_loss_graph(ad::Tape& tape, const std::vector<double>& x, ad::Var mu,
                                 ad::Var chol, ad::Var z, ad::Var x_hat,
                                 const HyperpriorParams& hp);

// Value-level objective for one example; evaluates the same graph the
// trainer differentiates.
ElboBreakdown chyvae_loss(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                          const std::vector<double>& z, const HyperpriorParams& hp,
                          const std::vector<double>& x_hat);

// Constant-inclusive validation form next to its Monte-Carlo cross-checks.
// term2 restores the constants of the expected Gaussian KL; term3 is the
// full inverse-Wishart KL. The MC columns average gaussian_kl and the IW
// log-density ratio over Bartlett draws from W^{-1}(Phi, lambda).
struct ElboExact {
  ElboBreakdown training;
  double term2_analytic = 0.0;
  double term3_analytic = 0.0;
  double term2_mc = 0.0;
  double term2_se = 0.0;
  double term3_mc = 0.0;
  double term3_se = 0.0;
  double total_exact = 0.0;  // recon - term2_analytic - term3_analytic
};
ElboExact chyvae_elbo_exact(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                            const std::vector<double>& z, const HyperpriorParams& hp,
                            const std::vector<double>& x_hat, int mc_samples, RngStream& rng);

// Closed-form KL( N(mu, diag(sigma^2)) || N(0, I) ) for the beta-VAE path;
// sigma is the [p] softplus head, no jitter.
ad::Var beta_kl_graph(ad::Tape& tape, ad::Var mu, ad::Var sigma);

// recon - beta * KL, reported with gaussian_term = beta * KL and iw_term = 0.
ElboBreakdown beta_vae_loss(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                            const std::vector<double>& z, double beta,
                            const std::vector<double>& x_hat);

}  // namespace chyvae::losses

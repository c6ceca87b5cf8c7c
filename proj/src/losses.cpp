#include "chyvae/losses.hpp"

#include <cmath>

namespace chyvae::losses {

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;

ad::Var reciprocal_positive(ad::Tape& tape, ad::Var s) {
  // 1/s for s >= 1, staying inside the primitive set
  return tape.exp(tape.scalar_mul(tape.log(s), -1.0));
}

ad::Tensor jitter_matrix(int p) {
  ad::Tensor t = ad::Tensor::zeros({p, p});
  for (int i = 0; i < p; ++i) t.v[i * p + i] = nn::kSigmaJitter;
  return t;
}

struct Welford {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

}  // namespace

double bernoulli_recon(const std::vector<double>& x, const std::vector<double>& x_hat) {
  if (x.size() != x_hat.size()) throw DimensionMismatch("bernoulli_recon: length mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x_hat[j] <= 0.0 || x_hat[j] >= 1.0) {
      throw DomainError("bernoulli_recon: x_hat must lie strictly inside (0,1)");
    }
    acc += x[j] * std::log(x_hat[j]) + (1.0 - x[j]) * std::log(1.0 - x_hat[j]);
  }
  return acc;
}

ad::Var bernoulli_recon_graph(ad::Tape& tape, const std::vector<double>& x, ad::Var x_hat) {
  if (static_cast<int>(x.size()) != x_hat.value().size()) {
    throw DimensionMismatch("bernoulli_recon_graph: length mismatch");
  }
  ad::Tensor xc(x_hat.value().shape, x);
  ad::Var xv = tape.constant(xc);
  std::vector<double> one_minus(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) one_minus[j] = 1.0 - x[j];
  ad::Var xv1 = tape.constant(ad::Tensor(x_hat.value().shape, std::move(one_minus)));

  ad::Var pos = tape.elementwise_mul(xv, tape.log(x_hat));
  ad::Var neg = tape.elementwise_mul(xv1, tape.log(tape.scalar_add(tape.scalar_mul(x_hat, -1.0), 1.0)));
  return tape.sum(tape.add(pos, neg));
}

LatentTermVars chyvae_latent_terms_graph(ad::Tape& tape, ad::Var mu, ad::Var chol, ad::Var z,
                                         const HyperpriorParams& hp) {
  const int p = hp.dim();
  const double lambda = hp.nu + 1.0;

  ad::Var psi_inv = tape.constant(ad::Tensor::matrix(p, p, hp.psi_inv.a));
  ad::Var sigma = tape.add(tape.matmul(chol, tape.transpose(chol)), tape.constant(jitter_matrix(p)));

  // rank-1 machinery: u = Psi^{-1} z, s = 1 + z^T u
  ad::Var u = tape.matvec(psi_inv, z);
  ad::Var s = tape.scalar_add(tape.dot(z, u), 1.0);
  ad::Var log_s = tape.log(s);
  ad::Var inv_s = reciprocal_positive(tape, s);

  ad::Var logdet_sigma = tape.scalar_mul(tape.sum(tape.log(tape.diag_part(chol))), 2.0);
  ad::Var phi_logdet = tape.scalar_add(log_s, hp.logdet_psi);

  // Tr((Sigma + mu mu^T) Phi^{-1}) with Phi^{-1} = Psi^{-1} - u u^T / s
  ad::Var tr_sigma_psi_inv = tape.sum(tape.elementwise_mul(sigma, psi_inv));
  ad::Var quad_mu = tape.dot(mu, tape.matvec(psi_inv, mu));
  ad::Var u_sigma_u = tape.dot(u, tape.matvec(sigma, u));
  ad::Var u_mu = tape.dot(u, mu);
  ad::Var correction = tape.elementwise_mul(inv_s, tape.add(u_sigma_u, tape.elementwise_mul(u_mu, u_mu)));
  ad::Var tr_phi = tape.sub(tape.add(tr_sigma_psi_inv, quad_mu), correction);

  // Tr(Psi Phi^{-1}) = p - (s-1)/s = (p-1) + 1/s
  ad::Var tr_psi_phi = tape.scalar_add(inv_s, static_cast<double>(p) - 1.0);

  LatentTermVars out;
  out.gaussian_term = tape.scalar_mul(
      tape.add(tape.sub(phi_logdet, logdet_sigma), tape.scalar_mul(tr_phi, lambda)), 0.5);
  out.iw_term = tape.add(tape.scalar_mul(phi_logdet, 0.5 * hp.nu), tape.scalar_mul(tr_psi_phi, 0.5 * lambda));
  return out;
}

ChyvaeTermVars chyvae_loss_graph(ad::Tape& tape, const std::vector<double>& x, ad::Var mu,
                                 ad::Var chol, ad::Var z, ad::Var x_hat,
                                 const HyperpriorParams& hp) {
  ChyvaeTermVars out;
  out.recon = bernoulli_recon_graph(tape, x, x_hat);
  LatentTermVars latent = chyvae_latent_terms_graph(tape, mu, chol, z, hp);
  out.gaussian_term = latent.gaussian_term;
  out.iw_term = latent.iw_term;
  out.total = tape.sub(tape.sub(out.recon, out.gaussian_term), out.iw_term);
  return out;
}

ElboBreakdown chyvae_loss(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                          const std::vector<double>& z, const HyperpriorParams& hp,
                          const std::vector<double>& x_hat) {
  const int p = hp.dim();
  ad::Tape tape;
  ad::Var mu = tape.constant(ad::Tensor::vector(posterior.mu));
  ad::Var chol = tape.constant(ad::Tensor::matrix(p, p, posterior.chol.a));
  ad::Var zv = tape.constant(ad::Tensor::vector(z));
  ad::Var xh = tape.constant(ad::Tensor::vector(x_hat));
  ChyvaeTermVars terms = chyvae_loss_graph(tape, x, mu, chol, zv, xh, hp);

  ElboBreakdown out;
  out.recon = terms.recon.value().item();
  out.gaussian_term = terms.gaussian_term.value().item();
  out.iw_term = terms.iw_term.value().item();
  out.total = terms.total.value().item();
  return out;
}

ElboExact chyvae_elbo_exact(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                            const std::vector<double>& z, const HyperpriorParams& hp,
                            const std::vector<double>& x_hat, int mc_samples, RngStream& rng) {
  if (mc_samples < 2) throw DomainError("chyvae_elbo_exact: mc_samples must be >= 2");
  const int p = hp.dim();
  const double lambda = hp.nu + 1.0;

  ElboExact out;
  out.training = chyvae_loss(x, posterior, z, hp, x_hat);

  double term2_const = 0.5 * (-p - p * kLn2 - mv_digamma(p, 0.5 * lambda));
  out.term2_analytic = out.training.gaussian_term + term2_const;

  SpdMatrix phi = spd_add(hp.psi, outer_product(z));
  out.term3_analytic = iw_kl(phi, lambda, hp);

  HyperpriorParams post(phi, lambda);
  std::vector<double> zero(p, 0.0);
  Welford w2, w3;
  for (int s = 0; s < mc_samples; ++s) {
    SpdMatrix sigma = iw_sample_bartlett(post, rng);
    w2.add(gaussian_kl(posterior.mu, posterior.sigma, zero, sigma));
    w3.add(iw_log_pdf(sigma, post) - iw_log_pdf(sigma, hp));
  }
  out.term2_mc = w2.mean;
  out.term2_se = w2.se();
  out.term3_mc = w3.mean;
  out.term3_se = w3.se();
  out.total_exact = out.training.recon - out.term2_analytic - out.term3_analytic;
  return out;
}

ad::Var beta_kl_graph(ad::Tape& tape, ad::Var mu, ad::Var sigma) {
  ad::Var s2 = tape.elementwise_mul(sigma, sigma);
  ad::Var m2 = tape.elementwise_mul(mu, mu);
  ad::Var log_s2 = tape.scalar_mul(tape.log(sigma), 2.0);
  ad::Var inner = tape.sub(tape.add(s2, m2), tape.scalar_add(log_s2, 1.0));
  return tape.scalar_mul(tape.sum(inner), 0.5);
}

ElboBreakdown beta_vae_loss(const std::vector<double>& x, const nn::LatentPosterior& posterior,
                            const std::vector<double>& z, double beta,
                            const std::vector<double>& x_hat) {
  (void)z;  // the closed-form KL needs no sample
  const int p = posterior.chol.dim;
  std::vector<double> sigma_diag(p);
  for (int i = 0; i < p; ++i) {
    if (posterior.chol(i, i) <= 0.0) throw DomainError("beta_vae_loss: sigma diagonal must be > 0");
    sigma_diag[i] = posterior.chol(i, i);
  }
  ad::Tape tape;
  ad::Var mu = tape.constant(ad::Tensor::vector(posterior.mu));
  ad::Var sigma = tape.constant(ad::Tensor::vector(sigma_diag));
  double kl = beta_kl_graph(tape, mu, sigma).value().item();

  ElboBreakdown out;
  out.recon = bernoulli_recon(x, x_hat);
  out.gaussian_term = beta * kl;
  out.iw_term = 0.0;
  out.total = out.recon - out.gaussian_term - out.iw_term;
  return out;
}

}  // namespace chyvae::losses

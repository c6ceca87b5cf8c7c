#include "chyvae/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chyvae/losses.hpp"
#include "chyvae/metric.hpp"
#include "chyvae/trainer.hpp"

namespace chyvae::selfcheck {

namespace {

LowerTriangular random_lower(int p, RngStream& rng) {
  LowerTriangular l(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) l(i, j) = rng.next_gaussian();
    l(i, i) = 0.5 + rng.next_double();
  }
  return l;
}

SpdMatrix random_spd(int p, RngStream& rng) {
  SpdMatrix s = random_lower(p, rng).gram();
  for (int i = 0; i < p; ++i) s(i, i) += 0.5;
  return s;
}

std::vector<double> random_vec(int p, RngStream& rng) {
  std::vector<double> v(p);
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

CheckResult check_cholesky_roundtrip(int reps) {
  RngStream rng(101);
  double worst = 0.0;
  for (int r = 0; r < reps; ++r) {
    int p = 2 + static_cast<int>(rng.next_below(7));
    SpdMatrix s = random_spd(p, rng);
    SpdMatrix back = cholesky(s).gram();
    double scale = frobenius_distance(s, SpdMatrix(p));
    worst = std::max(worst, frobenius_distance(back, s) / scale);
  }
  return {"cholesky_roundtrip", worst < 1e-10, "worst relative error " + fmt(worst)};
}

CheckResult check_rank1_identities(int reps) {
  RngStream rng(102);
  double worst = 0.0;
  for (int r = 0; r < reps; ++r) {
    int p = 2 + static_cast<int>(rng.next_below(9));
    SpdMatrix psi = random_spd(p, rng);
    auto z = random_vec(p, rng);
    SpdMatrix phi = spd_add(psi, outer_product(z));
    double d1 = std::abs(rank1_logdet(log_det_spd(psi), spd_inverse(psi), z) - log_det_spd(phi));
    double d2 = frobenius_distance(rank1_inverse(spd_inverse(psi), z), spd_inverse(phi));
    worst = std::max({worst, d1, d2});
  }
  return {"rank1_identities", worst < 1e-9, "worst deviation from dense path " + fmt(worst)};
}

CheckResult check_mv_digamma_fd() {
  double worst = 0.0;
  for (int p : {1, 2, 4, 6}) {
    for (double a : {0.7 * p, 1.5 * p, 6.0 + p}) {
      if (a <= 0.5 * (p - 1) + 0.1) continue;
      double h = 1e-5;
      double fd = (mv_gamma_ln(p, a + h) - mv_gamma_ln(p, a - h)) / (2 * h);
      worst = std::max(worst, std::abs(mv_digamma(p, a) - fd));
    }
  }
  return {"mv_digamma_vs_fd", worst < 1e-6, "worst |analytic - fd| " + fmt(worst)};
}

CheckResult check_iw_pdf_quadrature() {
  HyperpriorParams hp(SpdMatrix(1, {2.0}), 5.0);
  const int n = 8000;
  const double lo = -14.0, hi = 14.0;
  double h = (hi - lo) / n, acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    double x = std::exp(lo + i * h);
    double f = std::exp(iw_log_pdf(SpdMatrix(1, {x}), hp)) * x;
    acc += (i == 0 || i == n) ? 0.5 * f : f;
  }
  acc *= h;
  return {"iw_pdf_normalization", std::abs(acc - 1.0) < 1e-4, "integral " + fmt(acc)};
}

CheckResult check_gaussian_kl_mc(int samples) {
  RngStream rng(103);
  const int p = 3;
  LowerTriangular l1 = random_lower(p, rng);
  SpdMatrix sigma1 = l1.gram();
  SpdMatrix sigma0 = random_spd(p, rng);
  auto mu1 = random_vec(p, rng);
  auto mu0 = random_vec(p, rng);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    auto x = gaussian_reparam(mu1, l1, random_vec(p, rng));
    double v = mvn_log_pdf(x, mu1, sigma1) - mvn_log_pdf(x, mu0, sigma0);
    s += v;
    s2 += v * v;
  }
  double mean = s / samples;
  double se = std::sqrt((s2 / samples - mean * mean) / (samples - 1.0));
  double analytic = gaussian_kl(mu1, sigma1, mu0, sigma0);
  double dev = std::abs(analytic - mean);
  return {"gaussian_kl_vs_mc", dev < 3.0 * se,
          "analytic " + fmt(analytic) + ", mc " + fmt(mean) + " +- " + fmt(se)};
}

CheckResult check_iw_kl_scalar() {
  HyperpriorParams hp(SpdMatrix(1, {2.0}), 6.0);
  SpdMatrix phi(1, {3.5});
  double lambda = 7.5;
  double a1 = lambda / 2, b1 = 3.5 / 2, a0 = 3.0, b0 = 1.0;
  double expected = a1 * std::log(b1) - a0 * std::log(b0) - std::lgamma(a1) + std::lgamma(a0) +
                    (a0 - a1) * (std::log(b1) - digamma(a1)) + (b0 - b1) * a1 / b1;
  double dev = std::abs(iw_kl(phi, lambda, hp) - expected);
  return {"iw_kl_scalar_inverse_gamma", dev < 1e-10, "|deviation| " + fmt(dev)};
}

CheckResult check_iw_kl_mc(int samples) {
  RngStream rng(104);
  const int p = 3;
  HyperpriorParams hp(random_spd(p, rng), 9.0);
  auto z = random_vec(p, rng);
  SpdMatrix phi = spd_add(hp.psi, outer_product(z));
  HyperpriorParams q(phi, hp.nu + 1.0);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    SpdMatrix sigma = iw_sample_bartlett(q, rng);
    double v = iw_log_pdf(sigma, q) - iw_log_pdf(sigma, hp);
    s += v;
    s2 += v * v;
  }
  double mean = s / samples;
  double se = std::sqrt((s2 / samples - mean * mean) / (samples - 1.0));
  double analytic = iw_kl(phi, hp.nu + 1.0, hp);
  return {"iw_kl_vs_mc", std::abs(analytic - mean) < 3.0 * se,
          "analytic " + fmt(analytic) + ", mc " + fmt(mean) + " +- " + fmt(se)};
}

CheckResult check_term2_mc(int samples, bool tamper) {
  RngStream rng(105);
  const int p = 3;
  HyperpriorParams hp(random_spd(p, rng), 8.0);

  nn::LatentPosterior post;
  post.mu = random_vec(p, rng);
  post.chol = random_lower(p, rng);
  post.sigma = post.chol.gram();
  for (int i = 0; i < p; ++i) post.sigma(i, i) += nn::kSigmaJitter;
  auto z = gaussian_reparam(post.mu, post.chol, random_vec(p, rng));

  std::vector<double> x(16, 0.5), x_hat(16, 0.5);
  auto exact = losses::chyvae_elbo_exact(x, post, z, hp, x_hat, samples, rng);
  double analytic = exact.term2_analytic + (tamper ? 0.5 : 0.0);
  double dev = std::abs(analytic - exact.term2_mc);
  return {"elbo_term2_vs_mc", dev < 3.0 * exact.term2_se,
          "analytic " + fmt(analytic) + ", mc " + fmt(exact.term2_mc) + " +- " + fmt(exact.term2_se)};
}

CheckResult check_bartlett_mean(int samples, double tol) {
  RngStream rng(106);
  const int p = 3;
  HyperpriorParams hp(random_spd(p, rng), 10.0);
  SpdMatrix target = iw_mean(hp);
  SpdMatrix acc(p);
  for (int i = 0; i < samples; ++i) {
    SpdMatrix x = iw_sample_bartlett(hp, rng);
    for (std::size_t k = 0; k < acc.a.size(); ++k) acc.a[k] += x.a[k];
  }
  for (auto& v : acc.a) v /= samples;
  double rel = frobenius_distance(acc, target) / frobenius_distance(target, SpdMatrix(p));
  return {"bartlett_mean", rel < tol, "relative Frobenius error " + fmt(rel)};
}

// Samples with increasing degrees of freedom concentrate around the desired
// matrix. Psi is mode-matched, (nu + p + 1) Sigma0, which stays valid at
// nu = 10 with p = 10 where the mean construction would not.
CheckResult check_concentration_trend(int samples) {
  RngStream rng(107);
  const int p = 10;
  SpdMatrix eye = SpdMatrix::identity(p);
  std::vector<double> medians;
  for (double nu : {10.0, 100.0, 1000.0}) {
    HyperpriorParams hp(eye.scaled(nu + p + 1), nu);
    std::vector<double> dists(samples);
    for (int i = 0; i < samples; ++i) dists[i] = frobenius_distance(iw_sample_bartlett(hp, rng), eye);
    std::nth_element(dists.begin(), dists.begin() + samples / 2, dists.end());
    medians.push_back(dists[samples / 2]);
  }
  bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  return {"iw_concentration_trend", decreasing,
          "median distances " + fmt(medians[0]) + " > " + fmt(medians[1]) + " > " + fmt(medians[2])};
}

CheckResult check_conjugacy(int instances) {
  RngStream rng(108);
  const int p = 3;
  double worst = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    HyperpriorParams hp(random_spd(p, rng), 7.0 + inst % 5);
    auto z = random_vec(p, rng);
    HyperpriorParams post(spd_add(hp.psi, outer_product(z)), hp.nu + 1.0);
    const int n = 100;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
      SpdMatrix sigma = random_spd(p, rng);
      vals[i] = mvn_log_pdf(z, std::vector<double>(p, 0.0), sigma) + iw_log_pdf(sigma, hp) -
                iw_log_pdf(sigma, post);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    worst = std::max(worst, var / n);
  }
  return {"conjugacy_constancy", worst < 1e-16, "worst variance " + fmt(worst)};
}

CheckResult check_loss_gradient_fd() {
  const int input_dim = 16, p = 3;
  nn::NetConfig net{input_dim, {8, 8}, p, nn::PosteriorMode::kFullCholesky};
  RngStream rng(109);
  nn::ModelParams params = nn::init_params(net, rng);
  HyperpriorParams hp = HyperpriorParams::from_sigma0(SpdMatrix::identity(p), 6.0);

  std::vector<double> x(input_dim), eps(p);
  for (auto& v : x) v = rng.next_double();
  for (auto& v : eps) v = rng.next_gaussian();

  auto loss_value = [&](const nn::ModelParams& pr) {
    ad::Tape tape;
    nn::ParamVars pv = nn::register_params(tape, pr, false);
    nn::EncoderVars enc = nn::encoder_graph(tape, pv, pr, tape.constant(ad::Tensor::vector(x)));
    ad::Var z = tape.add(enc.mu, tape.matvec(enc.chol, tape.constant(ad::Tensor::vector(eps))));
    ad::Var x_hat = nn::decoder_graph(tape, pv, pr, z);
    return losses::chyvae_loss_graph(tape, x, enc.mu, enc.chol, z, x_hat, hp).total.value().item();
  };

  ad::Tape tape;
  nn::ParamVars pv = nn::register_params(tape, params, true);
  nn::EncoderVars enc = nn::encoder_graph(tape, pv, params, tape.constant(ad::Tensor::vector(x)));
  ad::Var z = tape.add(enc.mu, tape.matvec(enc.chol, tape.constant(ad::Tensor::vector(eps))));
  ad::Var x_hat = nn::decoder_graph(tape, pv, params, z);
  tape.backward(losses::chyvae_loss_graph(tape, x, enc.mu, enc.chol, z, x_hat, hp).total);

  double worst_rel = 0.0, worst_abs = 0.0;
  const double h = 1e-5;
  for (int t = 0; t < params.count(); ++t) {
    for (int k = 0; k < params.tensors[t].size(); ++k) {
      double keep = params.tensors[t].v[k];
      params.tensors[t].v[k] = keep + h;
      double fp = loss_value(params);
      params.tensors[t].v[k] = keep - h;
      double fm = loss_value(params);
      params.tensors[t].v[k] = keep;
      double fd = (fp - fm) / (2 * h);
      double got = pv.vars[t].grad().v[k];
      double err = std::abs(got - fd);
      worst_abs = std::max(worst_abs, err);
      if (err > 1e-6) worst_rel = std::max(worst_rel, err / std::max(std::abs(fd), 1e-12));
    }
  }
  return {"loss_gradient_vs_fd", worst_rel < 1e-4,
          "worst abs " + fmt(worst_abs) + ", worst gated rel " + fmt(worst_rel)};
}

CheckResult check_metric_exact_oracle(int pairs) {
  data::BatchSynthesizer synth(data::FactorSpec::standard(), data::CorrConfig{0.7, 0.7}, 32, 32);
  metric::Encoder oracle = [](const data::ImageSample& s) {
    return std::vector<double>(s.factor_values.begin(), s.factor_values.end());
  };
  RngStream rng(110);
  metric::MetricConfig cfg{20, 200, pairs, pairs};
  auto result = metric::metric_score(oracle, cfg, synth, rng);
  return {"metric_exact_oracle", result.score == 1.0, "score " + fmt(result.score)};
}

}  // namespace

std::vector<CheckResult> run_checks(bool full, bool tamper) {
  const int mc = full ? 100000 : 10000;
  std::vector<CheckResult> results;
  results.push_back(check_cholesky_roundtrip(full ? 1000 : 200));
  results.push_back(check_rank1_identities(full ? 1000 : 200));
  results.push_back(check_mv_digamma_fd());
  results.push_back(check_iw_pdf_quadrature());
  results.push_back(check_gaussian_kl_mc(mc));
  results.push_back(check_iw_kl_scalar());
  results.push_back(check_iw_kl_mc(mc));
  results.push_back(check_term2_mc(mc, tamper));
  results.push_back(check_bartlett_mean(full ? 100000 : 10000, full ? 0.02 : 0.05));
  results.push_back(check_concentration_trend(full ? 2000 : 300));
  results.push_back(check_conjugacy(full ? 20 : 8));
  results.push_back(check_loss_gradient_fd());
  results.push_back(check_metric_exact_oracle(full ? 200 : 50));
  return results;
}

}  // namespace chyvae::selfcheck

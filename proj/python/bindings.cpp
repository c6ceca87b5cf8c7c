#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chyvae/losses.hpp"
#include "chyvae/metric.hpp"
#include "chyvae/selfcheck.hpp"
#include "chyvae/trainer.hpp"

namespace py = pybind11;
using namespace chyvae;

namespace {

nn::LatentPosterior make_posterior(const std::vector<double>& mu, const LowerTriangular& chol) {
  nn::LatentPosterior post;
  post.mu = mu;
  post.chol = chol;
  post.sigma = chol.gram();
  for (int i = 0; i < chol.dim; ++i) post.sigma(i, i) += nn::kSigmaJitter;
  return post;
}

LowerTriangular lower_from_entries(int dim, const std::vector<double>& entries) {
  if (entries.size() != static_cast<std::size_t>(dim) * dim) {
    throw DimensionMismatch("LowerTriangular: entry count != dim*dim");
  }
  LowerTriangular l(dim);
  l.a = entries;
  return l;
}

py::dict breakdown_dict(const losses::ElboBreakdown& b) {
  py::dict d;
  d["recon"] = b.recon;
  d["gaussian_term"] = b.gaussian_term;
  d["iw_term"] = b.iw_term;
  d["total"] = b.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_chyvae, m) {
  m.doc() = "covariance-hyperprior VAE: exact samplers, closed-form losses, dataset and metric";
  m.attr("__version__") = "0.1.0";

  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite");
  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch");
  py::register_exception<FormatError>(m, "FormatError");

  py::class_<SpdMatrix>(m, "SpdMatrix")
      .def(py::init([](int dim, const std::vector<double>& entries) {
             return SpdMatrix(dim, entries);
           }),
           py::arg("dim"), py::arg("entries"))
      .def_static("identity", &SpdMatrix::identity)
      .def_static("diagonal", &SpdMatrix::diagonal)
      .def_readonly("dim", &SpdMatrix::dim)
      .def_readonly("entries", &SpdMatrix::a)
      .def("is_symmetric", &SpdMatrix::is_symmetric, py::arg("rel_tol") = 1e-12);

  py::class_<LowerTriangular>(m, "LowerTriangular")
      .def(py::init(&lower_from_entries), py::arg("dim"), py::arg("entries"))
      .def_static("identity", &LowerTriangular::identity)
      .def_readonly("dim", &LowerTriangular::dim)
      .def_readonly("entries", &LowerTriangular::a)
      .def("gram", &LowerTriangular::gram);

  m.def("cholesky", &cholesky);
  m.def("log_det_spd", &log_det_spd);
  m.def("spd_inverse", &spd_inverse);
  m.def("rank1_logdet", &rank1_logdet);
  m.def("rank1_inverse", &rank1_inverse);

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_u64", &RngStream::next_u64)
      .def("next_double", &RngStream::next_double)
      .def("next_gaussian", &RngStream::next_gaussian)
      .def("next_gamma", &RngStream::next_gamma, py::arg("shape"), py::arg("scale"))
      .def("derive", &RngStream::derive)
      .def_property_readonly("seed", &RngStream::seed)
      .def_property_readonly("counter", &RngStream::counter);

  py::class_<HyperpriorParams>(m, "HyperpriorParams")
      .def(py::init<SpdMatrix, double>(), py::arg("psi"), py::arg("nu"))
      .def_static("from_sigma0", &HyperpriorParams::from_sigma0, py::arg("sigma0"), py::arg("nu"))
      .def_readonly("psi", &HyperpriorParams::psi)
      .def_readonly("nu", &HyperpriorParams::nu)
      .def_readonly("psi_inv", &HyperpriorParams::psi_inv)
      .def_readonly("logdet_psi", &HyperpriorParams::logdet_psi);

  py::class_<PosteriorIwParams>(m, "PosteriorIwParams")
      .def_readonly("phi_logdet", &PosteriorIwParams::phi_logdet)
      .def_readonly("phi_inv", &PosteriorIwParams::phi_inv)
      .def_readonly("lambda_", &PosteriorIwParams::lambda);

  m.def("mv_gamma_ln", &mv_gamma_ln);
  m.def("mv_digamma", &mv_digamma);
  m.def("digamma", &digamma);
  m.def("gaussian_reparam", &gaussian_reparam);
  m.def("gaussian_kl", &gaussian_kl);
  m.def("mvn_log_pdf", &mvn_log_pdf);
  m.def("iw_log_pdf", &iw_log_pdf);
  m.def("iw_mean", &iw_mean);
  m.def("iw_expected_logdet", &iw_expected_logdet);
  m.def("iw_expected_inverse", &iw_expected_inverse);
  m.def("iw_kl", &iw_kl, py::arg("q_phi"), py::arg("q_lambda"), py::arg("hp"));
  m.def("chi_square_sample", &chi_square_sample);
  m.def("iw_sample_bartlett", &iw_sample_bartlett);
  m.def("conjugate_posterior", &conjugate_posterior);

  m.def("bernoulli_recon", &losses::bernoulli_recon);
  m.def(
      "chyvae_loss",
      [](const std::vector<double>& x, const std::vector<double>& mu, const LowerTriangular& chol,
         const std::vector<double>& z, const HyperpriorParams& hp, const std::vector<double>& x_hat) {
        return breakdown_dict(losses::chyvae_loss(x, make_posterior(mu, chol), z, hp, x_hat));
      },
      py::arg("x"), py::arg("mu"), py::arg("chol"), py::arg("z"), py::arg("hp"), py::arg("x_hat"));
  m.def(
      "chyvae_elbo_exact",
      [](const std::vector<double>& x, const std::vector<double>& mu, const LowerTriangular& chol,
         const std::vector<double>& z, const HyperpriorParams& hp, const std::vector<double>& x_hat,
         int mc_samples, std::uint64_t seed) {
        RngStream rng(seed);
        auto e = losses::chyvae_elbo_exact(x, make_posterior(mu, chol), z, hp, x_hat, mc_samples, rng);
        py::dict d;
        d["training"] = breakdown_dict(e.training);
        d["term2_analytic"] = e.term2_analytic;
        d["term3_analytic"] = e.term3_analytic;
        d["term2_mc"] = e.term2_mc;
        d["term2_se"] = e.term2_se;
        d["term3_mc"] = e.term3_mc;
        d["term3_se"] = e.term3_se;
        d["total_exact"] = e.total_exact;
        return d;
      },
      py::arg("x"), py::arg("mu"), py::arg("chol"), py::arg("z"), py::arg("hp"), py::arg("x_hat"),
      py::arg("mc_samples"), py::arg("seed"));
  m.def(
      "beta_vae_loss",
      [](const std::vector<double>& x, const std::vector<double>& mu, const LowerTriangular& chol,
         const std::vector<double>& z, double beta, const std::vector<double>& x_hat) {
        return breakdown_dict(losses::beta_vae_loss(x, make_posterior(mu, chol), z, beta, x_hat));
      },
      py::arg("x"), py::arg("mu"), py::arg("chol"), py::arg("z"), py::arg("beta"), py::arg("x_hat"));

  m.def(
      "sample_factors",
      [](double rho_pos, double rho_so, RngStream& rng) {
        auto idx = data::sample_factors(data::CorrConfig{rho_pos, rho_so},
                                        data::FactorSpec::standard(), rng);
        return std::vector<int>(idx.begin(), idx.end());
      },
      py::arg("rho_pos"), py::arg("rho_so"), py::arg("rng"));
  m.def(
      "render_ellipse",
      [](const std::vector<int>& indices, int height, int width) {
        if (indices.size() != 4) throw DomainError("render_ellipse: need 4 factor indices");
        std::array<int, 4> idx{indices[0], indices[1], indices[2], indices[3]};
        auto img = data::render_ellipse(idx, data::FactorSpec::standard(), height, width);
        return py::bytes(reinterpret_cast<const char*>(img.data()), img.size());
      },
      py::arg("indices"), py::arg("height"), py::arg("width"));
  m.def(
      "generate_dataset_file",
      [](const std::string& path, int n, int height, int width, double rho_pos, double rho_so,
         std::uint64_t seed) {
        auto ds = data::generate_dataset(n, data::CorrConfig{rho_pos, rho_so},
                                         data::FactorSpec::standard(), height, width, seed);
        data::write_dataset(path, ds);
      },
      py::arg("path"), py::arg("n"), py::arg("height") = 32, py::arg("width") = 32,
      py::arg("rho_pos") = 0.7, py::arg("rho_so") = 0.7, py::arg("seed") = 0);
  m.def("dataset_info", [](const std::string& path) {
    auto ds = data::read_dataset(path);
    py::dict d;
    d["height"] = ds.height;
    d["width"] = ds.width;
    d["count"] = ds.count();
    return d;
  });

  m.def(
      "metric_score",
      [](const std::function<std::vector<double>(std::vector<double>)>& encode, int L, int M, int B,
         int N, int height, int width, double rho_pos, double rho_so, std::uint64_t seed) {
        data::BatchSynthesizer synth(data::FactorSpec::standard(), data::CorrConfig{rho_pos, rho_so},
                                     height, width);
        metric::MetricConfig cfg{L, M, B, N};
        RngStream rng(seed);
        auto result = metric::metric_score(
            [&](const data::ImageSample& s) { return encode(s.pixels); }, cfg, synth, rng);
        py::dict d;
        d["score"] = result.score;
        d["votes"] = result.votes.counts;
        d["latent_dim"] = result.votes.latent_dim;
        return d;
      },
      py::arg("encode"), py::arg("L") = 50, py::arg("M") = 1000, py::arg("B") = 200,
      py::arg("N") = 200, py::arg("height") = 32, py::arg("width") = 32, py::arg("rho_pos") = 0.7,
      py::arg("rho_so") = 0.7, py::arg("seed") = 0);
  m.def(
      "metric_score_oracle",
      [](int L, int M, int B, int N, double rho_pos, double rho_so, std::uint64_t seed) {
        data::BatchSynthesizer synth(data::FactorSpec::standard(), data::CorrConfig{rho_pos, rho_so},
                                     32, 32);
        metric::MetricConfig cfg{L, M, B, N};
        RngStream rng(seed);
        auto result = metric::metric_score(
            [](const data::ImageSample& s) {
              return std::vector<double>(s.factor_values.begin(), s.factor_values.end());
            },
            cfg, synth, rng);
        return result.score;
      },
      py::arg("L") = 20, py::arg("M") = 200, py::arg("B") = 100, py::arg("N") = 100,
      py::arg("rho_pos") = 0.7, py::arg("rho_so") = 0.7, py::arg("seed") = 0);

  m.def(
      "train",
      [](const std::string& dataset_path, const std::string& model, double nu, double beta,
         int latent, const std::vector<int>& hidden, int batch, int steps, std::uint64_t seed,
         const std::string& out_dir, double lr) {
        trainer::TrainConfig cfg;
        cfg.model = model == "betavae" ? trainer::ModelKind::kBetaVae : trainer::ModelKind::kChyvae;
        cfg.nu = nu;
        cfg.beta = beta;
        cfg.latent_dim = latent;
        cfg.hidden = hidden;
        cfg.batch_size = batch;
        cfg.steps = steps;
        cfg.seed = seed;
        cfg.optimizer.lr = lr;
        cfg.validate();
        auto ds = data::read_dataset(dataset_path);
        auto result = trainer::train(cfg, ds, out_dir);
        py::list log;
        for (const auto& row : result.log) {
          log.append(py::make_tuple(row.step, row.recon_sum, row.recon_per_pixel, row.gaussian_term,
                                    row.iw_term, row.total));
        }
        py::dict d;
        d["log"] = log;
        if (!result.log.empty()) {
          d["final_total"] = result.log.back().total;
          d["final_recon_per_pixel"] = result.log.back().recon_per_pixel;
        }
        return d;
      },
      py::arg("dataset_path"), py::arg("model") = "chyvae", py::arg("nu") = 100.0,
      py::arg("beta") = 4.0, py::arg("latent") = 6, py::arg("hidden") = std::vector<int>{64},
      py::arg("batch") = 20, py::arg("steps") = 50, py::arg("seed") = 0, py::arg("out_dir") = "",
      py::arg("lr") = 1e-4);

  m.def("run_self_checks", [](bool full) {
    py::list out;
    for (const auto& r : selfcheck::run_checks(full)) {
      out.append(py::make_tuple(r.name, r.pass, r.detail));
    }
    return out;
  });
}

#include "chyvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "chyvae/binary_io.hpp"
#include "chyvae/losses.hpp"

namespace chyvae::trainer {

namespace {

constexpr char kMagic[4] = {'C', 'H', 'K', 'P'};
constexpr std::uint16_t kVersion = 1;

// Sub-stream indices under the run's master seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpsStream = 2;
constexpr std::uint64_t kPermStreamBase = 1000;

std::vector<int> epoch_permutation(int n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng = RngStream(seed).derive(kPermStreamBase + epoch);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim < 1) throw DomainError("TrainConfig: latent_dim must be >= 1");
  if (batch_size < 1) throw DomainError("TrainConfig: batch_size must be >= 1");
  if (steps < 0) throw DomainError("TrainConfig: steps must be >= 0");
  if (eval_interval < 1) throw DomainError("TrainConfig: eval_interval must be >= 1");
  if (hidden.empty()) throw DomainError("TrainConfig: at least one hidden layer required");
  if (!sigma0.a.empty() && sigma0.dim != latent_dim) {
    throw DomainError("TrainConfig: sigma0 dimension != latent_dim");
  }
  if (model == ModelKind::kChyvae && nu <= latent_dim + 1) {
    throw DomainError("TrainConfig: chyvae requires nu > p + 1 for the Psi construction");
  }
  if (model == ModelKind::kBetaVae && beta < 0.0) {
    throw DomainError("TrainConfig: beta must be >= 0");
  }
}

HyperpriorParams hyperprior_from_config(const TrainConfig& config) {
  SpdMatrix sigma0 = config.sigma0.a.empty() ? SpdMatrix::identity(config.latent_dim) : config.sigma0;
  return HyperpriorParams::from_sigma0(sigma0, config.nu);
}

std::string step_log_csv_header() {
  return "step,recon_sum,recon_per_pixel,gaussian_term,iw_term,total";
}

std::string step_log_csv_row(const StepLog& row) {
  std::ostringstream os;
  os << row.step << "," << fmt_full(row.recon_sum) << "," << fmt_full(row.recon_per_pixel) << ","
     << fmt_full(row.gaussian_term) << "," << fmt_full(row.iw_term) << "," << fmt_full(row.total);
  return os.str();
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  io::write_bytes(os, kMagic, 4);
  io::write_le<std::uint16_t>(os, kVersion);
  io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(ckpt.model));
  const nn::NetConfig& net = ckpt.params.config;
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_dim));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.latent_dim));
  io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(net.mode));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden.size()));
  for (int h : net.hidden) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.img_height));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.img_width));
  io::write_f64(os, ckpt.nu);
  io::write_f64(os, ckpt.beta);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.sigma0.dim));
  io::write_f64_array(os, ckpt.sigma0.a);
  io::write_f64(os, ckpt.optimizer.lr);
  io::write_f64(os, ckpt.optimizer.beta1);
  io::write_f64(os, ckpt.optimizer.beta2);
  io::write_f64(os, ckpt.optimizer.epsilon);
  io::write_le<std::uint64_t>(os, ckpt.seed);
  io::write_le<std::uint64_t>(os, ckpt.step);
  io::write_le<std::uint64_t>(os, ckpt.eps_seed);
  io::write_le<std::uint64_t>(os, ckpt.eps_counter);
  io::write_le<std::uint64_t>(os, ckpt.adam.step);

  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.params.count()));
  for (int i = 0; i < ckpt.params.count(); ++i) {
    const ad::Tensor& t = ckpt.params.tensors[i];
    io::write_string(os, ckpt.params.names[i]);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    io::write_f64_array(os, t.v);
    io::write_f64_array(os, ckpt.adam.m[i].v);
    io::write_f64_array(os, ckpt.adam.v[i].v);
  }
  if (!os) throw IoError("save_checkpoint: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);
  char magic[4];
  io::read_bytes(is, magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("load_checkpoint: bad magic");
  if (io::read_le<std::uint16_t>(is) != kVersion) throw FormatError("load_checkpoint: unsupported version");

  Checkpoint ckpt;
  ckpt.model = static_cast<ModelKind>(io::read_le<std::uint8_t>(is));
  nn::NetConfig net;
  net.input_dim = static_cast<int>(io::read_le<std::uint32_t>(is));
  net.latent_dim = static_cast<int>(io::read_le<std::uint32_t>(is));
  net.mode = static_cast<nn::PosteriorMode>(io::read_le<std::uint8_t>(is));
  auto n_hidden = io::read_le<std::uint32_t>(is);
  if (n_hidden > 64) throw FormatError("load_checkpoint: implausible hidden layer count");
  net.hidden.resize(n_hidden);
  for (auto& h : net.hidden) h = static_cast<int>(io::read_le<std::uint32_t>(is));
  ckpt.img_height = static_cast<int>(io::read_le<std::uint32_t>(is));
  ckpt.img_width = static_cast<int>(io::read_le<std::uint32_t>(is));
  ckpt.nu = io::read_f64(is);
  ckpt.beta = io::read_f64(is);
  auto p0 = io::read_le<std::uint32_t>(is);
  if (p0 > 4096) throw FormatError("load_checkpoint: implausible sigma0 dim");
  ckpt.sigma0 = SpdMatrix(static_cast<int>(p0));
  io::read_f64_array(is, ckpt.sigma0.a);
  ckpt.optimizer.lr = io::read_f64(is);
  ckpt.optimizer.beta1 = io::read_f64(is);
  ckpt.optimizer.beta2 = io::read_f64(is);
  ckpt.optimizer.epsilon = io::read_f64(is);
  ckpt.seed = io::read_le<std::uint64_t>(is);
  ckpt.step = io::read_le<std::uint64_t>(is);
  ckpt.eps_seed = io::read_le<std::uint64_t>(is);
  ckpt.eps_counter = io::read_le<std::uint64_t>(is);
  ckpt.adam.step = io::read_le<std::uint64_t>(is);

  auto count = io::read_le<std::uint32_t>(is);
  if (count > 4096) throw FormatError("load_checkpoint: implausible parameter count");
  ckpt.params.config = net;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = io::read_string(is);
    auto rank = io::read_le<std::uint32_t>(is);
    if (rank > 2) throw FormatError("load_checkpoint: implausible tensor rank");
    std::vector<int> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<int>(io::read_le<std::uint32_t>(is));
      if (d < 1 || d > (1 << 24)) throw FormatError("load_checkpoint: implausible tensor dim");
      numel *= static_cast<std::size_t>(d);
    }
    ad::Tensor t = ad::Tensor::zeros(shape);
    ad::Tensor m = ad::Tensor::zeros(shape);
    ad::Tensor v = ad::Tensor::zeros(shape);
    (void)numel;
    io::read_f64_array(is, t.v);
    io::read_f64_array(is, m.v);
    io::read_f64_array(is, v.v);
    ckpt.params.names.push_back(std::move(name));
    ckpt.params.tensors.push_back(std::move(t));
    ckpt.adam.m.push_back(std::move(m));
    ckpt.adam.v.push_back(std::move(v));
  }
  return ckpt;
}

TrainResult train(const TrainConfig& config, const data::EllipseDataset& dataset,
                  const std::string& out_dir, const std::optional<Checkpoint>& resume) {
  config.validate();
  const int n = dataset.count();
  const int batch = config.batch_size;
  if (n < batch) throw DomainError("train: dataset smaller than one batch");
  const int input_dim = dataset.height * dataset.width;
  const int p = config.latent_dim;
  const int batches_per_epoch = n / batch;

  nn::NetConfig net;
  net.input_dim = input_dim;
  net.hidden = config.hidden;
  net.latent_dim = p;
  net.mode = config.model == ModelKind::kChyvae ? nn::PosteriorMode::kFullCholesky
                                                : nn::PosteriorMode::kDiagonal;

  nn::ModelParams params;
  nn::AdamState adam;
  RngStream eps_stream(0);
  std::uint64_t start_step = 0;
  if (resume.has_value()) {
    params = resume->params;
    adam = resume->adam;
    eps_stream = RngStream::restore(resume->eps_seed, resume->eps_counter);
    start_step = resume->step;
  } else {
    RngStream init_stream = RngStream(config.seed).derive(kInitStream);
    params = nn::init_params(net, init_stream);
    adam = nn::init_adam_state(params);
    eps_stream = RngStream(config.seed).derive(kEpsStream);
  }

  HyperpriorParams hp;
  if (config.model == ModelKind::kChyvae) hp = hyperprior_from_config(config);

  TrainResult result;
  result.log.reserve(static_cast<std::size_t>(config.steps) - start_step);

  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<int> perm;
  ad::Tape tape;  // reused across steps to keep its allocations warm

  auto make_checkpoint = [&](std::uint64_t step) {
    Checkpoint ckpt;
    ckpt.model = config.model;
    ckpt.nu = config.nu;
    ckpt.beta = config.beta;
    ckpt.sigma0 = config.sigma0.a.empty() ? SpdMatrix::identity(p) : config.sigma0;
    ckpt.img_height = dataset.height;
    ckpt.img_width = dataset.width;
    ckpt.seed = config.seed;
    ckpt.step = step;
    ckpt.eps_seed = eps_stream.seed();
    ckpt.eps_counter = eps_stream.counter();
    ckpt.optimizer = config.optimizer;
    ckpt.params = params;
    ckpt.adam = adam;
    return ckpt;
  };

  for (std::uint64_t step = start_step; step < static_cast<std::uint64_t>(config.steps); ++step) {
    std::uint64_t epoch = step / batches_per_epoch;
    int slot = static_cast<int>(step % batches_per_epoch);
    if (epoch != cached_epoch) {
      perm = epoch_permutation(n, config.seed, epoch);
      cached_epoch = epoch;
    }

    std::vector<double> x_flat(static_cast<std::size_t>(batch) * input_dim);
    for (int i = 0; i < batch; ++i) {
      auto px = dataset.sample_pixels01(perm[slot * batch + i]);
      std::copy(px.begin(), px.end(), x_flat.begin() + static_cast<std::size_t>(i) * input_dim);
    }

    tape.clear();
    nn::ParamVars pv = nn::register_params(tape, params, true);
    ad::Var x_batch = tape.constant(ad::Tensor::matrix(batch, input_dim, x_flat));
    nn::EncoderBatchVars enc = nn::encoder_graph_batch(tape, pv, params, x_batch, batch);

    std::vector<ad::Var> z_rows(batch);
    std::vector<ad::Var> gaussian_terms, iw_terms;
    gaussian_terms.reserve(batch);
    for (int i = 0; i < batch; ++i) {
      ad::Var mu_i = tape.slice(enc.mu, i * p, p);
      std::vector<double> eps(p);
      for (auto& e : eps) e = eps_stream.next_gaussian();
      ad::Var eps_i = tape.constant(ad::Tensor::vector(eps));

      if (config.model == ModelKind::kChyvae) {
        ad::Var head_i = tape.slice(enc.head, i * p * p, p * p);
        ad::Var chol_i = tape.lower_triangular_assemble(head_i, p);
        ad::Var z_i = tape.add(mu_i, tape.matvec(chol_i, eps_i));
        z_rows[i] = z_i;
        losses::LatentTermVars lt = losses::chyvae_latent_terms_graph(tape, mu_i, chol_i, z_i, hp);
        gaussian_terms.push_back(lt.gaussian_term);
        iw_terms.push_back(lt.iw_term);
      } else {
        ad::Var sigma_i = tape.softplus(tape.slice(enc.head, i * p, p));
        ad::Var z_i = tape.add(mu_i, tape.elementwise_mul(sigma_i, eps_i));
        z_rows[i] = z_i;
        gaussian_terms.push_back(tape.scalar_mul(losses::beta_kl_graph(tape, mu_i, sigma_i), config.beta));
      }
    }

    ad::Var z_cat = z_rows[0];
    for (int i = 1; i < batch; ++i) z_cat = tape.concat(z_cat, z_rows[i]);
    ad::Var z_batch = tape.reshape(z_cat, {batch, p});
    ad::Var x_hat = nn::decoder_graph_batch(tape, pv, params, z_batch, batch);

    ad::Var recon_sum = losses::bernoulli_recon_graph(tape, x_flat, x_hat);

    ad::Var gaussian_cat = gaussian_terms[0];
    for (int i = 1; i < batch; ++i) gaussian_cat = tape.concat(gaussian_cat, gaussian_terms[i]);
    ad::Var gaussian_sum = tape.sum(gaussian_cat);

    ad::Var elbo_sum = tape.sub(recon_sum, gaussian_sum);
    ad::Var iw_sum;
    if (config.model == ModelKind::kChyvae) {
      ad::Var iw_cat = iw_terms[0];
      for (int i = 1; i < batch; ++i) iw_cat = tape.concat(iw_cat, iw_terms[i]);
      iw_sum = tape.sum(iw_cat);
      elbo_sum = tape.sub(elbo_sum, iw_sum);
    }
    ad::Var objective = tape.scalar_mul(elbo_sum, -1.0 / batch);
    tape.backward(objective);

    std::vector<ad::Tensor> grads;
    grads.reserve(pv.vars.size());
    for (const ad::Var& v : pv.vars) grads.push_back(v.grad());
    nn::adam_step(params, grads, adam, config.optimizer);

    StepLog row;
    row.step = static_cast<std::int64_t>(step);
    row.recon_sum = recon_sum.value().item() / batch;
    row.recon_per_pixel = row.recon_sum / input_dim;
    row.gaussian_term = gaussian_sum.value().item() / batch;
    row.iw_term = config.model == ModelKind::kChyvae ? iw_sum.value().item() / batch : 0.0;
    row.total = row.recon_sum - row.gaussian_term - row.iw_term;
    result.log.push_back(row);

    if (!out_dir.empty() && ((step + 1) % static_cast<std::uint64_t>(config.eval_interval) == 0)) {
      save_checkpoint(out_dir + "/ckpt_" + std::to_string(step + 1) + ".bin", make_checkpoint(step + 1));
    }
  }

  result.final_state = make_checkpoint(static_cast<std::uint64_t>(config.steps));
  if (!out_dir.empty()) save_checkpoint(out_dir + "/last.ckpt", result.final_state);
  result.params = std::move(params);
  return result;
}

namespace {

std::uint8_t to_u8(double v) {
  double x = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(x));
}

}  // namespace

ImageU8 traverse(const nn::ModelParams& params, const std::vector<double>& base_image, int dim,
                 const std::vector<double>& grid, int img_height, int img_width) {
  const int p = params.config.latent_dim;
  if (dim < 0 || dim >= p) throw DomainError("traverse: dimension out of range");
  if (grid.empty()) throw DomainError("traverse: empty grid");
  std::vector<double> mu = nn::encode_mean(params, base_image);

  ImageU8 strip;
  strip.height = img_height;
  strip.width = img_width * static_cast<int>(grid.size());
  strip.pixels.assign(static_cast<std::size_t>(strip.height) * strip.width, 0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> z = mu;
    z[dim] = grid[g];
    std::vector<double> decoded = nn::decoder_forward(params, z);
    for (int r = 0; r < img_height; ++r)
      for (int c = 0; c < img_width; ++c) {
        strip.pixels[static_cast<std::size_t>(r) * strip.width + g * img_width + c] =
            to_u8(decoded[static_cast<std::size_t>(r) * img_width + c]);
      }
  }
  return strip;
}

std::vector<ImageU8> sample_images(const nn::ModelParams& params, const HyperpriorParams& hp,
                                   int n, SampleMode mode, RngStream& rng, int img_height,
                                   int img_width) {
  const int p = params.config.latent_dim;
  std::vector<ImageU8> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> eps(p);
    for (auto& e : eps) e = rng.next_gaussian();
    std::vector<double> z;
    if (mode == SampleMode::kBartlett) {
      SpdMatrix sigma = iw_sample_bartlett(hp, rng);
      z = gaussian_reparam(std::vector<double>(p, 0.0), cholesky(sigma), eps);
    } else {
      z = eps;
    }
    std::vector<double> decoded = nn::decoder_forward(params, z);
    ImageU8& img = out[i];
    img.height = img_height;
    img.width = img_width;
    img.pixels.resize(decoded.size());
    for (std::size_t j = 0; j < decoded.size(); ++j) img.pixels[j] = to_u8(decoded[j]);
  }
  return out;
}

}  // namespace chyvae::trainer

#include "chyvae/nn.hpp"

#include <cmath>

namespace chyvae::nn {

namespace {

double stable_softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + (x > 0.0 ? x : 0.0); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// W^T x + b with W stored [in, out]; accumulates over the input index in
// increasing order with contiguous row access, matching the tape kernels
// bit for bit.
std::vector<double> affine_vec(const ad::Tensor& w, const ad::Tensor& b,
                               const std::vector<double>& x) {
  const int in = w.shape[0], out = w.shape[1];
  if (static_cast<int>(x.size()) != in) throw DimensionMismatch("affine_vec: input size mismatch");
  std::vector<double> y(out, 0.0);
  double* __restrict__ yp = y.data();
  for (int j = 0; j < in; ++j) {
    const double xj = x[j];
    const double* __restrict__ wrow = w.v.data() + static_cast<std::size_t>(j) * out;
    for (int i = 0; i < out; ++i) yp[i] += wrow[i] * xj;
  }
  for (int i = 0; i < out; ++i) yp[i] += b.v[i];
  return y;
}

struct LayerSpec {
  std::string w_name, b_name;
  int in = 0, out = 0;
};

// The fixed parameter layout: encoder trunk, mu head, posterior head,
// decoder trunk, output layer.
std::vector<LayerSpec> layer_specs(const NetConfig& c) {
  std::vector<LayerSpec> specs;
  int in = c.input_dim;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    specs.push_back({"enc_w" + std::to_string(i), "enc_b" + std::to_string(i), in, c.hidden[i]});
    in = c.hidden[i];
  }
  specs.push_back({"enc_mu_w", "enc_mu_b", in, c.latent_dim});
  specs.push_back({"enc_head_w", "enc_head_b", in, c.head_size()});
  in = c.latent_dim;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    int out = c.hidden[c.hidden.size() - 1 - i];
    specs.push_back({"dec_w" + std::to_string(i), "dec_b" + std::to_string(i), in, out});
    in = out;
  }
  specs.push_back({"dec_out_w", "dec_out_b", in, c.input_dim});
  return specs;
}

}  // namespace

const ad::Tensor& ModelParams::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw DomainError("ModelParams: unknown parameter " + name);
}

ad::Tensor& ModelParams::find(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw DomainError("ModelParams: unknown parameter " + name);
}

ModelParams init_params(const NetConfig& config, RngStream& rng) {
  if (config.input_dim < 1 || config.latent_dim < 1 || config.hidden.empty()) {
    throw DomainError("init_params: invalid layer configuration");
  }
  ModelParams params;
  params.config = config;
  for (const auto& spec : layer_specs(config)) {
    double limit = std::sqrt(6.0 / (spec.in + spec.out));
    std::vector<double> w(static_cast<std::size_t>(spec.in) * spec.out);
    for (auto& x : w) x = limit * (2.0 * rng.next_double() - 1.0);
    params.names.push_back(spec.w_name);
    params.tensors.push_back(ad::Tensor::matrix(spec.in, spec.out, std::move(w)));
    params.names.push_back(spec.b_name);
    params.tensors.push_back(ad::Tensor::zeros({spec.out}));
  }
  return params;
}

AdamState init_adam_state(const ModelParams& params) {
  AdamState state;
  for (const auto& t : params.tensors) {
    state.m.push_back(ad::Tensor::zeros(t.shape));
    state.v.push_back(ad::Tensor::zeros(t.shape));
  }
  return state;
}

void adam_step(ModelParams& params, const std::vector<ad::Tensor>& grads, AdamState& state,
               const OptimizerConfig& config) {
  if (grads.size() != params.tensors.size()) throw DimensionMismatch("adam_step: gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].same_shape(params.tensors[i])) throw DimensionMismatch("adam_step: gradient shape mismatch");
    for (double g : grads[i].v) {
      if (!std::isfinite(g)) throw NonFiniteGradient("adam_step: non-finite gradient in " + params.names[i]);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    double* w = params.tensors[i].v.data();
    double* m = state.m[i].v.data();
    double* v = state.v[i].v.data();
    const double* g = grads[i].v.data();
    const int n = params.tensors[i].size();
    for (int k = 0; k < n; ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      double m_hat = m[k] / bc1;
      double v_hat = v[k] / bc2;
      w[k] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

const ad::Var& ParamVars::find(const ModelParams& params, const std::string& name) const {
  for (std::size_t i = 0; i < params.names.size(); ++i) {
    if (params.names[i] == name) return vars[i];
  }
  throw DomainError("ParamVars: unknown parameter " + name);
}

ParamVars register_params(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  ParamVars pv;
  pv.vars.reserve(params.tensors.size());
  for (const auto& t : params.tensors) pv.vars.push_back(tape.leaf(t, requires_grad));
  return pv;
}

namespace {

// h = W^T x + b for a single [in] vector; W is stored [in, out].
ad::Var affine(ad::Tape& tape, ad::Var x, ad::Var w, ad::Var b) {
  return tape.add(tape.matvec(tape.transpose(w), x), b);
}

// H = X W + 1 b^T for a [B, in] batch.
ad::Var affine_batch(ad::Tape& tape, ad::Var x, ad::Var w, ad::Var b, ad::Var ones) {
  return tape.add(tape.matmul(x, w), tape.outer(ones, b));
}

}  // namespace

EncoderVars encoder_graph(ad::Tape& tape, const ParamVars& pv, const ModelParams& params, ad::Var x) {
  const NetConfig& c = params.config;
  ad::Var h = x;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = tape.relu(affine(tape, h, pv.find(params, "enc_w" + std::to_string(i)),
                         pv.find(params, "enc_b" + std::to_string(i))));
  }
  EncoderVars out;
  out.mu = affine(tape, h, pv.find(params, "enc_mu_w"), pv.find(params, "enc_mu_b"));
  out.head = affine(tape, h, pv.find(params, "enc_head_w"), pv.find(params, "enc_head_b"));
  if (c.mode == PosteriorMode::kFullCholesky) {
    out.chol = tape.lower_triangular_assemble(out.head, c.latent_dim);
  } else {
    out.chol = tape.softplus(out.head);
  }
  return out;
}

ad::Var decoder_graph(ad::Tape& tape, const ParamVars& pv, const ModelParams& params, ad::Var z) {
  const NetConfig& c = params.config;
  ad::Var h = z;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = tape.relu(affine(tape, h, pv.find(params, "dec_w" + std::to_string(i)),
                         pv.find(params, "dec_b" + std::to_string(i))));
  }
  return tape.sigmoid(affine(tape, h, pv.find(params, "dec_out_w"), pv.find(params, "dec_out_b")));
}

EncoderBatchVars encoder_graph_batch(ad::Tape& tape, const ParamVars& pv, const ModelParams& params,
                                     ad::Var x_batch, int batch) {
  const NetConfig& c = params.config;
  ad::Var ones = tape.constant(ad::Tensor::vector(std::vector<double>(batch, 1.0)));
  ad::Var h = x_batch;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = tape.relu(affine_batch(tape, h, pv.find(params, "enc_w" + std::to_string(i)),
                               pv.find(params, "enc_b" + std::to_string(i)), ones));
  }
  EncoderBatchVars out;
  out.mu = affine_batch(tape, h, pv.find(params, "enc_mu_w"), pv.find(params, "enc_mu_b"), ones);
  out.head = affine_batch(tape, h, pv.find(params, "enc_head_w"), pv.find(params, "enc_head_b"), ones);
  return out;
}

ad::Var decoder_graph_batch(ad::Tape& tape, const ParamVars& pv, const ModelParams& params,
                            ad::Var z_batch, int batch) {
  const NetConfig& c = params.config;
  ad::Var ones = tape.constant(ad::Tensor::vector(std::vector<double>(batch, 1.0)));
  ad::Var h = z_batch;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = tape.relu(affine_batch(tape, h, pv.find(params, "dec_w" + std::to_string(i)),
                               pv.find(params, "dec_b" + std::to_string(i)), ones));
  }
  return tape.sigmoid(
      affine_batch(tape, h, pv.find(params, "dec_out_w"), pv.find(params, "dec_out_b"), ones));
}

// Value-level forwards run as plain loops: no tape, no parameter copies.
// They follow the exact accumulation order of the graph kernels, so both
// paths produce identical doubles.
namespace {

std::vector<double> encoder_trunk(const ModelParams& params, const std::vector<double>& x) {
  const NetConfig& c = params.config;
  if (static_cast<int>(x.size()) != c.input_dim) throw DimensionMismatch("encoder: bad input size");
  std::vector<double> h = x;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = affine_vec(params.find("enc_w" + std::to_string(i)), params.find("enc_b" + std::to_string(i)), h);
    for (auto& v : h) v = v > 0.0 ? v : 0.0;
  }
  return h;
}

}  // namespace

LatentPosterior encoder_forward(const ModelParams& params, const std::vector<double>& x) {
  const NetConfig& c = params.config;
  const int p = c.latent_dim;
  std::vector<double> h = encoder_trunk(params, x);

  LatentPosterior post;
  post.mu = affine_vec(params.find("enc_mu_w"), params.find("enc_mu_b"), h);
  std::vector<double> head = affine_vec(params.find("enc_head_w"), params.find("enc_head_b"), h);
  post.chol = LowerTriangular(p);
  if (c.mode == PosteriorMode::kFullCholesky) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < i; ++j) post.chol(i, j) = head[i * p + j];
      post.chol(i, i) = stable_softplus(head[i * p + i]);
    }
  } else {
    for (int i = 0; i < p; ++i) post.chol(i, i) = stable_softplus(head[i]);
  }
  post.sigma = post.chol.gram();
  for (int i = 0; i < p; ++i) post.sigma(i, i) += kSigmaJitter;
  return post;
}

std::vector<double> decoder_forward(const ModelParams& params, const std::vector<double>& z) {
  const NetConfig& c = params.config;
  if (static_cast<int>(z.size()) != c.latent_dim) throw DimensionMismatch("decoder_forward: bad latent size");
  std::vector<double> h = z;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    h = affine_vec(params.find("dec_w" + std::to_string(i)), params.find("dec_b" + std::to_string(i)), h);
    for (auto& v : h) v = v > 0.0 ? v : 0.0;
  }
  h = affine_vec(params.find("dec_out_w"), params.find("dec_out_b"), h);
  for (auto& v : h) v = stable_sigmoid(v);
  return h;
}

std::vector<double> encode_mean(const ModelParams& params, const std::vector<double>& x) {
  std::vector<double> h = encoder_trunk(params, x);
  return affine_vec(params.find("enc_mu_w"), params.find("enc_mu_b"), h);
}

}  // namespace chyvae::nn

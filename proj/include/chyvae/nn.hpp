#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chyvae/autodiff.hpp"
#include "chyvae/linalg.hpp"
#include "chyvae/rng.hpp"

namespace chyvae::nn {

// Which posterior the encoder head parameterizes: a full Cholesky factor
// (p*p head) or a diagonal one (softplus sigma head, the beta-VAE baseline).
enum class PosteriorMode : std::uint8_t { kFullCholesky = 0, kDiagonal = 1 };

struct NetConfig {
  int input_dim = 0;                 // D
  std::vector<int> hidden = {512, 256};
  int latent_dim = 0;                // p
  PosteriorMode mode = PosteriorMode::kFullCholesky;

  int head_size() const {
    return mode == PosteriorMode::kFullCholesky ? latent_dim * latent_dim : latent_dim;
  }
};

// All trainable tensors in a fixed, named order. Weight matrices are stored
// [in, out] so a batch row vector multiplies from the left.
struct ModelParams {
  NetConfig config;
  std::vector<std::string> names;
  std::vector<ad::Tensor> tensors;

  int count() const { return static_cast<int>(tensors.size()); }
  const ad::Tensor& find(const std::string& name) const;
  ad::Tensor& find(const std::string& name);
};

// Per-example posterior emitted by the encoder. sigma carries the stability
// jitter: sigma = chol * chol^T + 1e-4 I.
struct LatentPosterior {
  std::vector<double> mu;
  LowerTriangular chol;
  SpdMatrix sigma;
};

inline constexpr double kSigmaJitter = 1e-4;

struct OptimizerConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::uint64_t step = 0;
};

// Glorot-uniform weights, zero biases. Deterministic in the stream.
ModelParams init_params(const NetConfig& config, RngStream& rng);

AdamState init_adam_state(const ModelParams& params);

// Bias-corrected Adam update, in place. Throws NonFiniteGradient (before
// touching any state) if a gradient is NaN or Inf.
void adam_step(ModelParams& params, const std::vector<ad::Tensor>& grads, AdamState& state,
               const OptimizerConfig& config);

// Parameter leaves registered on a tape, parallel to ModelParams order.
struct ParamVars {
  std::vector<ad::Var> vars;
  const ad::Var& find(const ModelParams& params, const std::string& name) const;
};

ParamVars register_params(ad::Tape& tape, const ModelParams& params, bool requires_grad);

// Single-example graphs (x is a [D] var, z a [p] var).
struct EncoderVars {
  ad::Var mu;    // [p]
  ad::Var head;  // raw head, [p*p] or [p]
  ad::Var chol;  // assembled [p,p] (full mode) or softplus(head) as [p] (diagonal)
};
EncoderVars encoder_graph(ad::Tape& tape, const ParamVars& pv, const ModelParams& params, ad::Var x);
ad::Var decoder_graph(ad::Tape& tape, const ParamVars& pv, const ModelParams& params, ad::Var z);

// Batched graphs over row-major [B, *] matrices.
struct EncoderBatchVars {
  ad::Var mu;    // [B, p]
  ad::Var head;  // [B, p*p] or [B, p]
};
EncoderBatchVars encoder_graph_batch(ad::Tape& tape, const ParamVars& pv, const ModelParams& params,
                                     ad::Var x_batch, int batch);
ad::Var decoder_graph_batch(ad::Tape& tape, const ParamVars& pv, const ModelParams& params,
                            ad::Var z_batch, int batch);

// Value-level forwards for evaluation paths (no gradients kept).
LatentPosterior encoder_forward(const ModelParams& params, const std::vector<double>& x);
std::vector<double> decoder_forward(const ModelParams& params, const std::vector<double>& z);
std::vector<double> encode_mean(const ModelParams& params, const std::vector<double>& x);

}  // namespace chyvae::nn

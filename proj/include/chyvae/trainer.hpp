#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chyvae/data.hpp"
#include "chyvae/distributions.hpp"
#include "chyvae/nn.hpp"

namespace chyvae::trainer {

enum class ModelKind : std::uint8_t { kChyvae = 0, kBetaVae = 1 };

struct TrainConfig {
  ModelKind model = ModelKind::kChyvae;
  double nu = 500.0;   // CHyVAE degrees of freedom
  double beta = 4.0;   // beta-VAE weight
  SpdMatrix sigma0;    // desired covariance; empty means identity(p)
  int latent_dim = 10;
  std::vector<int> hidden = {512, 256};
  int batch_size = 50;
  int steps = 5000;
  int eval_interval = 1000;
  std::uint64_t seed = 0;
  nn::OptimizerConfig optimizer;

  // Throws DomainError on an invalid combination (e.g. nu <= p + 1, which
  // breaks the Psi = (nu - p - 1) Sigma0 construction).
  void validate() const;
};

// Psi = (nu - p - 1) * Sigma0 from the run configuration.
HyperpriorParams hyperprior_from_config(const TrainConfig& config);

struct StepLog {
  std::int64_t step = 0;
  double recon_sum = 0.0;        // batch mean of the per-example log-likelihood sum
  double recon_per_pixel = 0.0;  // recon_sum / D
  double gaussian_term = 0.0;
  double iw_term = 0.0;
  double total = 0.0;            // recon_sum - gaussian_term - iw_term
};

std::string step_log_csv_header();
std::string step_log_csv_row(const StepLog& row);

// Everything needed to reproduce the continuation of a run exactly:
// parameters, optimizer moments, and the reparameterization stream state.
struct Checkpoint {
  ModelKind model = ModelKind::kChyvae;
  double nu = 0.0;
  double beta = 0.0;
  SpdMatrix sigma0;
  int img_height = 0;
  int img_width = 0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t eps_seed = 0;
  std::uint64_t eps_counter = 0;
  nn::OptimizerConfig optimizer;
  nn::ModelParams params;
  nn::AdamState adam;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
  nn::ModelParams params;
  std::vector<StepLog> log;
  Checkpoint final_state;
};

// Run the training loop: sample batch -> encode -> reparameterize -> decode
// -> loss -> backward -> adam. Fully deterministic in config.seed. When
// out_dir is non-empty, checkpoints land there every eval_interval steps.
// Passing resume continues that state up to config.steps.
TrainResult train(const TrainConfig& config, const data::EllipseDataset& dataset,
                  const std::string& out_dir = "",
                  const std::optional<Checkpoint>& resume = std::nullopt);

struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
};

// Encode the base image, sweep dimension dim over the grid values, decode
// each; tiles left to right into one strip.
ImageU8 traverse(const nn::ModelParams& params, const std::vector<double>& base_image, int dim,
                 const std::vector<double>& grid, int img_height, int img_width);

enum class SampleMode : std::uint8_t { kBartlett = 0, kStandardNormal = 1 };

// Decode latent draws: Sigma ~ W^{-1}(Psi, nu), z ~ N(0, Sigma) in Bartlett
// mode; z ~ N(0, I) in standard-normal mode.
std::vector<ImageU8> sample_images(const nn::ModelParams& params, const HyperpriorParams& hp,
                                   int n, SampleMode mode, RngStream& rng, int img_height,
                                   int img_width);

}  // namespace chyvae::trainer

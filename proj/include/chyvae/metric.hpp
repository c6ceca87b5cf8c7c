#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chyvae/data.hpp"
#include "chyvae/rng.hpp"

namespace chyvae::metric {

// Latent code for one image; real models read only sample.pixels, test
// oracles may read the ground-truth factor values.
using Encoder = std::function<std::vector<double>(const data::ImageSample&)>;

struct MetricConfig {
  int L = 50;    // batch size per fixed factor
  int M = 1000;  // normalization sample count
  int B = 200;   // vote pairs
  int N = 200;   // test pairs

  void validate() const;
};

// counts[i][j] = number of vote pairs whose min-variance dimension was i
// while factor j was fixed.
struct VoteMatrix {
  int latent_dim = 0;
  int num_factors = 0;
  std::vector<int> counts;

  VoteMatrix() = default;
  VoteMatrix(int p, int k) : latent_dim(p), num_factors(k), counts(static_cast<std::size_t>(p) * k, 0) {}

  int& at(int i, int j) { return counts[static_cast<std::size_t>(i) * num_factors + j]; }
  int at(int i, int j) const { return counts[static_cast<std::size_t>(i) * num_factors + j]; }
  int column_sum(int j) const;
  int total() const;
  // argmax over factors for row i, lowest index on ties
  int assigned_factor(int i) const;
  std::string to_csv() const;
};

// Per-dimension empirical standard deviation of codes over M random images,
// floored at 1e-8 so collapsed dimensions cannot blow up the normalization.
std::vector<double> normalization_stds(const Encoder& encode, const data::BatchSynthesizer& synth,
                                       int M, RngStream& rng);

// One metric pair: fix factor k at a uniformly chosen table value, encode a
// batch of L, normalize by stds, return (argmin-variance dimension, k).
// Ties break toward the lowest dimension index.
std::pair<int, int> collect_pair(int k, const Encoder& encode, const std::vector<double>& stds,
                                 int L, const data::BatchSynthesizer& synth, RngStream& rng);

struct MetricResult {
  double score = 0.0;
  VoteMatrix votes;
};

// Steps 1-9: build the vote matrix from B pairs, then score N fresh pairs by
// majority-vote classification accuracy.
MetricResult metric_score(const Encoder& encode, const MetricConfig& cfg,
                          const data::BatchSynthesizer& synth, RngStream& rng);

}  // namespace chyvae::metric

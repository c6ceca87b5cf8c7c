#include "chyvae/metric.hpp"

#include <cmath>
#include <sstream>

namespace chyvae::metric {

namespace {
constexpr double kStdFloor = 1e-8;
}

void MetricConfig::validate() const {
  if (L < 2 || M < 2 || B < 1 || N < 1) throw DomainError("MetricConfig: all counts must be >= 1 (L, M >= 2)");
}

int VoteMatrix::column_sum(int j) const {
  int acc = 0;
  for (int i = 0; i < latent_dim; ++i) acc += at(i, j);
  return acc;
}

int VoteMatrix::total() const {
  int acc = 0;
  for (int c : counts) acc += c;
  return acc;
}

int VoteMatrix::assigned_factor(int i) const {
  int best = 0;
  for (int j = 1; j < num_factors; ++j) {
    if (at(i, j) > at(i, best)) best = j;
  }
  return best;
}

std::string VoteMatrix::to_csv() const {
  std::ostringstream os;
  os << "dim";
  for (int j = 0; j < num_factors; ++j) os << "," << data::FactorSpec::names()[j];
  os << ",assigned\n";
  for (int i = 0; i < latent_dim; ++i) {
    os << i;
    for (int j = 0; j < num_factors; ++j) os << "," << at(i, j);
    os << "," << data::FactorSpec::names()[assigned_factor(i)] << "\n";
  }
  return os.str();
}

std::vector<double> normalization_stds(const Encoder& encode, const data::BatchSynthesizer& synth,
                                       int M, RngStream& rng) {
  if (M < 2) throw DomainError("normalization_stds: M must be >= 2");
  std::vector<std::vector<double>> codes(M);
  for (int i = 0; i < M; ++i) codes[i] = encode(synth.random_sample(rng));
  const int p = static_cast<int>(codes[0].size());
  std::vector<double> mean(p, 0.0), stds(p, 0.0);
  for (const auto& c : codes)
    for (int d = 0; d < p; ++d) mean[d] += c[d];
  for (auto& m : mean) m /= M;
  for (const auto& c : codes)
    for (int d = 0; d < p; ++d) stds[d] += (c[d] - mean[d]) * (c[d] - mean[d]);
  for (auto& s : stds) s = std::max(std::sqrt(s / (M - 1)), kStdFloor);
  return stds;
}

std::pair<int, int> collect_pair(int k, const Encoder& encode, const std::vector<double>& stds,
                                 int L, const data::BatchSynthesizer& synth, RngStream& rng) {
  const int p = static_cast<int>(stds.size());
  int value_index = static_cast<int>(rng.next_below(synth.spec().cardinality(k)));

  std::vector<double> mean(p, 0.0), var(p, 0.0);
  std::vector<std::vector<double>> codes(L);
  for (int i = 0; i < L; ++i) {
    codes[i] = encode(synth.fixed_factor_sample(k, value_index, rng));
    if (static_cast<int>(codes[i].size()) != p) throw DimensionMismatch("collect_pair: encoder dim changed");
    for (int d = 0; d < p; ++d) codes[i][d] /= stds[d];
    for (int d = 0; d < p; ++d) mean[d] += codes[i][d];
  }
  for (auto& m : mean) m /= L;
  for (const auto& c : codes)
    for (int d = 0; d < p; ++d) var[d] += (c[d] - mean[d]) * (c[d] - mean[d]);

  int d_min = 0;
  for (int d = 1; d < p; ++d) {
    if (var[d] < var[d_min]) d_min = d;
  }
  return {d_min, k};
}

MetricResult metric_score(const Encoder& encode, const MetricConfig& cfg,
                          const data::BatchSynthesizer& synth, RngStream& rng) {
  cfg.validate();
  std::vector<double> stds = normalization_stds(encode, synth, cfg.M, rng);
  const int p = static_cast<int>(stds.size());

  MetricResult result;
  result.votes = VoteMatrix(p, data::kNumFactors);
  for (int b = 0; b < cfg.B; ++b) {
    int k = static_cast<int>(rng.next_below(data::kNumFactors));
    auto [d, kk] = collect_pair(k, encode, stds, cfg.L, synth, rng);
    result.votes.at(d, kk) += 1;
  }

  int correct = 0;
  for (int t = 0; t < cfg.N; ++t) {
    int k = static_cast<int>(rng.next_below(data::kNumFactors));
    auto [d, kk] = collect_pair(k, encode, stds, cfg.L, synth, rng);
    if (result.votes.assigned_factor(d) == kk) ++correct;
  }
  result.score = static_cast<double>(correct) / cfg.N;
  return result;
}

}  // namespace chyvae::metric

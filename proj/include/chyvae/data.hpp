#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chyvae/rng.hpp"

namespace chyvae::data {

inline constexpr int kNumFactors = 4;

// Ground-truth factor tables. Positions and scale are inclusive linear
// grids; orientation is a periodic grid (step 2*pi/40, endpoint excluded) so
// a half-turn lands exactly on another table entry.
struct FactorSpec {
  std::array<std::vector<double>, kNumFactors> values;  // x, y, scale, orientation

  static FactorSpec standard();
  int cardinality(int k) const { return static_cast<int>(values[k].size()); }
  double value(int k, int index) const;
  static const std::array<const char*, kNumFactors>& names();
};

// Correlation knobs for the two blocks of the 4x4 sampling covariance:
// x-y position and scale-orientation. Unit diagonal throughout.
struct CorrConfig {
  double rho_pos = 0.7;
  double rho_so = 0.7;

  void validate() const;
};

struct ImageSample {
  std::array<int, kNumFactors> indices{};
  std::array<double, kNumFactors> factor_values{};
  std::vector<double> pixels;  // H*W grayscale normalized to [0,1]
};

// The binning rule: floor into equal-width bins over [0,1]; u = 1 lands in
// the top bin.
int floor_bin_unit(double u, int cardinality);

// Draw y ~ N(0, block-diag correlation), clip to [-1,1], rescale to [0,1],
// floor-bin into each factor's equal-width grid. Consumes 4 normal draws.
std::array<int, kNumFactors> sample_factors(const CorrConfig& cfg, const FactorSpec& spec,
                                            RngStream& rng);

// Filled ellipse, 2:1 axis ratio, anti-aliased by 4x4 supersampling of the
// implicit inequality. The margin equals the largest semi-major axis, so no
// position can clip the shape.
std::vector<std::uint8_t> render_ellipse(const std::array<int, kNumFactors>& indices,
                                         const FactorSpec& spec, int height, int width);

struct EllipseDataset {
  int height = 0;
  int width = 0;
  FactorSpec spec;
  std::vector<std::array<std::uint16_t, kNumFactors>> indices;  // per sample
  std::vector<std::uint8_t> pixels;                             // n * height * width

  int count() const { return static_cast<int>(indices.size()); }
  const std::uint8_t* sample_pixels(int i) const;
  // Pixels of sample i normalized to [0,1].
  std::vector<double> sample_pixels01(int i) const;
};

// Deterministic in the seed; sample i draws from a stream derived from
// (seed, i), so any generation order yields identical bytes.
EllipseDataset generate_dataset(int n, const CorrConfig& cfg, const FactorSpec& spec, int height,
                                int width, std::uint64_t seed);

// "CELD" binary format, little-endian:
//   magic 'CELD' | version u16 | height u32 | width u32 | n u32 | K u32 |
//   K cardinalities u32 | factor tables f64 | per sample: K u16 indices,
//   height*width u8 pixels.
void write_dataset(const std::string& path, const EllipseDataset& ds);
EllipseDataset read_dataset(const std::string& path);

// L images with factor k pinned to fixed_value_index; the other factors
// follow their conditional law via rejection on the pinned coordinate's bin.
std::vector<ImageSample> fixed_factor_batch(int k, int L, int fixed_value_index,
                                            const CorrConfig& cfg, const FactorSpec& spec,
                                            int height, int width, RngStream& rng);

// On-the-fly sample source for the metric: random images and fixed-factor
// images at a given resolution.
class BatchSynthesizer {
 public:
  BatchSynthesizer(FactorSpec spec, CorrConfig cfg, int height, int width)
      : spec_(std::move(spec)), cfg_(cfg), height_(height), width_(width) {
    cfg_.validate();
  }

  const FactorSpec& spec() const { return spec_; }
  int height() const { return height_; }
  int width() const { return width_; }

  ImageSample random_sample(RngStream& rng) const;
  ImageSample fixed_factor_sample(int k, int value_index, RngStream& rng) const;

 private:
  FactorSpec spec_;
  CorrConfig cfg_;
  int height_;
  int width_;
};

// Binary 8-bit PGM (P5).
void write_pgm(const std::string& path, int height, int width, const std::vector<std::uint8_t>& pixels);

}  // namespace chyvae::data

#include "chyvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chyvae/binary_io.hpp"

namespace chyvae::data {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr char kMagic[4] = {'C', 'E', 'L', 'D'};
constexpr std::uint16_t kVersion = 1;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// Largest semi-major axis, also used as the position margin.
double max_semi_major(int height, int width) { return 0.1875 * std::min(height, width); }

}  // namespace

int floor_bin_unit(double u, int cardinality) {
  int b = static_cast<int>(std::floor(u * cardinality));
  return std::clamp(b, 0, cardinality - 1);
}

FactorSpec FactorSpec::standard() {
  FactorSpec spec;
  spec.values[0] = linspace(0.0, 1.0, 32);
  spec.values[1] = linspace(0.0, 1.0, 32);
  spec.values[2] = linspace(0.5, 1.0, 6);
  spec.values[3].resize(40);
  for (int i = 0; i < 40; ++i) spec.values[3][i] = kTwoPi * i / 40.0;
  return spec;
}

double FactorSpec::value(int k, int index) const {
  if (k < 0 || k >= kNumFactors) throw DomainError("FactorSpec: factor out of range");
  if (index < 0 || index >= cardinality(k)) throw DomainError("FactorSpec: index out of range");
  return values[k][index];
}

const std::array<const char*, kNumFactors>& FactorSpec::names() {
  static const std::array<const char*, kNumFactors> n = {"x_pos", "y_pos", "scale", "orientation"};
  return n;
}

void CorrConfig::validate() const {
  if (std::abs(rho_pos) >= 1.0 || std::abs(rho_so) >= 1.0) {
    throw DomainError("CorrConfig: correlations must lie in (-1, 1)");
  }
}

std::array<int, kNumFactors> sample_factors(const CorrConfig& cfg, const FactorSpec& spec,
                                            RngStream& rng) {
  cfg.validate();
  double g0 = rng.next_gaussian();
  double g1 = rng.next_gaussian();
  double g2 = rng.next_gaussian();
  double g3 = rng.next_gaussian();
  std::array<double, kNumFactors> y = {
      g0,
      cfg.rho_pos * g0 + std::sqrt(1.0 - cfg.rho_pos * cfg.rho_pos) * g1,
      g2,
      cfg.rho_so * g2 + std::sqrt(1.0 - cfg.rho_so * cfg.rho_so) * g3,
  };
  std::array<int, kNumFactors> indices;
  for (int k = 0; k < kNumFactors; ++k) {
    double clipped = std::clamp(y[k], -1.0, 1.0);
    indices[k] = floor_bin_unit(0.5 * (clipped + 1.0), spec.cardinality(k));
  }
  return indices;
}

std::vector<std::uint8_t> render_ellipse(const std::array<int, kNumFactors>& indices,
                                         const FactorSpec& spec, int height, int width) {
  if (height < 8 || width < 8) throw DomainError("render_ellipse: image too small");
  const double margin = max_semi_major(height, width);
  const double cx = margin + spec.value(0, indices[0]) * (width - 2.0 * margin);
  const double cy = margin + spec.value(1, indices[1]) * (height - 2.0 * margin);
  const double a = spec.value(2, indices[2]) * margin;
  const double b = 0.5 * a;
  const double theta = spec.value(3, indices[3]);
  const double ct = std::cos(theta), st = std::sin(theta);

  // bounding box of the rotated ellipse, padded a pixel for supersampling
  const double half_w = std::sqrt(a * a * ct * ct + b * b * st * st) + 1.0;
  const double half_h = std::sqrt(a * a * st * st + b * b * ct * ct) + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - half_w)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + half_w)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - half_h)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + half_h)));

  std::vector<std::uint8_t> img(static_cast<std::size_t>(height) * width, 0);
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      int inside = 0;
      for (int sy = 0; sy < 4; ++sy) {
        const double dy = py + (sy + 0.5) / 4.0 - cy;
        for (int sx = 0; sx < 4; ++sx) {
          const double dx = px + (sx + 0.5) / 4.0 - cx;
          const double xr = (ct * dx + st * dy) / a;
          const double yr = (-st * dx + ct * dy) / b;
          if (xr * xr + yr * yr <= 1.0) ++inside;
        }
      }
      img[static_cast<std::size_t>(py) * width + px] = static_cast<std::uint8_t>((255 * inside + 8) / 16);
    }
  }
  return img;
}

const std::uint8_t* EllipseDataset::sample_pixels(int i) const {
  return pixels.data() + static_cast<std::size_t>(i) * height * width;
}

std::vector<double> EllipseDataset::sample_pixels01(int i) const {
  const std::uint8_t* p = sample_pixels(i);
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = p[j] / 255.0;
  return out;
}

EllipseDataset generate_dataset(int n, const CorrConfig& cfg, const FactorSpec& spec, int height,
                                int width, std::uint64_t seed) {
  if (n < 1) throw DomainError("generate_dataset: n must be >= 1");
  cfg.validate();
  EllipseDataset ds;
  ds.height = height;
  ds.width = width;
  ds.spec = spec;
  ds.indices.resize(n);
  ds.pixels.resize(static_cast<std::size_t>(n) * height * width);
  RngStream root(seed);
  for (int i = 0; i < n; ++i) {
    RngStream stream = root.derive(static_cast<std::uint64_t>(i));
    auto idx = sample_factors(cfg, spec, stream);
    for (int k = 0; k < kNumFactors; ++k) ds.indices[i][k] = static_cast<std::uint16_t>(idx[k]);
    auto img = render_ellipse(idx, spec, height, width);
    std::copy(img.begin(), img.end(), ds.pixels.begin() + static_cast<std::size_t>(i) * height * width);
  }
  return ds;
}

void write_dataset(const std::string& path, const EllipseDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_dataset: cannot open " + path);
  io::write_bytes(os, kMagic, 4);
  io::write_le<std::uint16_t>(os, kVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.height));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.width));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.count()));
  io::write_le<std::uint32_t>(os, kNumFactors);
  for (int k = 0; k < kNumFactors; ++k) {
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.spec.cardinality(k)));
  }
  for (int k = 0; k < kNumFactors; ++k) io::write_f64_array(os, ds.spec.values[k]);
  for (int i = 0; i < ds.count(); ++i) {
    for (int k = 0; k < kNumFactors; ++k) io::write_le<std::uint16_t>(os, ds.indices[i][k]);
    io::write_bytes(os, ds.sample_pixels(i), static_cast<std::size_t>(ds.height) * ds.width);
  }
  if (!os) throw IoError("write_dataset: write failed");
}

EllipseDataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_dataset: cannot open " + path);
  char magic[4];
  io::read_bytes(is, magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("read_dataset: bad magic");
  auto version = io::read_le<std::uint16_t>(is);
  if (version != kVersion) throw FormatError("read_dataset: unsupported version");
  auto height = io::read_le<std::uint32_t>(is);
  auto width = io::read_le<std::uint32_t>(is);
  auto n = io::read_le<std::uint32_t>(is);
  auto k = io::read_le<std::uint32_t>(is);
  if (height < 8 || height > 4096 || width < 8 || width > 4096 || n < 1 || n > 100000000u ||
      k != kNumFactors) {
    throw FormatError("read_dataset: implausible header");
  }
  EllipseDataset ds;
  ds.height = static_cast<int>(height);
  ds.width = static_cast<int>(width);
  std::array<std::uint32_t, kNumFactors> cards;
  for (auto& c : cards) {
    c = io::read_le<std::uint32_t>(is);
    if (c < 1 || c > 65536) throw FormatError("read_dataset: implausible cardinality");
  }
  for (int f = 0; f < kNumFactors; ++f) {
    ds.spec.values[f].resize(cards[f]);
    io::read_f64_array(is, ds.spec.values[f]);
  }
  ds.indices.resize(n);
  ds.pixels.resize(static_cast<std::size_t>(n) * height * width);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int f = 0; f < kNumFactors; ++f) {
      auto idx = io::read_le<std::uint16_t>(is);
      if (idx >= cards[f]) throw FormatError("read_dataset: factor index out of range");
      ds.indices[i][f] = idx;
    }
    io::read_bytes(is, ds.pixels.data() + static_cast<std::size_t>(i) * height * width,
                   static_cast<std::size_t>(height) * width);
  }
  return ds;
}

std::vector<ImageSample> fixed_factor_batch(int k, int L, int fixed_value_index,
                                            const CorrConfig& cfg, const FactorSpec& spec,
                                            int height, int width, RngStream& rng) {
  if (k < 0 || k >= kNumFactors) throw DomainError("fixed_factor_batch: factor out of range");
  if (fixed_value_index < 0 || fixed_value_index >= spec.cardinality(k)) {
    throw DomainError("fixed_factor_batch: value index out of range");
  }
  std::vector<ImageSample> batch(L);
  for (int i = 0; i < L; ++i) {
    std::array<int, kNumFactors> idx;
    do {
      idx = sample_factors(cfg, spec, rng);
    } while (idx[k] != fixed_value_index);
    ImageSample& s = batch[i];
    s.indices = idx;
    for (int f = 0; f < kNumFactors; ++f) s.factor_values[f] = spec.value(f, idx[f]);
    auto img = render_ellipse(idx, spec, height, width);
    s.pixels.resize(img.size());
    for (std::size_t j = 0; j < img.size(); ++j) s.pixels[j] = img[j] / 255.0;
  }
  return batch;
}

ImageSample BatchSynthesizer::random_sample(RngStream& rng) const {
  ImageSample s;
  s.indices = sample_factors(cfg_, spec_, rng);
  for (int f = 0; f < kNumFactors; ++f) s.factor_values[f] = spec_.value(f, s.indices[f]);
  auto img = render_ellipse(s.indices, spec_, height_, width_);
  s.pixels.resize(img.size());
  for (std::size_t j = 0; j < img.size(); ++j) s.pixels[j] = img[j] / 255.0;
  return s;
}

ImageSample BatchSynthesizer::fixed_factor_sample(int k, int value_index, RngStream& rng) const {
  auto batch = fixed_factor_batch(k, 1, value_index, cfg_, spec_, height_, width_, rng);
  return std::move(batch[0]);
}

void write_pgm(const std::string& path, int height, int width,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionMismatch("write_pgm: pixel count mismatch");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_pgm: cannot open " + path);
  os << "P5\n" << width << " " << height << "\n255\n";
  io::write_bytes(os, pixels.data(), pixels.size());
  if (!os) throw IoError("write_pgm: write failed");
}

}  // namespace chyvae::data

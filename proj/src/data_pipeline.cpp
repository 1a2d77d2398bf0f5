#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "vgan/data.hpp"
#include "vgan/errors.hpp"

namespace vgan {

NormalizationStats compute_stats(const SpectralCube& cube, float lo_pct,
                                 float hi_pct) {
  NormalizationStats stats;
  stats.low.resize(static_cast<std::size_t>(cube.bands));
  stats.high.resize(static_cast<std::size_t>(cube.bands));
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  std::vector<float> band(plane);
  for (int b = 0; b < cube.bands; ++b) {
    for (std::size_t p = 0; p < plane; ++p)
      band[p] = cube.values[p * cube.bands + b];
    std::sort(band.begin(), band.end());
    auto pick = [&](float pct) {
      const std::size_t idx = static_cast<std::size_t>(
          pct / 100.0f * static_cast<float>(plane - 1) + 0.5f);
      return band[std::min(idx, plane - 1)];
    };
    stats.low[static_cast<std::size_t>(b)] = pick(lo_pct);
    stats.high[static_cast<std::size_t>(b)] = pick(hi_pct);
  }
  return stats;
}

float denormalize_value(float v, float low, float high) {
  return (v + 1.0f) * 0.5f * (high - low) + low;
}

TensorF normalize_cube(const SpectralCube& cube, const NormalizationStats& stats) {
  if (static_cast<int>(stats.low.size()) != cube.bands)
    throw DimensionError("normalize_cube: stats band count mismatch");
  TensorF out({cube.height, cube.width, cube.bands});
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  for (int b = 0; b < cube.bands; ++b) {
    const float lo = stats.low[static_cast<std::size_t>(b)];
    const float hi = stats.high[static_cast<std::size_t>(b)];
    if (!(lo < hi)) {
      std::cerr << "warning: degenerate band " << b << " mapped to 0\n";
      for (std::size_t p = 0; p < plane; ++p) out.data[p * cube.bands + b] = 0.0f;
      continue;
    }
    const float scale = 2.0f / (hi - lo);
    for (std::size_t p = 0; p < plane; ++p) {
      const float v = std::clamp(cube.values[p * cube.bands + b], lo, hi);
      out.data[p * cube.bands + b] = (v - lo) * scale - 1.0f;
    }
  }
  return out;
}

TensorF rgb_to_tensor(const RgbImage& img) {
  TensorF t({img.height, img.width, 3});
  for (std::size_t i = 0; i < img.bytes.size(); ++i)
    t.data[i] = static_cast<float>(img.bytes[i]) / 127.5f - 1.0f;
  return t;
}

RgbImage tensor_to_rgb(const TensorF& t) {
  if (t.shape.size() != 3 || t.shape[2] != 3)
    throw DimensionError("tensor_to_rgb: expected [H,W,3]");
  RgbImage img;
  img.height = t.shape[0];
  img.width = t.shape[1];
  img.bytes.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float v = std::clamp((t.data[i] + 1.0f) * 127.5f, 0.0f, 255.0f);
    img.bytes[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return img;
}

namespace {

// Clockwise quarter turn: out[r][c] = in[h-1-c][r].
TensorF rotate90(const TensorF& t) {
  const int h = t.shape[0], w = t.shape[1], c = t.shape[2];
  TensorF out({w, h, c});
  for (int r = 0; r < w; ++r)
    for (int col = 0; col < h; ++col)
      for (int b = 0; b < c; ++b)
        out.data[(static_cast<std::size_t>(r) * h + col) * c + b] =
            t.data[(static_cast<std::size_t>(h - 1 - col) * w + r) * c + b];
  return out;
}

TensorF mirror_cols(const TensorF& t) {
  const int h = t.shape[0], w = t.shape[1], c = t.shape[2];
  TensorF out(t.shape);
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col)
      for (int b = 0; b < c; ++b)
        out.data[(static_cast<std::size_t>(r) * w + col) * c + b] =
            t.data[(static_cast<std::size_t>(r) * w + (w - 1 - col)) * c + b];
  return out;
}

}  // namespace

// k encodes flip-then-rotate: k%4 quarter turns after an optional (k>=4)
// horizontal flip.
TensorF dihedral_transform(const TensorF& t, int k) {
  if (k < 0 || k >= 8) throw DimensionError("dihedral_transform: k in [0,8)");
  TensorF out = (k >= 4) ? mirror_cols(t) : t;
  for (int i = 0; i < k % 4; ++i) out = rotate90(out);
  return out;
}

int dihedral_inverse(int k) {
  if (k < 4) return (4 - k) % 4;
  return k;  // the flipped coset consists of reflections, all involutions
}

PatchSampler::PatchSampler(std::vector<TensorF> sources, int size,
                           unsigned seed, bool augment)
    : sources_(std::move(sources)), size_(size), augment_(augment), rng_(seed) {
  if (sources_.empty()) throw DimensionError("PatchSampler: no sources");
  for (const auto& s : sources_)
    if (s.shape[0] < size_ || s.shape[1] < size_)
      throw DimensionError("PatchSampler: source smaller than patch size " +
                           shape_str(s.shape));
}

TensorF PatchSampler::next() {
  std::uniform_int_distribution<std::size_t> pick(0, sources_.size() - 1);
  const TensorF& src = sources_[pick(rng_)];
  const int h = src.shape[0], w = src.shape[1], c = src.shape[2];
  std::uniform_int_distribution<int> row(0, h - size_), col(0, w - size_);
  const int r0 = row(rng_), c0 = col(rng_);
  TensorF patch({size_, size_, c});
  for (int r = 0; r < size_; ++r)
    for (int cc = 0; cc < size_; ++cc)
      for (int b = 0; b < c; ++b)
        patch.data[(static_cast<std::size_t>(r) * size_ + cc) * c + b] =
            src.data[(static_cast<std::size_t>(r0 + r) * w + c0 + cc) * c + b];
  if (augment_) {
    std::uniform_int_distribution<int> tr(0, 7);
    return dihedral_transform(patch, tr(rng_));
  }
  return patch;
}

std::string PatchSampler::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void PatchSampler::set_rng_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  if (is.fail()) throw FormatError("bad sampler RNG state");
}

SyntheticLift make_lift(int bands, float sigma, unsigned seed) {
  if (bands < 4) throw DimensionError("make_lift: need at least 4 bands");
  SyntheticLift lift;
  lift.bands = bands;
  lift.sigma = sigma;
  lift.seed = seed;
  lift.matrix.resize(static_cast<std::size_t>(bands) * 3);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(0.05f, 1.0f);
  for (auto& v : lift.matrix) v = dist(rng);
  // Column-normalize so each RGB channel contributes unit total weight.
  for (int c = 0; c < 3; ++c) {
    float sum = 0.0f;
    for (int b = 0; b < bands; ++b) sum += lift.matrix[static_cast<std::size_t>(b) * 3 + c];
    for (int b = 0; b < bands; ++b) lift.matrix[static_cast<std::size_t>(b) * 3 + c] /= sum;
  }
  return lift;
}

SpectralCube synthesize_cube(const RgbImage& rgb, const SyntheticLift& lift) {
  if (lift.bands < 4) throw DimensionError("synthesize_cube: bands < 4");
  SpectralCube cube;
  cube.height = rgb.height;
  cube.width = rgb.width;
  cube.bands = lift.bands;
  const std::size_t plane = static_cast<std::size_t>(rgb.height) * rgb.width;
  cube.values.resize(plane * static_cast<std::size_t>(lift.bands));
  std::mt19937 rng(lift.seed ^ 0x9e3779b9u);
  std::normal_distribution<float> noise(0.0f, lift.sigma);
  for (std::size_t p = 0; p < plane; ++p) {
    float rgb01[3];
    for (int c = 0; c < 3; ++c)
      rgb01[c] = static_cast<float>(rgb.bytes[p * 3 + c]) / 255.0f;
    for (int b = 0; b < lift.bands; ++b) {
      float v = 0.0f;
      for (int c = 0; c < 3; ++c)
        v += lift.matrix[static_cast<std::size_t>(b) * 3 + c] * rgb01[c];
      if (lift.sigma > 0.0f) v += noise(rng);
      cube.values[p * static_cast<std::size_t>(lift.bands) + b] = v;
    }
  }
  return cube;
}

RgbImage lift_pseudo_inverse(const SpectralCube& cube, const SyntheticLift& lift) {
  if (cube.bands != lift.bands)
    throw DimensionError("lift_pseudo_inverse: band mismatch");
  const int b = lift.bands;
  // Normal equations: (L^T L) rgb = L^T s, 3x3 solve per pixel.
  double ata[3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < b; ++k)
        ata[i][j] += static_cast<double>(lift.matrix[static_cast<std::size_t>(k) * 3 + i]) *
                     lift.matrix[static_cast<std::size_t>(k) * 3 + j];
  // Invert the 3x3 by cofactors.
  const double det =
      ata[0][0] * (ata[1][1] * ata[2][2] - ata[1][2] * ata[2][1]) -
      ata[0][1] * (ata[1][0] * ata[2][2] - ata[1][2] * ata[2][0]) +
      ata[0][2] * (ata[1][0] * ata[2][1] - ata[1][1] * ata[2][0]);
  if (std::abs(det) < 1e-12) throw DegenerateError("lift matrix is rank-deficient");
  double inv[3][3];
  inv[0][0] = (ata[1][1] * ata[2][2] - ata[1][2] * ata[2][1]) / det;
  inv[0][1] = (ata[0][2] * ata[2][1] - ata[0][1] * ata[2][2]) / det;
  inv[0][2] = (ata[0][1] * ata[1][2] - ata[0][2] * ata[1][1]) / det;
  inv[1][0] = (ata[1][2] * ata[2][0] - ata[1][0] * ata[2][2]) / det;
  inv[1][1] = (ata[0][0] * ata[2][2] - ata[0][2] * ata[2][0]) / det;
  inv[1][2] = (ata[0][2] * ata[1][0] - ata[0][0] * ata[1][2]) / det;
  inv[2][0] = (ata[1][0] * ata[2][1] - ata[1][1] * ata[2][0]) / det;
  inv[2][1] = (ata[0][1] * ata[2][0] - ata[0][0] * ata[2][1]) / det;
  inv[2][2] = (ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0]) / det;

  RgbImage img;
  img.height = cube.height;
  img.width = cube.width;
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  img.bytes.resize(plane * 3);
  for (std::size_t p = 0; p < plane; ++p) {
    double atb[3] = {};
    for (int k = 0; k < b; ++k)
      for (int i = 0; i < 3; ++i)
        atb[i] += static_cast<double>(lift.matrix[static_cast<std::size_t>(k) * 3 + i]) *
                  cube.values[p * static_cast<std::size_t>(b) + k];
    for (int i = 0; i < 3; ++i) {
      double v = 0.0;
      for (int j = 0; j < 3; ++j) v += inv[i][j] * atb[j];
      img.bytes[p * 3 + i] = static_cast<std::uint8_t>(
          std::lround(std::clamp(v * 255.0, 0.0, 255.0)));
    }
  }
  return img;
}

void save_lift_sidecar(const SyntheticLift& lift, const std::string& path) {
  nlohmann::json j;
  j["bands"] = lift.bands;
  j["sigma"] = lift.sigma;
  j["seed"] = lift.seed;
  auto& rows = j["matrix"] = nlohmann::json::array();
  for (int b = 0; b < lift.bands; ++b)
    rows.push_back({lift.matrix[static_cast<std::size_t>(b) * 3],
                    lift.matrix[static_cast<std::size_t>(b) * 3 + 1],
                    lift.matrix[static_cast<std::size_t>(b) * 3 + 2]});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out << j.dump(2) << "\n";
}

SyntheticLift load_lift_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad lift sidecar: " + std::string(e.what()));
  }
  SyntheticLift lift;
  lift.bands = j.at("bands").get<int>();
  lift.sigma = j.at("sigma").get<float>();
  lift.seed = j.at("seed").get<unsigned>();
  for (const auto& row : j.at("matrix"))
    for (const auto& v : row) lift.matrix.push_back(v.get<float>());
  if (static_cast<int>(lift.matrix.size()) != lift.bands * 3)
    throw FormatError("lift sidecar matrix size mismatch");
  return lift;
}

}  // namespace vgan

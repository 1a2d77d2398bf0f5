#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vgan/png_io.hpp"
#include "vgan/tensor.hpp"

namespace vgan {

// H x W x B radiance cube, channel-interleaved in memory. The SPC1 file
// format stores bands sequentially; I/O reorders.
struct SpectralCube {
  int height = 0;
  int width = 0;
  int bands = 0;
  std::vector<float> values;  // [H,W,B] interleaved

  std::size_t size() const { return values.size(); }
  float at(int r, int c, int b) const {
    return values[(static_cast<std::size_t>(r) * width + c) * bands + b];
  }
  TensorF tensor() const { return TensorF({height, width, bands}, values); }
};

// SPC1: magic "SPC1", u32 height/width/bands (little-endian), then
// H*W*B float32 values band-sequential.
SpectralCube load_cube(const std::string& path);
void save_cube(const SpectralCube& cube, const std::string& path);

struct NormalizationStats {
  std::vector<float> low, high;  // per-band clip values, low < high
};

// Per-band percentile clip range (defaults 1..99).
NormalizationStats compute_stats(const SpectralCube& cube, float lo_pct = 1.0f,
                                 float hi_pct = 99.0f);

// Clip to [low, high] then map affinely to [-1,1]. Degenerate bands
// (low == high) map to 0.
TensorF normalize_cube(const SpectralCube& cube, const NormalizationStats& stats);
float denormalize_value(float v, float low, float high);

// RGB byte image <-> [-1,1] float tensor [H,W,3].
TensorF rgb_to_tensor(const RgbImage& img);
RgbImage tensor_to_rgb(const TensorF& t);

// One of the 8 dihedral transforms (4 rotations x optional flip) of an
// [H,W,C] tensor; k in [0,8). k=0 is the identity.
TensorF dihedral_transform(const TensorF& t, int k);
int dihedral_inverse(int k);

// Uniform random patches with optional dihedral augmentation. Draws are
// with replacement; deterministic given the seed.
class PatchSampler {
 public:
  PatchSampler(std::vector<TensorF> sources, int size, unsigned seed,
               bool augment = true);

  TensorF next();

  std::string rng_state() const;
  void set_rng_state(const std::string& state);

 private:
  std::vector<TensorF> sources_;
  int size_;
  bool augment_;
  std::mt19937 rng_;
};

// Tiles the normalized cube into non-overlapping patches (reflect-padded
// to a tile multiple), runs `forward` on each, and crops back. `forward`
// maps [tile,tile,B] -> [tile,tile,3] in (-1,1).
template <typename ForwardFn>
TensorF stitch_tiles(const TensorF& cube, ForwardFn&& forward, int tile = 128);

struct SyntheticLift {
  std::vector<float> matrix;  // bands x 3, row-major, non-negative
  int bands = 0;
  float sigma = 0.0f;
  unsigned seed = 0;
};

SyntheticLift make_lift(int bands, float sigma, unsigned seed);

// Per pixel: spectrum = lift * rgb + Gaussian noise. RGB values in [0,1].
SpectralCube synthesize_cube(const RgbImage& rgb, const SyntheticLift& lift);

// Least-squares pseudo-inverse recovery of the RGB source (test oracle).
RgbImage lift_pseudo_inverse(const SpectralCube& cube, const SyntheticLift& lift);

void save_lift_sidecar(const SyntheticLift& lift, const std::string& path);
SyntheticLift load_lift_sidecar(const std::string& path);

// --- implementation of the template ---

namespace detail {
// Reflect index into [0, n) without repeating the edge sample.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}
}  // namespace detail

template <typename ForwardFn>
TensorF stitch_tiles(const TensorF& cube, ForwardFn&& forward, int tile) {
  const int h = cube.shape[0], w = cube.shape[1], ch = cube.shape[2];
  const int ph = (h + tile - 1) / tile * tile;
  const int pw = (w + tile - 1) / tile * tile;
  TensorF out({h, w, 3});
  for (int tr = 0; tr < ph; tr += tile)
    for (int tc = 0; tc < pw; tc += tile) {
      TensorF patch({tile, tile, ch});
      for (int r = 0; r < tile; ++r)
        for (int c = 0; c < tile; ++c) {
          const int sr = detail::reflect(tr + r, h);
          const int sc = detail::reflect(tc + c, w);
          for (int b = 0; b < ch; ++b)
            patch.data[(static_cast<std::size_t>(r) * tile + c) * ch + b] =
                cube.data[(static_cast<std::size_t>(sr) * w + sc) * ch + b];
        }
      const TensorF vis = forward(patch);
      for (int r = 0; r < tile; ++r) {
        if (tr + r >= h) break;
        for (int c = 0; c < tile; ++c) {
          if (tc + c >= w) continue;
          for (int b = 0; b < 3; ++b)
            out.data[(static_cast<std::size_t>(tr + r) * w + tc + c) * 3 + b] =
                vis.data[(static_cast<std::size_t>(r) * tile + c) * 3 + b];
        }
      }
    }
  return out;
}

}  // namespace vgan

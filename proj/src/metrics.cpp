#include "vgan/metrics.hpp"

#include <array>
#include <cmath>
#include <random>

#include "vgan/errors.hpp"

namespace vgan {

double entropy(const RgbImage& img) {
  const std::size_t npix = static_cast<std::size_t>(img.height) * img.width;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t p = 0; p < npix; ++p) ++hist[img.bytes[p * 3 + c]];
    double h = 0.0;
    for (std::size_t count : hist) {
      if (count == 0) continue;
      const double prob = static_cast<double>(count) / static_cast<double>(npix);
      h -= prob * std::log(prob);
    }
    total += h;
  }
  return total / 3.0;
}

double rmse(const RgbImage& vis, const RgbImage& truth) {
  if (vis.height != truth.height || vis.width != truth.width)
    throw DimensionError("rmse: image dimensions differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < vis.bytes.size(); ++i) {
    const double d = static_cast<double>(vis.bytes[i]) - truth.bytes[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(vis.bytes.size()));
}

namespace {

double pearson(const RgbImage& img, int a, int b) {
  const std::size_t npix = static_cast<std::size_t>(img.height) * img.width;
  double ma = 0.0, mb = 0.0;
  for (std::size_t p = 0; p < npix; ++p) {
    ma += img.bytes[p * 3 + a];
    mb += img.bytes[p * 3 + b];
  }
  ma /= static_cast<double>(npix);
  mb /= static_cast<double>(npix);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t p = 0; p < npix; ++p) {
    const double da = img.bytes[p * 3 + a] - ma;
    const double db = img.bytes[p * 3 + b] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    throw DegenerateError("corr undefined: channel " +
                          std::string(1, "RGB"[va == 0.0 ? a : b]) +
                          " has zero variance");
  return cov / std::sqrt(va * vb);
}

double pixel_distance(const RgbImage& img, std::size_t p, std::size_t q) {
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = static_cast<double>(img.bytes[p * 3 + c]) -
                     img.bytes[q * 3 + c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double corr(const RgbImage& img) {
  return (pearson(img, 0, 1) + pearson(img, 0, 2) + pearson(img, 2, 1)) / 3.0;
}

double separability_exact(const RgbImage& img) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  if (n < 2) throw DimensionError("separability: need at least 2 pixels");
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) acc += pixel_distance(img, p, q);
  const double nm1 = static_cast<double>(n - 1);
  return 2.0 * acc / (nm1 * nm1);  // ordered pairs over (N-1)^2
}

double separability_sampled(const RgbImage& img, long samples, unsigned seed) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  if (n < 2) throw DimensionError("separability: need at least 2 pixels");
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double acc = 0.0;
  for (long i = 0; i < samples; ++i) {
    std::size_t p = pick(rng), q = pick(rng);
    while (q == p) q = pick(rng);
    acc += pixel_distance(img, p, q);
  }
  const double mean = acc / static_cast<double>(samples);
  const double nd = static_cast<double>(n);
  return mean * nd * (nd - 1.0) / ((nd - 1.0) * (nd - 1.0));
}

MetricReport evaluate(const RgbImage& vis, const RgbImage* truth,
                      bool exact_separability, long samples, unsigned seed) {
  MetricReport report;
  report.entropy = entropy(vis);
  if (truth != nullptr) report.rmse = rmse(vis, *truth);
  report.corr = corr(vis);
  report.separability_exact = exact_separability;
  if (exact_separability) {
    report.separability = vgan::separability_exact(vis);
  } else {
    report.separability = separability_sampled(vis, samples, seed);
    report.separability_samples = samples;
    report.separability_seed = seed;
  }
  return report;
}

}  // namespace vgan

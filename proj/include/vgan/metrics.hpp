#pragma once

#include <optional>
#include <string>

#include "vgan/errors.hpp"
#include "vgan/png_io.hpp"

namespace vgan {

struct MetricReport {
  double entropy = 0.0;                // nats, mean over channels
  std::optional<double> rmse;          // byte scale; absent without a truth image
  double corr = 0.0;                   // mean Pearson over RGB channel pairs
  double separability = 0.0;           // byte-scale average pairwise distance
  bool separability_exact = true;
  long separability_samples = 0;
  unsigned separability_seed = 0;
};

// Mean over channels of -sum p ln p over the 256-bin intensity histogram.
double entropy(const RgbImage& img);

// Root of the mean squared per-sample difference, over pixels and channels.
double rmse(const RgbImage& vis, const RgbImage& truth);

// Mean Pearson correlation of the (R,G), (R,B), (B,G) channel pairs.
double corr(const RgbImage& img);

// Average pairwise RGB Euclidean distance over ordered distinct pairs with
// the (N-1)^2 normalization. Exact mode is quadratic; sampled mode is an
// unbiased Monte-Carlo estimate rescaled to the same normalization.
double separability_exact(const RgbImage& img);
double separability_sampled(const RgbImage& img, long samples, unsigned seed);

MetricReport evaluate(const RgbImage& vis, const RgbImage* truth,
                      bool exact_separability, long samples, unsigned seed);

}  // namespace vgan

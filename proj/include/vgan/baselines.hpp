#pragma once

#include <vector>

#include "vgan/data.hpp"
#include "vgan/png_io.hpp"

namespace vgan {

struct BandSelection {
  std::vector<int> indices;       // selection order
  std::vector<double> residuals;  // greedy prediction residual per step
};

// Greedy linear-prediction band selection: max-variance seed, then the
// band least correlated with it, then bands maximizing the least-squares
// residual when predicted from the selected set. Ties break to the lowest
// band index.
BandSelection lp_band_select(const SpectralCube& cube, int k = 3);

// Renders a selection (wavelength order -> R,G,B) with a percentile stretch.
RgbImage render_band_selection(const SpectralCube& cube,
                               const BandSelection& sel);

// CIE 1964 10-degree color matching functions stretched across the cube's
// band range, XYZ -> sRGB.
RgbImage stretched_cmf(const SpectralCube& cube);

// Top-3 principal components of the pixel spectra as R,G,B with a 2-98
// percentile stretch.
RgbImage pca_false_color(const SpectralCube& cube);

}  // namespace vgan

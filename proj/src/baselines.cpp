#include "vgan/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "vgan/errors.hpp"

namespace vgan {

namespace {

std::vector<double> band_values(const SpectralCube& cube, int b) {
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  std::vector<double> v(plane);
  for (std::size_t p = 0; p < plane; ++p)
    v[p] = cube.values[p * static_cast<std::size_t>(cube.bands) + b];
  return v;
}

double variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

// Residual sum of squares of predicting `target` from the selected bands
// plus an intercept.
double prediction_residual(const SpectralCube& cube,
                           const std::vector<int>& selected, int target) {
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  const int k = static_cast<int>(selected.size());
  Eigen::MatrixXd design(plane, k + 1);
  Eigen::VectorXd y(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    design(static_cast<Eigen::Index>(p), 0) = 1.0;
    for (int j = 0; j < k; ++j)
      design(static_cast<Eigen::Index>(p), j + 1) =
          cube.values[p * static_cast<std::size_t>(cube.bands) + selected[static_cast<std::size_t>(j)]];
    y(static_cast<Eigen::Index>(p)) =
        cube.values[p * static_cast<std::size_t>(cube.bands) + target];
  }
  const Eigen::VectorXd coef =
      design.colPivHouseholderQr().solve(y);
  return (design * coef - y).squaredNorm();
}

// 2-98 percentile stretch of one channel plane to bytes.
void stretch_into(const std::vector<double>& plane, RgbImage& img, int channel,
                  double lo_pct = 2.0, double hi_pct = 98.0) {
  std::vector<double> sorted = plane;
  std::sort(sorted.begin(), sorted.end());
  auto pick = [&](double pct) {
    const std::size_t idx = static_cast<std::size_t>(
        pct / 100.0 * static_cast<double>(sorted.size() - 1) + 0.5);
    return sorted[std::min(idx, sorted.size() - 1)];
  };
  const double lo = pick(lo_pct), hi = pick(hi_pct);
  const double scale = (hi > lo) ? 255.0 / (hi - lo) : 0.0;
  for (std::size_t p = 0; p < plane.size(); ++p) {
    const double v = std::clamp((plane[p] - lo) * scale, 0.0, 255.0);
    img.bytes[p * 3 + static_cast<std::size_t>(channel)] =
        static_cast<std::uint8_t>(std::lround(v));
  }
}

// CIE 1964 10-degree color matching functions, 360-830 nm at 10 nm steps.
constexpr int kCmfCount = 48;
constexpr double kCmf[kCmfCount][3] = {
    {0.000000, 0.000000, 0.000000},  // 360
    {0.000000, 0.000000, 0.000001},  // 370
    {0.000160, 0.000017, 0.000705},  // 380
    {0.002362, 0.000253, 0.010482},  // 390
    {0.019110, 0.002004, 0.086011},  // 400
    {0.084736, 0.008756, 0.389366},  // 410
    {0.204492, 0.021391, 0.972542},  // 420
    {0.314679, 0.038676, 1.553480},  // 430
    {0.383734, 0.062077, 1.967280},  // 440
    {0.370702, 0.089456, 1.994800},  // 450
    {0.302273, 0.128201, 1.745370},  // 460
    {0.195618, 0.185190, 1.317560},  // 470
    {0.080507, 0.253589, 0.772125},  // 480
    {0.016172, 0.339133, 0.415254},  // 490
    {0.003816, 0.460777, 0.218502},  // 500
    {0.037465, 0.606741, 0.112044},  // 510
    {0.117749, 0.761757, 0.060709},  // 520
    {0.236491, 0.875211, 0.030451},  // 530
    {0.376772, 0.961988, 0.013676},  // 540
    {0.529826, 0.991761, 0.003988},  // 550
    {0.705224, 0.997340, 0.000000},  // 560
    {0.878655, 0.955552, 0.000000},  // 570
    {1.014160, 0.868934, 0.000000},  // 580
    {1.118520, 0.777405, 0.000000},  // 590
    {1.123990, 0.658341, 0.000000},  // 600
    {1.030480, 0.527963, 0.000000},  // 610
    {0.856297, 0.398057, 0.000000},  // 620
    {0.647467, 0.283493, 0.000000},  // 630
    {0.431567, 0.179828, 0.000000},  // 640
    {0.268329, 0.107633, 0.000000},  // 650
    {0.152568, 0.060281, 0.000000},  // 660
    {0.081261, 0.031800, 0.000000},  // 670
    {0.040851, 0.015905, 0.000000},  // 680
    {0.019941, 0.007749, 0.000000},  // 690
    {0.009577, 0.003718, 0.000000},  // 700
    {0.004553, 0.001768, 0.000000},  // 710
    {0.002175, 0.000846, 0.000000},  // 720
    {0.001045, 0.000407, 0.000000},  // 730
    {0.000508, 0.000199, 0.000000},  // 740
    {0.000251, 0.000098, 0.000000},  // 750
    {0.000126, 0.000050, 0.000000},  // 760
    {0.000064, 0.000025, 0.000000},  // 770
    {0.000033, 0.000013, 0.000000},  // 780
    {0.000017, 0.000007, 0.000000},  // 790
    {0.000009, 0.000003, 0.000000},  // 800
    {0.000005, 0.000002, 0.000000},  // 810
    {0.000002, 0.000001, 0.000000},  // 820
    {0.000001, 0.000000, 0.000000},  // 830
};

double srgb_encode(double linear) {
  linear = std::clamp(linear, 0.0, 1.0);
  return linear <= 0.0031308 ? 12.92 * linear
                             : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

}  // namespace

BandSelection lp_band_select(const SpectralCube& cube, int k) {
  if (k < 1 || k > cube.bands)
    throw DimensionError("lp_band_select: k out of range");
  BandSelection sel;
  std::vector<bool> taken(static_cast<std::size_t>(cube.bands), false);

  // Seed 1: maximum spatial variance.
  int best = 0;
  double best_score = -1.0;
  for (int b = 0; b < cube.bands; ++b) {
    const double v = variance(band_values(cube, b));
    if (v > best_score) {
      best_score = v;
      best = b;
    }
  }
  sel.indices.push_back(best);
  sel.residuals.push_back(best_score);
  taken[static_cast<std::size_t>(best)] = true;

  // Seed 2: minimum absolute correlation with the first band.
  if (k >= 2) {
    const auto first = band_values(cube, sel.indices[0]);
    best = -1;
    best_score = std::numeric_limits<double>::infinity();
    for (int b = 0; b < cube.bands; ++b) {
      if (taken[static_cast<std::size_t>(b)]) continue;
      const double c = std::abs(correlation(first, band_values(cube, b)));
      if (c < best_score) {
        best_score = c;
        best = b;
      }
    }
    sel.indices.push_back(best);
    sel.residuals.push_back(best_score);
    taken[static_cast<std::size_t>(best)] = true;
  }

  // Remaining bands: greedy maximum linear-prediction residual.
  while (static_cast<int>(sel.indices.size()) < k) {
    best = -1;
    best_score = -1.0;
    for (int b = 0; b < cube.bands; ++b) {
      if (taken[static_cast<std::size_t>(b)]) continue;
      const double r = prediction_residual(cube, sel.indices, b);
      if (r > best_score + 1e-12) {
        best_score = r;
        best = b;
      }
    }
    sel.indices.push_back(best);
    sel.residuals.push_back(best_score);
    taken[static_cast<std::size_t>(best)] = true;
  }
  return sel;
}

RgbImage render_band_selection(const SpectralCube& cube,
                               const BandSelection& sel) {
  if (sel.indices.size() < 3)
    throw DimensionError("render_band_selection: need 3 bands");
  std::vector<int> ordered(sel.indices.begin(), sel.indices.begin() + 3);
  std::sort(ordered.begin(), ordered.end());  // wavelength order -> R,G,B
  RgbImage img;
  img.height = cube.height;
  img.width = cube.width;
  img.bytes.resize(static_cast<std::size_t>(cube.height) * cube.width * 3);
  for (int c = 0; c < 3; ++c)
    stretch_into(band_values(cube, ordered[static_cast<std::size_t>(c)]), img, c);
  return img;
}

RgbImage stretched_cmf(const SpectralCube& cube) {
  if (cube.bands < 3) throw DimensionError("stretched_cmf: need >= 3 bands");
  const int nb = cube.bands;
  // Resample the table so its domain spans band indices 0..B-1, then
  // normalize each channel's weights to unit sum.
  std::vector<double> w(static_cast<std::size_t>(nb) * 3);
  for (int b = 0; b < nb; ++b) {
    const double pos = (nb == 1) ? 0.0
                                 : static_cast<double>(b) * (kCmfCount - 1) /
                                       static_cast<double>(nb - 1);
    const int i0 = std::min(static_cast<int>(pos), kCmfCount - 2);
    const double frac = pos - i0;
    for (int c = 0; c < 3; ++c)
      w[static_cast<std::size_t>(b) * 3 + c] =
          kCmf[i0][c] * (1.0 - frac) + kCmf[i0 + 1][c] * frac;
  }
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (int b = 0; b < nb; ++b) sum += w[static_cast<std::size_t>(b) * 3 + c];
    if (sum > 0.0)
      for (int b = 0; b < nb; ++b) w[static_cast<std::size_t>(b) * 3 + c] /= sum;
  }

  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;
  RgbImage img;
  img.height = cube.height;
  img.width = cube.width;
  img.bytes.resize(plane * 3);
  // XYZ -> linear sRGB (D65).
  constexpr double kXyzToRgb[3][3] = {{3.2406, -1.5372, -0.4986},
                                      {-0.9689, 1.8758, 0.0415},
                                      {0.0557, -0.2040, 1.0570}};
  for (std::size_t p = 0; p < plane; ++p) {
    double xyz[3] = {};
    for (int b = 0; b < nb; ++b) {
      const double v = cube.values[p * static_cast<std::size_t>(nb) + b];
      for (int c = 0; c < 3; ++c) xyz[c] += w[static_cast<std::size_t>(b) * 3 + c] * v;
    }
    for (int c = 0; c < 3; ++c) {
      double lin = 0.0;
      for (int j = 0; j < 3; ++j) lin += kXyzToRgb[c][j] * xyz[j];
      img.bytes[p * 3 + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::lround(srgb_encode(lin) * 255.0));
    }
  }
  return img;
}

RgbImage pca_false_color(const SpectralCube& cube) {
  if (cube.bands < 3) throw DimensionError("pca_false_color: need >= 3 bands");
  const int nb = cube.bands;
  const std::size_t plane = static_cast<std::size_t>(cube.height) * cube.width;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(nb);
  for (std::size_t p = 0; p < plane; ++p)
    for (int b = 0; b < nb; ++b)
      mean(b) += cube.values[p * static_cast<std::size_t>(nb) + b];
  mean /= static_cast<double>(plane);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd centered(nb);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int b = 0; b < nb; ++b)
      centered(b) = cube.values[p * static_cast<std::size_t>(nb) + b] - mean(b);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov /= static_cast<double>(plane);
  cov = cov.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw DegenerateError("pca_false_color: eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = evals(nb - 1);
  if (top <= 0.0 || evals(nb - 3) <= 1e-10 * top)
    throw DegenerateError("pca_false_color: covariance rank below 3");

  RgbImage img;
  img.height = cube.height;
  img.width = cube.width;
  img.bytes.resize(plane * 3);
  std::vector<double> channel(plane);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd pc = solver.eigenvectors().col(nb - 1 - c);
    // Sign convention: non-negative correlation with the band mean.
    const double align = pc.dot(mean);
    if (align < 0.0 || (align == 0.0 && pc(0) < 0.0)) pc = -pc;
    for (std::size_t p = 0; p < plane; ++p) {
      double proj = 0.0;
      for (int b = 0; b < nb; ++b)
        proj += pc(b) * (cube.values[p * static_cast<std::size_t>(nb) + b] - mean(b));
      channel[p] = proj;
    }
    stretch_into(channel, img, c);
  }
  return img;
}

}  // namespace vgan

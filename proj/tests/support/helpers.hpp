#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/label_model.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/normalization.hpp"

namespace testing {

using namespace noisylab;

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return uniform() < p; }

  BinaryMatrix labels(Index f, Index d, double p = 0.4) {
    BinaryMatrix m(f, d);
    for (Index k = 0; k < m.size(); ++k) m(k) = coin(p);
    return m;
  }
  // Every column holds both values.
  BinaryMatrix mixed_labels(Index f, Index d) {
    BinaryMatrix m = labels(f, d);
    for (Index c = 0; c < d; ++c) {
      m(0, c) = 1;
      m(1, c) = 0;
    }
    return m;
  }
  BoolMatrix mask(Index f, Index d, double p = 0.8) {
    BoolMatrix m(f, d);
    for (Index k = 0; k < m.size(); ++k) m(k) = coin(p);
    return m;
  }
  Eigen::MatrixXd probabilities(Index f, Index d) {
    Eigen::MatrixXd m(f, d);
    for (Index k = 0; k < m.size(); ++k) m(k) = uniform(0.02, 0.98);
    return m;
  }
};

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline CorrelationStats random_correlation(Gen& g, Index d) {
  CorrelationStats s;
  Eigen::MatrixXd a(d, d);
  for (Index k = 0; k < a.size(); ++k) a(k) = g.uniform(-0.3, 0.3);
  s.covariance = a * a.transpose() / static_cast<double>(d);
  s.stddevs = s.covariance.diagonal().cwiseSqrt();
  s.pearson = s.covariance.array() / (s.stddevs * s.stddevs.transpose()).array();
  s.means = Eigen::VectorXd::Constant(d, 0.3);
  s.zero_variance.assign(static_cast<std::size_t>(d), false);
  return s;
}

inline NoiseProfile random_noise(Gen& g, Index d, double lambda = 0.1) {
  Eigen::VectorXd sens(d), spec(d);
  for (Index c = 0; c < d; ++c) {
    sens(c) = g.uniform(0.1, 0.9);
    spec(c) = g.uniform(0.8, 0.99);
  }
  return NoiseProfile::from_rates(sens, spec, lambda);
}

inline SpatialLabelMatrix random_spatial(Gen& g, Index f, Index d) {
  SpatialLabelMatrix s;
  s.labels = g.labels(f, SpatialLabelMatrix::kClasses);
  s.available = g.mask(f, d, 0.3);
  s.available(0, 0) = true;
  s.labels(0, 0) = 1;
  s.labels(1, 0) = 0;
  s.available(1, 0) = true;
  for (Index c = 0; c < SpatialLabelMatrix::kClasses; ++c) {
    s.labels(0, c) = 1;
    s.labels(1, c) = 0;
  }
  return s;
}

// Targets for every head with random priors; segmentation has `seg_outputs` columns.
inline LossTargets<double> random_targets(Gen& g, Index f, Index d, Index seg_outputs) {
  LossTargets<double> t;
  t.labels = g.mixed_labels(std::max<Index>(f, 2), d).topRows(f);
  t.mask = BoolMatrix::Constant(f, d, true);
  t.weights = compute_class_weights(g.mixed_labels(20, d), BoolMatrix::Constant(20, d, true));
  t.noise = random_noise(g, d);
  t.correlation = random_correlation(g, d);
  t.spatial.labels = g.labels(f, SpatialLabelMatrix::kClasses);
  t.spatial.available = g.mask(f, d, 0.5);
  t.spatial.available(0, 0) = true;
  t.spatial_weights = ClassWeights::uniform(SpatialLabelMatrix::kClasses);
  t.segmentation = g.probabilities(f, seg_outputs);
  return t;
}

// Loss inputs over F samples and D classes with random masks and priors.
struct Instance {
  Eigen::MatrixXd p;
  BinaryMatrix y;
  BoolMatrix mask;
  ClassWeights w;
  NoiseProfile noise;
  CorrelationStats corr;
};

inline Instance random_instance(Gen& g, Index f, Index d) {
  Instance in;
  in.p = g.probabilities(f, d);
  in.y = g.labels(f, d);
  in.mask = g.mask(f, d);
  in.w = compute_class_weights(in.y, in.mask);
  in.noise = random_noise(g, d, g.uniform(0.0, 0.5));
  if (d > 1 && g.coin(0.3)) in.noise.active[0] = false;
  in.corr = random_correlation(g, d);
  return in;
}

// Mixtures of a few Gaussian blobs with occasional saturated outliers.
inline GrayImage<double> random_image(Gen& g) {
  const int rows = g.integer(8, 40);
  const int cols = g.integer(8, 40);
  const int modes = g.integer(1, 3);
  std::vector<double> centre(static_cast<std::size_t>(modes)), spread(static_cast<std::size_t>(modes));
  for (int m = 0; m < modes; ++m) {
    centre[static_cast<std::size_t>(m)] = g.uniform(200, 3000);
    spread[static_cast<std::size_t>(m)] = g.uniform(20, 400);
  }
  GrayImage<double> img(rows, cols);
  for (Index k = 0; k < img.size(); ++k) {
    const auto m = static_cast<std::size_t>(g.integer(0, modes - 1));
    img(k) = std::max(0.0, centre[m] + spread[m] * g.normal());
    if (g.coin(0.01)) img(k) = g.uniform(0, 4095);
  }
  return img;
}

inline double window_tolerance(const WindowBounds& b, const GrayImage<double>& img) {
  const double bin = (img.maxCoeff() - img.minCoeff()) / kHistogramBins;
  return bin / (b.b_high - b.b_low) + 1e-9;
}

// Binormal scores with labels; both classes present.
struct Scored {
  Eigen::VectorXd s;
  Eigen::VectorXi y;
};

// Scores with coarse rounding so ties are common.
inline Scored random_scored(Gen& g, Index n, double shift = 0.5, bool ties = true) {
  Scored out{Eigen::VectorXd(n), Eigen::VectorXi(n)};
  for (Index i = 0; i < n; ++i) {
    out.y(i) = g.coin(0.4);
    double v = g.normal() + shift * out.y(i);
    if (ties) v = std::round(v * 4.0) / 4.0;
    out.s(i) = v;
  }
  out.y(0) = 1;
  out.y(1) = 0;
  return out;
}

}  // namespace testing

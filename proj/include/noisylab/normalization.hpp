#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/error.hpp"

namespace noisylab {

/// Grayscale image, rows = height. Intensities are finite and nonnegative.
template <typename Scalar>
using GrayImage = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kHistogramBins = 256;

using BinCounts = Eigen::Array<std::int64_t, kHistogramBins, 1>;
using BinValues = Eigen::Array<double, kHistogramBins, 1>;

/// 256 uniform bins over [lo, hi]; left-closed, right-open, last bin closed.
struct Histogram {
  BinCounts counts = BinCounts::Zero();
  double lo = 0.0;
  double hi = 0.0;
  bool constant = false;

  double bin_width() const { return (hi - lo) / kHistogramBins; }
  int occupied_bins() const { return static_cast<int>((counts > 0).count()); }
};

struct WindowConfig {
  double tau = 0.001;
  int median_width = 5;
  double gauss_sigma = 2.0;
};

struct WindowBounds {
  double b_low = 0.0;
  double b_high = 1.0;
  int bin_low = 0;
  int bin_high = kHistogramBins - 1;
  BinCounts histogram_raw = BinCounts::Zero();
  BinValues histogram_smoothed = BinValues::Zero();
  /// The filtered histogram had no mass above threshold; bounds come from the
  /// raw occupied range instead.
  bool raw_fallback = false;
};

template <typename Scalar>
void check_image(const GrayImage<Scalar>& image) {
  if (image.size() == 0) {
    throw DataError("image is empty");
  }
  if (!image.isFinite().all() || (image < Scalar(0)).any()) {
    throw DataError("image intensities must be finite and nonnegative");
  }
}

template <typename Scalar>
Histogram build_histogram(const GrayImage<Scalar>& image) {
  check_image(image);
  Histogram h;
  h.lo = static_cast<double>(image.minCoeff());
  h.hi = static_cast<double>(image.maxCoeff());
  if (!(h.hi > h.lo)) {
    h.constant = true;
    h.counts(0) = image.size();
    return h;
  }
  const double scale = kHistogramBins / (h.hi - h.lo);
  for (Eigen::Index k = 0; k < image.size(); ++k) {
    const double x = static_cast<double>(image(k));
    const int bin = std::min(kHistogramBins - 1, static_cast<int>(std::floor((x - h.lo) * scale)));
    ++h.counts(std::max(bin, 0));
  }
  return h;
}

/// Median over a window of `width` bins, truncated at the ends; even-sized
/// windows take the mean of the two middle values.
inline BinValues median_filter(const BinValues& in, int width) {
  if (width <= 1) {
    return in;
  }
  const int half = width / 2;
  BinValues out;
  std::vector<double> window;
  for (int k = 0; k < kHistogramBins; ++k) {
    window.clear();
    for (int j = std::max(0, k - half); j <= std::min(kHistogramBins - 1, k + half); ++j) {
      window.push_back(in(j));
    }
    std::sort(window.begin(), window.end());
    const std::size_t n = window.size();
    out(k) = n % 2 ? window[n / 2] : 0.5 * (window[n / 2 - 1] + window[n / 2]);
  }
  return out;
}

/// Gaussian smoothing with a kernel truncated at 3 sigma and renormalized at the ends.
inline BinValues gaussian_filter(const BinValues& in, double sigma) {
  if (!(sigma > 0.0)) {
    return in;
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int j = -radius; j <= radius; ++j) {
    kernel[static_cast<std::size_t>(j + radius)] = std::exp(-0.5 * j * j / (sigma * sigma));
  }
  BinValues out;
  for (int k = 0; k < kHistogramBins; ++k) {
    double acc = 0.0;
    double norm = 0.0;
    for (int j = -radius; j <= radius; ++j) {
      const int idx = k + j;
      if (idx < 0 || idx >= kHistogramBins) {
        continue;
      }
      const double w = kernel[static_cast<std::size_t>(j + radius)];
      acc += w * in(idx);
      norm += w;
    }
    out(k) = acc / norm;
  }
  return out;
}

/// Median filter, Gaussian smoothing, then an inward scan from both ends for the
/// first bin above `tau * max`. The bounds are the outer edges of those bins.
inline WindowBounds detect_bounds(const Histogram& histogram, const WindowConfig& config = {}) {
  if (histogram.constant || histogram.occupied_bins() < 2) {
    throw DegenerateHistogram("histogram needs at least two occupied bins");
  }
  if (!(config.tau >= 0.0) || config.tau >= 1.0) {
    throw UsageError("tau must lie in [0, 1)");
  }
  WindowBounds wb;
  wb.histogram_raw = histogram.counts;
  wb.histogram_smoothed =
      gaussian_filter(median_filter(histogram.counts.cast<double>(), config.median_width), config.gauss_sigma);

  const BinValues& s = wb.histogram_smoothed;
  const double threshold = config.tau * s.maxCoeff();
  int low = -1;
  int high = -1;
  if (s.maxCoeff() > 0.0) {
    for (int k = 0; k < kHistogramBins; ++k) {
      if (s(k) > threshold) {
        low = k;
        break;
      }
    }
    for (int k = kHistogramBins - 1; k >= 0; --k) {
      if (s(k) > threshold) {
        high = k;
        break;
      }
    }
  }
  if (low < 0) {
    wb.raw_fallback = true;
    for (int k = 0; k < kHistogramBins; ++k) {
      if (histogram.counts(k) > 0) {
        high = k;
        if (low < 0) {
          low = k;
        }
      }
    }
  }
  wb.bin_low = low;
  wb.bin_high = high;
  const double width = histogram.bin_width();
  wb.b_low = histogram.lo + low * width;
  wb.b_high = high + 1 == kHistogramBins ? histogram.hi : histogram.lo + (high + 1) * width;
  return wb;
}

/// clamp((I - b_low) / (b_high - b_low), 0, 1)
template <typename Scalar>
GrayImage<Scalar> apply_window(const GrayImage<Scalar>& image, const WindowBounds& bounds) {
  if (!(bounds.b_high > bounds.b_low)) {
    throw DataError("window needs b_low < b_high");
  }
  const Scalar low = static_cast<Scalar>(bounds.b_low);
  const Scalar span = static_cast<Scalar>(bounds.b_high - bounds.b_low);
  return ((image - low) / span).max(Scalar(0)).min(Scalar(1));
}

template <typename Scalar>
GrayImage<Scalar> normalize(const GrayImage<Scalar>& image, const WindowConfig& config = {},
                            WindowBounds* bounds_out = nullptr) {
  const WindowBounds bounds = detect_bounds(build_histogram(image), config);
  if (bounds_out) {
    *bounds_out = bounds;
  }
  return apply_window(image, bounds);
}

}  // namespace noisylab

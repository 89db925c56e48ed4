#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/error.hpp"
#include "noisylab/label_model.hpp"

namespace noisylab {

/// Probabilities are clamped to [eps, 1 - eps] before any logarithm. Gradients
/// are evaluated at the clamped value and passed straight through.
inline constexpr double kProbabilityClamp = 1e-7;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Predictions {
  MatrixX<Scalar> abnormality;   // F x D
  MatrixX<Scalar> spatial;       // F x 9
  MatrixX<Scalar> segmentation;  // F x 2*N'*N'
};

/// Loss value and its gradient with respect to the model outputs. Gradients a
/// loss does not touch are left empty. Values are sums over samples; when
/// `normalizer` is not 1 the value and gradients have been divided by it.
template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  MatrixX<Scalar> grad_abnormality;
  MatrixX<Scalar> grad_spatial;
  MatrixX<Scalar> grad_segmentation;
  VectorX<Scalar> per_class;
  Scalar normalizer = 1;

  void divide_by(Scalar n) {
    value /= n;
    if (grad_abnormality.size()) grad_abnormality /= n;
    if (grad_spatial.size()) grad_spatial /= n;
    if (grad_segmentation.size()) grad_segmentation /= n;
    if (per_class.size()) per_class /= n;
    normalizer *= n;
  }
};

struct CorrelationLossOptions {
  /// Multiplies the whole coupling term. 1 reproduces the plain objective.
  double scale = 1.0;
  /// Couple classes through Pearson correlation instead of covariance.
  bool use_pearson = false;
  /// Classes present in the calibration set; empty means all.
  std::vector<bool> active;
};

namespace detail {

template <typename Scalar>
Scalar clamp_probability(Scalar p) {
  const Scalar eps = static_cast<Scalar>(kProbabilityClamp);
  return std::clamp(p, eps, Scalar(1) - eps);
}

template <typename Derived>
void check_shape(const Eigen::MatrixBase<Derived>& pred, Index rows, Index cols, const char* what) {
  if (pred.rows() != rows || pred.cols() != cols) {
    throw DataError(std::string(what) + ": shape mismatch (" + std::to_string(pred.rows()) + "x" +
                    std::to_string(pred.cols()) + " vs " + std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
}

inline bool class_enabled(const ClassWeights& w, Index c) { return !w.degenerate[static_cast<std::size_t>(c)]; }

inline bool flag_or_true(const std::vector<bool>& flags, Index c) {
  return flags.empty() || flags[static_cast<std::size_t>(c)];
}

/// -sum over enabled entries of [w_pos c ln p + w_neg (1-c) ln(1-p)].
template <typename Derived>
LossResult<typename Derived::Scalar> bce_terms(const Eigen::MatrixBase<Derived>& pred, const BinaryMatrix& labels,
                                               const ClassWeights& weights, const BoolMatrix& mask) {
  using Scalar = typename Derived::Scalar;
  const Index f = labels.rows();
  const Index d = labels.cols();
  check_shape(pred, f, d, "weighted_bce predictions");
  if (mask.rows() != f || mask.cols() != d) {
    throw DataError("weighted_bce: mask shape mismatch");
  }
  if (weights.classes() != d) {
    throw DataError("weighted_bce: weight count does not match classes");
  }
  LossResult<Scalar> out;
  out.grad_abnormality = MatrixX<Scalar>::Zero(f, d);
  out.per_class = VectorX<Scalar>::Zero(d);
  for (Index c = 0; c < d; ++c) {
    if (!class_enabled(weights, c)) {
      continue;
    }
    const Scalar wp = static_cast<Scalar>(weights.w_pos(c));
    const Scalar wn = static_cast<Scalar>(weights.w_neg(c));
    Scalar acc = 0;
    for (Index i = 0; i < f; ++i) {
      if (!mask(i, c)) {
        continue;
      }
      const Scalar p = clamp_probability<Scalar>(pred(i, c));
      if (labels(i, c) == 1) {
        acc -= wp * std::log(p);
        out.grad_abnormality(i, c) = -wp / p;
      } else {
        acc -= wn * std::log1p(-p);
        out.grad_abnormality(i, c) = wn / (Scalar(1) - p);
      }
    }
    out.per_class(c) = acc;
  }
  out.value = out.per_class.sum();
  return out;
}

template <typename Scalar>
void add_scaled(LossResult<Scalar>& into, const LossResult<Scalar>& term, Scalar factor) {
  into.value += factor * term.value;
  into.grad_abnormality += factor * term.grad_abnormality;
  into.per_class += factor * term.per_class;
}

}  // namespace detail

/// Class-weighted binary cross entropy over the masked (sample, class) pairs.
/// Degenerate classes are skipped.
template <typename Derived>
LossResult<typename Derived::Scalar> weighted_bce(const Eigen::MatrixBase<Derived>& pred, const BinaryMatrix& labels,
                                                  const ClassWeights& weights, const BoolMatrix& mask) {
  return detail::bce_terms(pred, labels, weights, mask);
}

template <typename Derived>
LossResult<typename Derived::Scalar> weighted_bce(const Eigen::MatrixBase<Derived>& pred, const BinaryMatrix& labels,
                                                  const ClassWeights& weights) {
  return weighted_bce(pred, labels, weights, BoolMatrix::Constant(labels.rows(), labels.cols(), true));
}

/// The inverse-BCE penalty alone, without lambda:
/// sum of f_pos w_neg (1-c)(-ln p) + f_neg w_pos c (-ln(1-p)) over masked, active classes.
template <typename Derived>
LossResult<typename Derived::Scalar> noise_regularizer(const Eigen::MatrixBase<Derived>& pred,
                                                       const BinaryMatrix& labels, const ClassWeights& weights,
                                                       const NoiseProfile& noise, const BoolMatrix& mask) {
  using Scalar = typename Derived::Scalar;
  const Index f = labels.rows();
  const Index d = labels.cols();
  detail::check_shape(pred, f, d, "noise_regularizer predictions");
  if (noise.classes() != d) {
    throw DataError("noise profile class count does not match labels");
  }
  LossResult<Scalar> out;
  out.grad_abnormality = MatrixX<Scalar>::Zero(f, d);
  out.per_class = VectorX<Scalar>::Zero(d);
  for (Index c = 0; c < d; ++c) {
    if (!detail::class_enabled(weights, c) || !noise.active[static_cast<std::size_t>(c)]) {
      continue;
    }
    const Scalar to_pos = static_cast<Scalar>(noise.f_pos(c) * weights.w_neg(c));
    const Scalar to_neg = static_cast<Scalar>(noise.f_neg(c) * weights.w_pos(c));
    Scalar acc = 0;
    for (Index i = 0; i < f; ++i) {
      if (!mask(i, c)) {
        continue;
      }
      const Scalar p = detail::clamp_probability<Scalar>(pred(i, c));
      if (labels(i, c) == 1) {
        acc -= to_neg * std::log1p(-p);
        out.grad_abnormality(i, c) = to_neg / (Scalar(1) - p);
      } else {
        acc -= to_pos * std::log(p);
        out.grad_abnormality(i, c) = -to_pos / p;
      }
    }
    out.per_class(c) = acc;
  }
  out.value = out.per_class.sum();
  return out;
}

/// Weighted BCE plus lambda_noise times the inverse-BCE penalty that pulls each
/// prediction toward the opposite of its (possibly wrong) label.
template <typename Derived>
LossResult<typename Derived::Scalar> noise_regularized_loss(const Eigen::MatrixBase<Derived>& pred,
                                                            const BinaryMatrix& labels, const ClassWeights& weights,
                                                            const NoiseProfile& noise, const BoolMatrix& mask) {
  using Scalar = typename Derived::Scalar;
  auto out = weighted_bce(pred, labels, weights, mask);
  detail::add_scaled(out, noise_regularizer(pred, labels, weights, noise, mask),
                     static_cast<Scalar>(noise.lambda_noise));
  return out;
}

/// The label-coupling term alone (covariance-weighted BCE of every other class),
/// before `options.scale`. Attributed to the class whose BCE it weights.
template <typename Derived>
LossResult<typename Derived::Scalar> correlation_regularizer(const Eigen::MatrixBase<Derived>& pred,
                                                             const BinaryMatrix& labels, const ClassWeights& weights,
                                                             const CorrelationStats& correlation,
                                                             const BoolMatrix& mask,
                                                             const CorrelationLossOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Index f = labels.rows();
  const Index d = labels.cols();
  detail::check_shape(pred, f, d, "correlation_regularizer predictions");
  const Eigen::MatrixXd& coupling = options.use_pearson ? correlation.pearson : correlation.covariance;
  if (coupling.rows() != d || coupling.cols() != d) {
    throw DataError("correlation matrix must be D x D");
  }
  LossResult<Scalar> out;
  out.grad_abnormality = MatrixX<Scalar>::Zero(f, d);
  out.per_class = VectorX<Scalar>::Zero(d);
  for (Index r = 0; r < d; ++r) {
    if (!detail::class_enabled(weights, r) || !detail::flag_or_true(options.active, r)) {
      continue;
    }
    const Scalar wp = static_cast<Scalar>(weights.w_pos(r));
    const Scalar wn = static_cast<Scalar>(weights.w_neg(r));
    Scalar acc = 0;
    for (Index i = 0; i < f; ++i) {
      if (!mask(i, r)) {
        continue;
      }
      Scalar k = 0;
      for (Index n = 0; n < d; ++n) {
        if (n != r && mask(i, n) && detail::class_enabled(weights, n) && detail::flag_or_true(options.active, n)) {
          k += static_cast<Scalar>(coupling(n, r));
        }
      }
      const Scalar p = detail::clamp_probability<Scalar>(pred(i, r));
      if (labels(i, r) == 1) {
        acc -= k * wp * std::log(p);
        out.grad_abnormality(i, r) = -k * wp / p;
      } else {
        acc -= k * wn * std::log1p(-p);
        out.grad_abnormality(i, r) = k * wn / (Scalar(1) - p);
      }
    }
    out.per_class(r) = acc;
  }
  out.value = out.per_class.sum();
  return out;
}

template <typename Derived>
LossResult<typename Derived::Scalar> correlation_regularized_loss(const Eigen::MatrixBase<Derived>& pred,
                                                                  const BinaryMatrix& labels,
                                                                  const ClassWeights& weights,
                                                                  const CorrelationStats& correlation,
                                                                  const BoolMatrix& mask,
                                                                  const CorrelationLossOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  auto out = weighted_bce(pred, labels, weights, mask);
  detail::add_scaled(out, correlation_regularizer(pred, labels, weights, correlation, mask, options),
                     static_cast<Scalar>(options.scale));
  return out;
}

/// sum_i (1/t) sum_z (s - p)^2 with t the number of mask pixels per sample.
template <typename DerivedP, typename DerivedT>
LossResult<typename DerivedP::Scalar> segmentation_mse(const Eigen::MatrixBase<DerivedP>& pred,
                                                       const Eigen::MatrixBase<DerivedT>& truth) {
  using Scalar = typename DerivedP::Scalar;
  detail::check_shape(pred, truth.rows(), truth.cols(), "segmentation_mse");
  LossResult<Scalar> out;
  const Scalar t = static_cast<Scalar>(truth.cols());
  const MatrixX<Scalar> diff = pred - truth.template cast<Scalar>();
  out.value = diff.rowwise().squaredNorm().sum() / t;
  out.grad_segmentation = (Scalar(2) / t) * diff;
  return out;
}

/// Weighted BCE over the nine spatial classes, restricted to samples with at
/// least one abnormality carrying spatial supervision.
template <typename Derived>
LossResult<typename Derived::Scalar> spatial_loss(const Eigen::MatrixBase<Derived>& pred,
                                                  const SpatialLabelMatrix& spatial,
                                                  const ClassWeights& spatial_weights) {
  spatial.validate();
  const BoolVector rows = spatial.active_rows();
  const BoolMatrix mask = rows.replicate(1, SpatialLabelMatrix::kClasses);
  auto out = detail::bce_terms(pred, spatial.labels, spatial_weights, mask);
  out.grad_spatial = std::move(out.grad_abnormality);
  out.grad_abnormality.resize(0, 0);
  return out;
}

/// Spatial class weights from the rows that carry spatial supervision.
inline ClassWeights compute_spatial_weights(const SpatialLabelMatrix& spatial) {
  const BoolVector rows = spatial.active_rows();
  return compute_class_weights(spatial.labels, rows.replicate(1, SpatialLabelMatrix::kClasses));
}

/// Which terms the training objective combines. Names follow the experiment
/// configurations: baseline is plain weighted BCE.
struct LossConfig {
  bool noise = false;
  bool corr = false;
  bool seg = false;
  bool loc = false;
  double alpha_seg = 1.0;
  double alpha_loc = 1.0;
  CorrelationLossOptions corr_options;
};

template <typename Scalar>
struct LossTargets {
  BinaryMatrix labels;
  BoolMatrix mask;
  ClassWeights weights;
  std::optional<NoiseProfile> noise;
  std::optional<CorrelationStats> correlation;
  SpatialLabelMatrix spatial;
  ClassWeights spatial_weights;
  MatrixX<Scalar> segmentation;
};

/// Abnormality loss (with the selected regularizers) + alpha_seg * segmentation
/// MSE + alpha_loc * spatial loss. Gradients are summed per output head.
template <typename Scalar>
LossResult<Scalar> composite_loss(const Predictions<Scalar>& pred, const LossTargets<Scalar>& targets,
                                  const LossConfig& config) {
  auto out = weighted_bce(pred.abnormality, targets.labels, targets.weights, targets.mask);
  if (config.noise) {
    if (!targets.noise) {
      throw UsageError("noise regularization requested without a noise profile");
    }
    detail::add_scaled(out, noise_regularizer(pred.abnormality, targets.labels, targets.weights, *targets.noise,
                                              targets.mask),
                       static_cast<Scalar>(targets.noise->lambda_noise));
  }
  if (config.corr) {
    if (!targets.correlation) {
      throw UsageError("correlation regularization requested without correlation statistics");
    }
    detail::add_scaled(out, correlation_regularizer(pred.abnormality, targets.labels, targets.weights,
                                                    *targets.correlation, targets.mask, config.corr_options),
                       static_cast<Scalar>(config.corr_options.scale));
  }
  if (config.seg) {
    const Scalar alpha = static_cast<Scalar>(config.alpha_seg);
    auto seg = segmentation_mse(pred.segmentation, targets.segmentation);
    out.value += alpha * seg.value;
    out.grad_segmentation = alpha * seg.grad_segmentation;
  }
  if (config.loc) {
    const Scalar alpha = static_cast<Scalar>(config.alpha_loc);
    auto loc = spatial_loss(pred.spatial, targets.spatial, targets.spatial_weights);
    out.value += alpha * loc.value;
    out.grad_spatial = alpha * loc.grad_spatial;
  }
  return out;
}

}  // namespace noisylab

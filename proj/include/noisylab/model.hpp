#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/label_model.hpp"
#include "noisylab/losses.hpp"

namespace noisylab {

/// Shared two-layer rectifier trunk feeding three sigmoid heads: abnormalities,
/// spatial classes and a two-channel organ mask at reduced resolution.
struct Architecture {
  Index inputs = 256;
  Index hidden1 = 64;
  Index hidden2 = 64;
  Index classes = 5;
  Index spatial = SpatialLabelMatrix::kClasses;
  Index mask_side = 16;

  Index segmentation_outputs() const { return 2 * mask_side * mask_side; }
  bool operator==(const Architecture&) const = default;
};

/// One fully connected layer inside the flat parameter vector: a column-major
/// rows x cols weight block followed by `rows` bias entries.
struct LayerLayout {
  std::string name;
  Index rows = 0;  // outputs
  Index cols = 0;  // inputs
  Index offset = 0;

  Index weight_count() const { return rows * cols; }
  Index bias_offset() const { return offset + weight_count(); }
  Index end() const { return bias_offset() + rows; }
};

enum Layer : std::size_t { kTrunk1 = 0, kTrunk2, kAbnormalityHead, kSpatialHead, kDecoder, kLayerCount };

std::vector<LayerLayout> make_layout(const Architecture& arch);

struct ModelState {
  Architecture arch;
  std::vector<LayerLayout> layout;
  Eigen::VectorXd params;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t step_count = 0;
  // Fixed input standardization applied before the first layer; identity
  // unless set by the trainer. Not part of `params`.
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, moments zero.
  static ModelState initialize(const Architecture& arch, std::uint64_t seed);
  static ModelState zeros(const Architecture& arch);

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
};

/// Which heads to evaluate; skipped heads produce empty prediction matrices.
struct HeadSelection {
  bool spatial = true;
  bool segmentation = true;
};

struct ForwardCache {
  Eigen::MatrixXd input, pre1, hidden1, pre2, hidden2;
  Predictions<double> outputs;
};

/// Rows of `features` are samples; they are standardized with the model's
/// input shift and scale before the first layer.
ForwardCache forward_cached(const ModelState& model, const Eigen::MatrixXd& features, HeadSelection heads = {});
Predictions<double> forward(const ModelState& model, const Eigen::MatrixXd& features, HeadSelection heads = {});

/// Parameter gradient given the loss gradient with respect to the head outputs.
Eigen::VectorXd backward(const ModelState& model, const ForwardCache& cache, const LossResult<double>& loss);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update; increments step_count.
void adam_step(ModelState& model, const Eigen::VectorXd& gradient, const AdamConfig& config);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace noisylab

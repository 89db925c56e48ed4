#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/label_model.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/model.hpp"
#include "noisylab/normalization.hpp"

namespace noisylab {

struct TrainConfig {
  AdamConfig adam;
  Index batch_size = 128;
  int max_epochs = 30;
  double plateau_factor = 10.0;
  int plateau_patience = 3;
  int early_stop_patience = 6;
  Index hidden = 64;
  // Standardize each input column with the training split's mean and
  // standard deviation; the transform is stored in the model.
  bool standardize_inputs = true;
  LossConfig loss;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Inputs and targets of one data split. `labels` drives the loss; `clean`,
/// when present, holds trusted labels used only for logging.
struct TrainingSplit {
  Eigen::MatrixXd features;  // F x inputs, values in [0, 1]
  LabelMatrix labels;
  std::optional<BinaryMatrix> clean;
  SpatialLabelMatrix spatial;
  Eigen::MatrixXd segmentation;  // F x 2*N'*N'

  Index samples() const { return features.rows(); }
  TrainingSplit select_rows(const std::vector<Index>& rows) const;
};

/// Loss constants fixed before training: class weights from the training
/// labels, noise and correlation priors from a calibration subset.
struct TrainingPriors {
  ClassWeights weights;
  ClassWeights spatial_weights;
  std::optional<NoiseProfile> noise;
  std::optional<CorrelationStats> correlation;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  Eigen::VectorXd val_auc_clean;  // NaN when undefined or no clean labels
  Eigen::VectorXd val_auc_noisy;
};

struct TrainResult {
  ModelState model;  // parameters from the epoch with the lowest validation loss
  std::vector<EpochLog> log;
  int best_epoch = 0;
  bool diverged = false;
  std::string message;
};

/// Loss targets for the given rows of a split.
LossTargets<double> make_targets(const TrainingSplit& split, const std::vector<Index>& rows,
                                 const TrainingPriors& priors);

/// Composite loss of `model` on a whole split, divided by the split size.
double evaluate_loss(const ModelState& model, const TrainingSplit& split, const TrainingPriors& priors,
                     const LossConfig& loss);

/// Mini-batch Adam with plateau learning-rate reduction and early stopping on
/// the validation loss. Deterministic for a given seed.
TrainResult train(const TrainingSplit& train_split, const TrainingSplit& validation, const TrainingPriors& priors,
                  const TrainConfig& config);

/// Per-class AUC, NaN where the labels hold a single class.
Eigen::VectorXd per_class_auc(const Eigen::MatrixXd& scores, const BinaryMatrix& labels,
                              const BoolMatrix* mask = nullptr);

struct FeatureConfig {
  bool normalize = false;
  WindowConfig window;
  /// Fixed divisor used when per-image normalization is off.
  double raw_scale = 4096.0;
  int downsample = 2;
};

/// Optionally windowed, block-averaged, row-major flattened image pixels.
Eigen::MatrixXd image_features(const std::vector<GrayImage<double>>& images, const FeatureConfig& config);

/// Lung and heart masks block-averaged to `mask_side` and packed as two channels.
Eigen::MatrixXd segmentation_targets(const std::vector<Eigen::ArrayXXi>& lungs,
                                     const std::vector<Eigen::ArrayXXi>& hearts, Index mask_side);

/// Bilinear resampling with pixel-centre alignment.
Eigen::ArrayXXd upsample_bilinear(const Eigen::ArrayXXd& image, Index rows, Index cols);

void write_training_log(std::ostream& os, const std::vector<EpochLog>& log,
                        const std::vector<std::string>& class_names);
void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log,
                        const std::vector<std::string>& class_names);

inline constexpr char kCheckpointMagic[8] = {'N', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian: magic, version, architecture, layer table, parameters, Adam
/// moments, step count.
void save_checkpoint(const std::filesystem::path& path, const ModelState& model);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace noisylab

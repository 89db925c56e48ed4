#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/config_file.hpp"
#include "noisylab/label_model.hpp"
#include "noisylab/normalization.hpp"

namespace noisylab {

/// Ground-truth generator settings. Defaults give the five-class benchmark whose
/// label noise matches the measured sensitivity/specificity of the original
/// chest X-ray labels.
struct GeneratorConfig {
  Index n_samples = 1000;
  std::vector<std::string> class_names;
  Eigen::VectorXd prevalence;
  Eigen::MatrixXd latent_correlation;
  Eigen::VectorXd sensitivity;
  Eigen::VectorXd specificity;
  /// Class rendered inside the heart instead of the lungs; -1 for none.
  Index cardiac_class = -1;
  /// Classes whose lesions carry spatial annotations.
  std::vector<bool> spatially_annotated;
  /// Peak lesion intensity per class, in raw counts before any intensity shift.
  Eigen::VectorXd lesion_contrast;

  int image_size = 32;
  double pixel_noise = 120.0;
  /// Peak intensity of the bright rib bands drawn across both lungs; 0 draws none.
  double rib_contrast = 0.0;
  double anonymization_box_probability = 0.3;
  bool intensity_shift = false;
  double shift_gain_min = 0.4;
  double shift_gain_max = 2.5;
  double shift_offset_max = 3000.0;
  std::uint64_t seed = 1;

  Index classes() const { return static_cast<Index>(class_names.size()); }

  /// Throws DataError on inconsistent sizes or out-of-range values, and on a
  /// correlation matrix that is not positive semidefinite.
  void validate() const;

  /// Five classes (Effusion, Cardiomegaly, Consolidation, Atelectasis, Mass)
  /// with correlated latent factors and the measured label-noise rates.
  static GeneratorConfig standard_benchmark(Index n_samples, std::uint64_t seed);

  StructuredText to_structured() const;
  static GeneratorConfig from_structured(const StructuredText& doc);
};

/// Closest unit-diagonal PSD matrix by eigenvalue clipping (floor `min_eigen`).
Eigen::MatrixXd nearest_correlation_matrix(const Eigen::MatrixXd& m, double min_eigen = 1e-6);

/// Pearson correlation of two thresholded standard normals with latent
/// correlation `rho` and the given prevalences, by numerical integration.
double label_pearson_from_latent(double rho, double prevalence_a, double prevalence_b);

struct LatentLabels {
  BinaryMatrix labels;    // F x D
  Eigen::MatrixXd latent; // F x D latent normal draws
  Eigen::VectorXd thresholds;
};

/// Gaussian copula: latent N(0, R) thresholded at the (1 - prevalence) quantile.
LatentLabels generate_labels(const GeneratorConfig& config);

/// Class-conditional flips: positives survive with probability `sensitivity`,
/// negatives with probability `specificity`. One uniform draw per entry in
/// row-major order.
BinaryMatrix inject_noise(const BinaryMatrix& true_labels, const Eigen::VectorXd& sensitivity,
                          const Eigen::VectorXd& specificity, std::uint64_t seed);

/// Organ layout of one rendered image, in pixel coordinates (x right, y down).
/// The lung drawn on the image's right is the patient's left lung.
struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double rx = 1.0;
  double ry = 1.0;

  bool contains(double x, double y) const {
    const double dx = (x - cx) / rx;
    const double dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

struct OrganLayout {
  Ellipse right_lung;  // image left
  Ellipse left_lung;   // image right
  Ellipse heart;

  static OrganLayout nominal(int image_size);
};

enum class Organ { RightLung, LeftLung, Heart };

struct Lesion {
  Index abnormality = 0;
  Organ organ = Organ::RightLung;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.0;
  double amplitude = 0.0;
  bool diffuse = false;
};

/// Nine spatial labels for the annotated lesions. Vertical bands are equal
/// thirds of the containing lung's bounding box: a lesion touching one band gets
/// that band, two adjacent bands give the combined label, all three count as
/// diffused. Two or more disconnected lesions set "Multiple".
Eigen::RowVectorXi spatial_labels_for(const std::vector<Lesion>& annotated, const OrganLayout& layout);

struct RenderedSample {
  OrganLayout layout;
  GrayImage<double> image;
  Eigen::ArrayXXi lung_mask;
  Eigen::ArrayXXi heart_mask;
  std::vector<Lesion> lesions;
  Eigen::RowVectorXi spatial;  // 9 entries
};

/// Draws organs and one lesion per positive class (two for some multi-focal
/// classes), adds pixel noise, an optional anonymization box and the optional
/// global intensity shift.
RenderedSample render_image(const Eigen::RowVectorXd& latent, const Eigen::RowVectorXi& labels,
                            const Eigen::VectorXd& thresholds, const GeneratorConfig& config, std::uint64_t seed);

/// Pixels belonging to a lesion: the disk around its centre clipped to its organ.
Eigen::ArrayXXi lesion_footprint(const Lesion& lesion, const OrganLayout& layout, int image_size);

struct SyntheticDataset {
  GeneratorConfig config;
  LabelMatrix true_labels;
  LabelMatrix noisy_labels;
  SpatialLabelMatrix spatial;
  Eigen::MatrixXd latent;
  std::vector<GrayImage<double>> images;
  std::vector<Eigen::ArrayXXi> lung_masks;
  std::vector<Eigen::ArrayXXi> heart_masks;

  Index samples() const { return true_labels.samples(); }
  StructuredText manifest() const;
};

/// Labels, noise and images; every sample renders from its own derived seed.
SyntheticDataset generate_dataset(const GeneratorConfig& config, bool render = true);

/// labels_true.csv, labels_noisy.csv, spatial.csv, images/*.pgm, masks/*.pgm, manifest.
void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir);
SyntheticDataset read_dataset(const std::filesystem::path& dir);

}  // namespace noisylab

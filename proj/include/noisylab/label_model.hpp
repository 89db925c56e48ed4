#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace noisylab {

using Index = Eigen::Index;
using BinaryMatrix = Eigen::MatrixXi;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

inline const std::string kDefaultDataset = "default";

/// Multi-label targets for F samples over D classes.
///
/// Each sample carries a dataset tag; `ownership` maps a tag to the classes that
/// dataset annotates. Tags without an entry own every class. Loss terms and class
/// statistics only look at (sample, class) pairs owned by the sample's dataset.
struct LabelMatrix {
  BinaryMatrix labels;
  std::vector<std::string> sample_ids;
  std::vector<std::string> dataset_tags;
  std::vector<std::string> class_names;
  std::map<std::string, std::vector<Index>> ownership;

  Index samples() const { return labels.rows(); }
  Index classes() const { return labels.cols(); }

  /// Throws DataError when any invariant is broken.
  void validate() const;

  /// F x D, true where the sample's dataset owns the class.
  BoolMatrix ownership_mask() const;

  /// Sub-matrix of the given rows, preserving ids, tags and ownership.
  LabelMatrix select_rows(const std::vector<Index>& rows) const;

  /// Wraps a dense 0/1 matrix with generated ids ("s0", "s1", ...), the default
  /// dataset tag and class names "c0", "c1", ... unless names are given.
  static LabelMatrix from_dense(BinaryMatrix labels, std::vector<std::string> class_names = {});
};

struct ClassWeights {
  Eigen::VectorXd w_pos;
  Eigen::VectorXd w_neg;
  Eigen::VectorXi pos_count;
  Eigen::VectorXi neg_count;
  /// P = 0 or N = 0: both weights are 1 and the class is skipped by the losses.
  std::vector<bool> degenerate;

  Index classes() const { return w_pos.size(); }

  /// Unit weights, nothing degenerate. Mostly useful in tests.
  static ClassWeights uniform(Index classes);
};

/// Per-class label noise measured against trusted labels.
struct NoiseProfile {
  std::vector<std::string> class_names;
  Eigen::VectorXd sensitivity;
  Eigen::VectorXd specificity;
  Eigen::VectorXd f_pos;
  Eigen::VectorXd f_neg;
  double lambda_noise = 0.1;
  std::vector<bool> active;

  // Confusion counts behind the rates; zero when built from rates directly.
  Eigen::VectorXi true_pos;
  Eigen::VectorXi pos;
  Eigen::VectorXi true_neg;
  Eigen::VectorXi neg;

  Index classes() const { return sensitivity.size(); }

  static NoiseProfile from_rates(const Eigen::VectorXd& sensitivity, const Eigen::VectorXd& specificity,
                                 double lambda_noise = 0.1);
};

struct CorrelationStats {
  std::vector<std::string> class_names;
  Eigen::MatrixXd pearson;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;
  std::vector<bool> zero_variance;
  std::string convention = "population";

  Index classes() const { return means.size(); }
};

/// Coarse location labels of the abnormalities, one row per sample.
struct SpatialLabelMatrix {
  static constexpr Index kClasses = 9;
  static const std::array<std::string_view, kClasses> kNames;

  enum Class : Index {
    LeftLung = 0,
    RightLung,
    Lower,
    LowerMiddle,
    Middle,
    UpperMiddle,
    Upper,
    Diffused,
    Multiple,
  };

  BinaryMatrix labels;    // F x 9
  BoolMatrix available;   // F x D

  Index samples() const { return labels.rows(); }

  /// Rows with at least one available abnormality.
  BoolVector active_rows() const;

  void validate() const;
};

ClassWeights compute_class_weights(const LabelMatrix& labels);

/// Counts positives and negatives over the entries where `mask` is set.
ClassWeights compute_class_weights(const BinaryMatrix& labels, const BoolMatrix& mask);

/// Population Pearson correlation and covariance over the columns of `labels`.
CorrelationStats compute_correlation(const LabelMatrix& labels);

template <typename Derived>
CorrelationStats compute_correlation(const Eigen::MatrixBase<Derived>& data) {
  const Index rows = data.rows();
  const Index cols = data.cols();
  CorrelationStats out;
  const Eigen::MatrixXd x = data.template cast<double>();
  out.means = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - out.means.transpose();
  out.covariance = (centered.transpose() * centered) / static_cast<double>(rows);
  out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
  out.stddevs = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.zero_variance.assign(static_cast<std::size_t>(cols), false);
  out.pearson = Eigen::MatrixXd::Zero(cols, cols);
  for (Index n = 0; n < cols; ++n) {
    out.zero_variance[static_cast<std::size_t>(n)] = !(out.stddevs(n) > 0.0);
  }
  for (Index n = 0; n < cols; ++n) {
    for (Index r = 0; r < cols; ++r) {
      if (out.zero_variance[static_cast<std::size_t>(n)] || out.zero_variance[static_cast<std::size_t>(r)]) {
        continue;
      }
      const double v = n == r ? 1.0 : out.covariance(n, r) / (out.stddevs(n) * out.stddevs(r));
      out.pearson(n, r) = std::clamp(v, -1.0, 1.0);
    }
  }
  return out;
}

/// Sensitivity and specificity of `original` measured against `reread`.
///
/// Rows are matched by sample id and columns by class name, so `reread` may hold
/// a sparse calibration subset covering only some classes. Classes missing from
/// `reread`, or without both label values there, are inactive.
NoiseProfile measure_noise_profile(const LabelMatrix& original, const LabelMatrix& reread,
                                   double lambda_noise = 0.1);

}  // namespace noisylab

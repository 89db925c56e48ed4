#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "noisylab/error.hpp"
#include "noisylab/label_model.hpp"
#include "noisylab/special.hpp"

namespace noisylab {

/// AUC with its DeLong structural components. `placement_pos[i]` is the share
/// of negatives ranked below positive i (ties count 1/2); `placement_neg[j]` is
/// the share of positives ranked above negative j.
struct RocResult {
  double auc = 0.5;
  Index n_pos = 0;
  Index n_neg = 0;
  Eigen::VectorXd placement_pos;
  Eigen::VectorXd placement_neg;
};

struct DeLongComparison {
  double auc_a = 0.5;
  double auc_b = 0.5;
  double variance_a = 0.0;
  double variance_b = 0.0;
  double covariance_ab = 0.0;
  double variance_diff = 0.0;
  double z_statistic = 0.0;
  double p_value = 1.0;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  double level = 0.95;
  int replicates = 0;
  int redraws = 0;  // resamples discarded for containing a single class
};

struct OverlapScores {
  double dice = 1.0;
  double iou = 1.0;
  bool both_empty = false;
};

struct SensSpec {
  double sensitivity = 1.0;
  double specificity = 1.0;
};

/// Midranks (1-based, ties share their mean rank).
Eigen::VectorXd midranks(const Eigen::VectorXd& values);

/// Throws UndefinedAuc unless both classes are present.
RocResult auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

/// Paired DeLong test on one label vector. Two-sided normal p-value.
DeLongComparison delong_test(const Eigen::VectorXd& scores_a, const Eigen::VectorXd& scores_b,
                             const Eigen::VectorXi& labels);

/// Percentile bootstrap interval of the AUC over resampled (score, label) pairs.
/// Each replicate draws from its own generator seeded from (seed, replicate).
ConfidenceInterval bootstrap_ci(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels, int n_boot,
                                std::uint64_t seed, double level = 0.95);

/// Bootstrap replicates of the AUC, in replicate order. Same resampling as bootstrap_ci.
Eigen::VectorXd bootstrap_aucs(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels, int n_boot,
                               std::uint64_t seed, int* redraws = nullptr);

/// Paired bootstrap replicates of AUC(a) - AUC(b).
Eigen::VectorXd paired_bootstrap_auc_differences(const Eigen::VectorXd& scores_a, const Eigen::VectorXd& scores_b,
                                                 const Eigen::VectorXi& labels, int n_boot, std::uint64_t seed);

SensSpec sensitivity_specificity(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth);

/// Linear-interpolation quantile of a sample (q in [0, 1]).
double quantile(Eigen::VectorXd values, double q);

/// Dice and IoU of two binary masks; nonzero entries are "inside". Two empty
/// masks score 1 and set `both_empty`.
template <typename DerivedA, typename DerivedB>
OverlapScores dice_iou(const Eigen::DenseBase<DerivedA>& pred, const Eigen::DenseBase<DerivedB>& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DataError("dice_iou: mask shapes differ");
  }
  const auto a = (pred.derived().array() != 0);
  const auto b = (truth.derived().array() != 0);
  const double inter = static_cast<double>((a && b).count());
  const double uni = static_cast<double>((a || b).count());
  const double sizes = static_cast<double>(a.count() + b.count());
  OverlapScores out;
  if (uni == 0.0) {
    out.both_empty = true;
    return out;
  }
  out.dice = 2.0 * inter / sizes;
  out.iou = inter / uni;
  return out;
}

template <typename Derived>
Eigen::ArrayXXi binarize(const Eigen::DenseBase<Derived>& probabilities, double threshold = 0.5) {
  return (probabilities.derived().array().template cast<double>() >= threshold).template cast<int>();
}

}  // namespace noisylab

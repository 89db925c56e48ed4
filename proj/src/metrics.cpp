#include "noisylab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace noisylab {
namespace {

void check_inputs(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size()) {
    throw DataError("scores and labels differ in length");
  }
  if (!scores.allFinite()) {
    throw DataError("scores must be finite");
  }
  if (((labels.array() != 0) && (labels.array() != 1)).any()) {
    throw DataError("labels must be 0 or 1");
  }
}

// Scores sorted once so a resample, given as per-sample multiplicities, can be
// scored in one linear pass over tie groups.
class RankedScores {
 public:
  RankedScores(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) : labels_(labels) {
    order_.resize(static_cast<std::size_t>(scores.size()));
    std::iota(order_.begin(), order_.end(), Index{0});
    std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) { return scores(a) < scores(b); });
    for (std::size_t k = 0; k < order_.size(); ++k) {
      if (k == 0 || scores(order_[k]) != scores(order_[k - 1])) {
        group_start_.push_back(k);
      }
    }
    group_start_.push_back(order_.size());
  }

  // AUC of the multiset given by `count`; NaN if a class is missing.
  double auc(const std::vector<int>& count) const {
    double neg_below = 0.0;
    double pos_total = 0.0;
    double neg_total = 0.0;
    double correct = 0.0;
    for (std::size_t g = 0; g + 1 < group_start_.size(); ++g) {
      double pos = 0.0;
      double neg = 0.0;
      for (std::size_t k = group_start_[g]; k < group_start_[g + 1]; ++k) {
        const Index i = order_[k];
        const double w = count[static_cast<std::size_t>(i)];
        (labels_(i) == 1 ? pos : neg) += w;
      }
      correct += pos * (neg_below + 0.5 * neg);
      neg_below += neg;
      pos_total += pos;
      neg_total += neg;
    }
    if (pos_total == 0.0 || neg_total == 0.0) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return correct / (pos_total * neg_total);
  }

 private:
  const Eigen::VectorXi& labels_;
  std::vector<Index> order_;
  std::vector<std::size_t> group_start_;
};

void draw_counts(std::mt19937_64& rng, std::vector<int>& count) {
  std::fill(count.begin(), count.end(), 0);
  std::uniform_int_distribution<std::size_t> pick(0, count.size() - 1);
  for (std::size_t k = 0; k < count.size(); ++k) {
    ++count[pick(rng)];
  }
}

bool has_both_classes(const std::vector<int>& count, const Eigen::VectorXi& labels) {
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] > 0) {
      (labels(static_cast<Index>(i)) == 1 ? pos : neg) = true;
    }
  }
  return pos && neg;
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) {
    return 0.0;
  }
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

double sample_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() < 2) {
    return 0.0;
  }
  return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() / static_cast<double>(a.size() - 1);
}

}  // namespace

Eigen::VectorXd midranks(const Eigen::VectorXd& values) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });
  Eigen::VectorXd ranks(n);
  Index k = 0;
  while (k < n) {
    Index j = k;
    while (j + 1 < n && values(order[static_cast<std::size_t>(j + 1)]) == values(order[static_cast<std::size_t>(k)])) {
      ++j;
    }
    const double mid = 0.5 * static_cast<double>(k + j) + 1.0;
    for (Index t = k; t <= j; ++t) {
      ranks(order[static_cast<std::size_t>(t)]) = mid;
    }
    k = j + 1;
  }
  return ranks;
}

RocResult auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  check_inputs(scores, labels);
  RocResult out;
  out.n_pos = labels.sum();
  out.n_neg = labels.size() - out.n_pos;
  if (out.n_pos == 0 || out.n_neg == 0) {
    throw UndefinedAuc("labels must contain both classes");
  }
  Eigen::VectorXd pos(out.n_pos);
  Eigen::VectorXd neg(out.n_neg);
  for (Index i = 0, p = 0, n = 0; i < labels.size(); ++i) {
    if (labels(i) == 1) {
      pos(p++) = scores(i);
    } else {
      neg(n++) = scores(i);
    }
  }
  const Eigen::VectorXd all_ranks = midranks(scores);
  const Eigen::VectorXd pos_ranks = midranks(pos);
  const Eigen::VectorXd neg_ranks = midranks(neg);
  out.placement_pos.resize(out.n_pos);
  out.placement_neg.resize(out.n_neg);
  const double m = static_cast<double>(out.n_pos);
  const double n = static_cast<double>(out.n_neg);
  for (Index i = 0, p = 0, q = 0; i < labels.size(); ++i) {
    if (labels(i) == 1) {
      out.placement_pos(p) = (all_ranks(i) - pos_ranks(p)) / n;
      ++p;
    } else {
      out.placement_neg(q) = 1.0 - (all_ranks(i) - neg_ranks(q)) / m;
      ++q;
    }
  }
  out.auc = out.placement_pos.mean();
  return out;
}

DeLongComparison delong_test(const Eigen::VectorXd& scores_a, const Eigen::VectorXd& scores_b,
                             const Eigen::VectorXi& labels) {
  if (scores_a.size() != scores_b.size()) {
    throw DataError("paired score vectors differ in length");
  }
  const RocResult a = auc(scores_a, labels);
  const RocResult b = auc(scores_b, labels);
  const double m = static_cast<double>(a.n_pos);
  const double n = static_cast<double>(a.n_neg);
  DeLongComparison out;
  out.auc_a = a.auc;
  out.auc_b = b.auc;
  out.variance_a = sample_variance(a.placement_pos) / m + sample_variance(a.placement_neg) / n;
  out.variance_b = sample_variance(b.placement_pos) / m + sample_variance(b.placement_neg) / n;
  out.covariance_ab = sample_covariance(a.placement_pos, b.placement_pos) / m +
                      sample_covariance(a.placement_neg, b.placement_neg) / n;
  out.variance_diff = sample_variance(a.placement_pos - b.placement_pos) / m +
                      sample_variance(a.placement_neg - b.placement_neg) / n;
  const double diff = out.auc_a - out.auc_b;
  if (!(out.variance_diff > 0.0)) {
    out.variance_diff = 0.0;
    if (diff != 0.0) {
      throw NumericalError("DeLong variance is zero while the AUCs differ");
    }
    out.z_statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.z_statistic = diff / std::sqrt(out.variance_diff);
  out.p_value = std::min(1.0, std::erfc(std::abs(out.z_statistic) / std::sqrt(2.0)));
  return out;
}

Eigen::VectorXd bootstrap_aucs(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels, int n_boot,
                               std::uint64_t seed, int* redraws) {
  check_inputs(scores, labels);
  if (n_boot < 1) {
    throw UsageError("bootstrap needs at least one replicate");
  }
  if (labels.sum() == 0 || labels.sum() == labels.size()) {
    throw UndefinedAuc("labels must contain both classes");
  }
  const RankedScores ranked(scores, labels);
  std::vector<int> count(static_cast<std::size_t>(scores.size()));
  Eigen::VectorXd out(n_boot);
  int discarded = 0;
  for (int r = 0; r < n_boot; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    draw_counts(rng, count);
    while (!has_both_classes(count, labels)) {
      ++discarded;
      draw_counts(rng, count);
    }
    out(r) = ranked.auc(count);
  }
  if (redraws) {
    *redraws = discarded;
  }
  return out;
}

ConfidenceInterval bootstrap_ci(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels, int n_boot,
                                std::uint64_t seed, double level) {
  if (n_boot < 100) {
    throw UsageError("bootstrap_ci needs at least 100 replicates");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw UsageError("confidence level must lie in (0, 1)");
  }
  ConfidenceInterval ci;
  ci.level = level;
  ci.replicates = n_boot;
  const Eigen::VectorXd aucs = bootstrap_aucs(scores, labels, n_boot, seed, &ci.redraws);
  const double tail = 0.5 * (1.0 - level);
  ci.low = quantile(aucs, tail);
  ci.high = quantile(aucs, 1.0 - tail);
  return ci;
}

Eigen::VectorXd paired_bootstrap_auc_differences(const Eigen::VectorXd& scores_a, const Eigen::VectorXd& scores_b,
                                                 const Eigen::VectorXi& labels, int n_boot, std::uint64_t seed) {
  check_inputs(scores_a, labels);
  check_inputs(scores_b, labels);
  if (labels.sum() == 0 || labels.sum() == labels.size()) {
    throw UndefinedAuc("labels must contain both classes");
  }
  const RankedScores ranked_a(scores_a, labels);
  const RankedScores ranked_b(scores_b, labels);
  std::vector<int> count(static_cast<std::size_t>(labels.size()));
  Eigen::VectorXd out(n_boot);
  for (int r = 0; r < n_boot; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    do {
      draw_counts(rng, count);
    } while (!has_both_classes(count, labels));
    out(r) = ranked_a.auc(count) - ranked_b.auc(count);
  }
  return out;
}

SensSpec sensitivity_specificity(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth) {
  if (predicted.size() != truth.size()) {
    throw DataError("prediction and truth differ in length");
  }
  Index tp = 0, p = 0, tn = 0, n = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (truth(i) != 0) {
      ++p;
      tp += predicted(i) != 0;
    } else {
      ++n;
      tn += predicted(i) == 0;
    }
  }
  if (p == 0 || n == 0) {
    throw DataError("sensitivity/specificity need both classes in the truth");
  }
  return {static_cast<double>(tp) / p, static_cast<double>(tn) / n};
}

double quantile(Eigen::VectorXd values, double q) {
  if (values.size() == 0) {
    throw DataError("quantile of an empty sample");
  }
  std::sort(values.data(), values.data() + values.size());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Index>(std::floor(pos));
  const Index hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values(lo) + frac * (values(hi) - values(lo));
}

}  // namespace noisylab

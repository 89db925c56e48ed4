#include "noisylab/label_model.hpp"

#include <unordered_map>
#include <unordered_set>

#include "noisylab/error.hpp"

namespace noisylab {

const std::array<std::string_view, SpatialLabelMatrix::kClasses> SpatialLabelMatrix::kNames = {
    "Left lung",         "Right lung",  "Lower part", "Lower-middle part", "Middle part",
    "Upper-middle part", "Upper part",  "Diffused",   "Multiple",
};

void LabelMatrix::validate() const {
  const Index f = samples();
  const Index d = classes();
  if (f < 1 || d < 1) {
    throw DataError("label matrix needs at least one sample and one class");
  }
  if (static_cast<Index>(sample_ids.size()) != f || static_cast<Index>(dataset_tags.size()) != f) {
    throw DataError("sample ids and dataset tags must have one entry per sample");
  }
  if (static_cast<Index>(class_names.size()) != d) {
    throw DataError("class names must have one entry per class");
  }
  if (((labels.array() != 0) && (labels.array() != 1)).any()) {
    throw DataError("label entries must be 0 or 1");
  }
  for (const auto& [tag, owned] : ownership) {
    if (owned.empty()) {
      throw DataError("dataset '" + tag + "' owns no classes");
    }
    for (Index c : owned) {
      if (c < 0 || c >= d) {
        throw DataError("dataset '" + tag + "' owns out-of-range class " + std::to_string(c));
      }
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) {
      throw DataError("duplicate sample id '" + id + "'");
    }
  }
}

BoolMatrix LabelMatrix::ownership_mask() const {
  BoolMatrix mask = BoolMatrix::Constant(samples(), classes(), true);
  for (Index i = 0; i < samples(); ++i) {
    auto it = ownership.find(dataset_tags[static_cast<std::size_t>(i)]);
    if (it == ownership.end()) {
      continue;
    }
    mask.row(i).setConstant(false);
    for (Index c : it->second) {
      mask(i, c) = true;
    }
  }
  return mask;
}

LabelMatrix LabelMatrix::select_rows(const std::vector<Index>& rows) const {
  LabelMatrix out;
  out.labels.resize(static_cast<Index>(rows.size()), classes());
  out.class_names = class_names;
  out.ownership = ownership;
  out.sample_ids.reserve(rows.size());
  out.dataset_tags.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.labels.row(static_cast<Index>(k)) = labels.row(rows[k]);
    out.sample_ids.push_back(sample_ids[static_cast<std::size_t>(rows[k])]);
    out.dataset_tags.push_back(dataset_tags[static_cast<std::size_t>(rows[k])]);
  }
  return out;
}

LabelMatrix LabelMatrix::from_dense(BinaryMatrix labels, std::vector<std::string> class_names) {
  LabelMatrix out;
  out.labels = std::move(labels);
  const auto f = static_cast<std::size_t>(out.labels.rows());
  const auto d = static_cast<std::size_t>(out.labels.cols());
  if (class_names.empty()) {
    for (std::size_t c = 0; c < d; ++c) {
      class_names.push_back("c" + std::to_string(c));
    }
  }
  out.class_names = std::move(class_names);
  out.sample_ids.reserve(f);
  for (std::size_t i = 0; i < f; ++i) {
    out.sample_ids.push_back("s" + std::to_string(i));
  }
  out.dataset_tags.assign(f, kDefaultDataset);
  return out;
}

ClassWeights ClassWeights::uniform(Index classes) {
  ClassWeights w;
  w.w_pos = Eigen::VectorXd::Ones(classes);
  w.w_neg = Eigen::VectorXd::Ones(classes);
  w.pos_count = Eigen::VectorXi::Zero(classes);
  w.neg_count = Eigen::VectorXi::Zero(classes);
  w.degenerate.assign(static_cast<std::size_t>(classes), false);
  return w;
}

BoolVector SpatialLabelMatrix::active_rows() const {
  return available.rowwise().any();
}

void SpatialLabelMatrix::validate() const {
  if (labels.cols() != kClasses) {
    throw DataError("spatial labels need exactly 9 columns");
  }
  if (available.rows() != labels.rows()) {
    throw DataError("spatial availability must have one row per sample");
  }
  if (((labels.array() != 0) && (labels.array() != 1)).any()) {
    throw DataError("spatial label entries must be 0 or 1");
  }
}

ClassWeights compute_class_weights(const BinaryMatrix& labels, const BoolMatrix& mask) {
  if (mask.rows() != labels.rows() || mask.cols() != labels.cols()) {
    throw DataError("class weight mask shape does not match labels");
  }
  const Index d = labels.cols();
  ClassWeights w = ClassWeights::uniform(d);
  for (Index c = 0; c < d; ++c) {
    int pos = 0;
    int neg = 0;
    for (Index i = 0; i < labels.rows(); ++i) {
      if (!mask(i, c)) {
        continue;
      }
      if (labels(i, c) == 1) {
        ++pos;
      } else {
        ++neg;
      }
    }
    w.pos_count(c) = pos;
    w.neg_count(c) = neg;
    if (pos == 0 || neg == 0) {
      w.degenerate[static_cast<std::size_t>(c)] = true;
      continue;
    }
    const double total = static_cast<double>(pos + neg);
    w.w_pos(c) = total / pos;
    w.w_neg(c) = total / neg;
  }
  return w;
}

ClassWeights compute_class_weights(const LabelMatrix& labels) {
  labels.validate();
  return compute_class_weights(labels.labels, labels.ownership_mask());
}

CorrelationStats compute_correlation(const LabelMatrix& labels) {
  labels.validate();
  if (labels.samples() < 2) {
    throw DataError("correlation needs at least two samples");
  }
  CorrelationStats out = compute_correlation(labels.labels);
  out.class_names = labels.class_names;
  return out;
}

NoiseProfile NoiseProfile::from_rates(const Eigen::VectorXd& sensitivity, const Eigen::VectorXd& specificity,
                                      double lambda_noise) {
  if (sensitivity.size() != specificity.size()) {
    throw DataError("sensitivity and specificity sizes differ");
  }
  if ((sensitivity.array() < 0.0).any() || (sensitivity.array() > 1.0).any() ||
      (specificity.array() < 0.0).any() || (specificity.array() > 1.0).any()) {
    throw DataError("sensitivity and specificity must lie in [0, 1]");
  }
  if (!(lambda_noise >= 0.0)) {
    throw DataError("lambda_noise must be nonnegative");
  }
  const Index d = sensitivity.size();
  NoiseProfile p;
  for (Index c = 0; c < d; ++c) {
    p.class_names.push_back("c" + std::to_string(c));
  }
  p.sensitivity = sensitivity;
  p.specificity = specificity;
  p.f_pos = (1.0 - sensitivity.array()).matrix();
  p.f_neg = (1.0 - specificity.array()).matrix();
  p.lambda_noise = lambda_noise;
  p.active.assign(static_cast<std::size_t>(d), true);
  p.true_pos = p.pos = p.true_neg = p.neg = Eigen::VectorXi::Zero(d);
  return p;
}

NoiseProfile measure_noise_profile(const LabelMatrix& original, const LabelMatrix& reread, double lambda_noise) {
  original.validate();
  reread.validate();
  std::unordered_map<std::string, Index> row_of;
  row_of.reserve(original.sample_ids.size());
  for (std::size_t i = 0; i < original.sample_ids.size(); ++i) {
    row_of.emplace(original.sample_ids[i], static_cast<Index>(i));
  }
  std::unordered_map<std::string, Index> reread_col;
  for (std::size_t c = 0; c < reread.class_names.size(); ++c) {
    reread_col.emplace(reread.class_names[c], static_cast<Index>(c));
  }

  const Index d = original.classes();
  NoiseProfile p = NoiseProfile::from_rates(Eigen::VectorXd::Ones(d), Eigen::VectorXd::Ones(d), lambda_noise);
  p.class_names = original.class_names;

  std::vector<Index> matched(reread.sample_ids.size());
  for (std::size_t k = 0; k < reread.sample_ids.size(); ++k) {
    auto it = row_of.find(reread.sample_ids[k]);
    if (it == row_of.end()) {
      throw DataError("re-read sample '" + reread.sample_ids[k] + "' is not in the original labels");
    }
    matched[k] = it->second;
  }

  for (Index c = 0; c < d; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    auto col = reread_col.find(original.class_names[cu]);
    if (col == reread_col.end()) {
      p.active[cu] = false;
      p.f_pos(c) = 0.0;
      p.f_neg(c) = 0.0;
      continue;
    }
    int tp = 0, pos = 0, tn = 0, neg = 0;
    for (std::size_t k = 0; k < matched.size(); ++k) {
      const int truth = reread.labels(static_cast<Index>(k), col->second);
      const int given = original.labels(matched[k], c);
      if (truth == 1) {
        ++pos;
        tp += given == 1;
      } else {
        ++neg;
        tn += given == 0;
      }
    }
    p.true_pos(c) = tp;
    p.pos(c) = pos;
    p.true_neg(c) = tn;
    p.neg(c) = neg;
    if (pos == 0 || neg == 0) {
      p.active[cu] = false;
      p.f_pos(c) = 0.0;
      p.f_neg(c) = 0.0;
      continue;
    }
    p.sensitivity(c) = static_cast<double>(tp) / pos;
    p.specificity(c) = static_cast<double>(tn) / neg;
    p.f_pos(c) = 1.0 - p.sensitivity(c);
    p.f_neg(c) = 1.0 - p.specificity(c);
  }
  return p;
}

}  // namespace noisylab

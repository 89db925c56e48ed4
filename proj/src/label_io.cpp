#include "noisylab/label_io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "noisylab/error.hpp"

namespace noisylab {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot read " + path.string());
  }
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
  return os;
}

int parse_binary_cell(const std::string& cell, const std::string& where) {
  const std::string t = trim(cell);
  if (t == "0") {
    return 0;
  }
  if (t == "1") {
    return 1;
  }
  throw DataError(where + ": label cell '" + cell + "' is not 0 or 1");
}

std::vector<bool> bools_from_string(const std::string& s, std::size_t n, const std::string& key) {
  const auto parts = split(s, ',');
  if (parts.size() != n) {
    throw DataError("'" + key + "' needs " + std::to_string(n) + " entries");
  }
  std::vector<bool> out;
  for (const auto& p : parts) {
    out.push_back(parse_binary_cell(p, key) == 1);
  }
  return out;
}

std::string bools_to_string(const std::vector<bool>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "");
    out += v[i] ? "1" : "0";
  }
  return out;
}

Eigen::MatrixXd as_row(const Eigen::VectorXd& v) { return v.transpose(); }

Eigen::VectorXd row_vector(const StructuredText& doc, const std::string& name, Eigen::Index n) {
  const Eigen::MatrixXd& m = doc.matrix(name);
  if (m.rows() != 1 || m.cols() != n) {
    throw DataError("matrix '" + name + "' must be 1 x " + std::to_string(n));
  }
  return m.row(0).transpose();
}

}  // namespace

void write_labels_csv(std::ostream& os, const LabelMatrix& labels) {
  labels.validate();
  for (const auto& [tag, owned] : labels.ownership) {
    std::vector<std::string> names;
    for (Index c : owned) {
      names.push_back(labels.class_names[static_cast<std::size_t>(c)]);
    }
    os << "# ownership " << tag << '=' << join(names, ";") << '\n';
  }
  os << "sample_id,dataset_tag";
  for (const auto& name : labels.class_names) {
    os << ',' << name;
  }
  os << '\n';
  for (Index i = 0; i < labels.samples(); ++i) {
    os << labels.sample_ids[static_cast<std::size_t>(i)] << ',' << labels.dataset_tags[static_cast<std::size_t>(i)];
    for (Index c = 0; c < labels.classes(); ++c) {
      os << ',' << labels.labels(i, c);
    }
    os << '\n';
  }
}

void write_labels_csv(const std::filesystem::path& path, const LabelMatrix& labels) {
  auto os = open_out(path);
  write_labels_csv(os, labels);
}

LabelMatrix read_labels_csv(std::istream& is, const std::string& source) {
  LabelMatrix out;
  std::vector<std::pair<std::string, std::vector<std::string>>> owned_names;
  std::vector<std::vector<int>> rows;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty()) {
      continue;
    }
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("ownership ", 0) == 0) {
        const std::string spec = trim(body.substr(10));
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
          throw DataError(where + ": malformed ownership line");
        }
        owned_names.emplace_back(trim(spec.substr(0, eq)), split(spec.substr(eq + 1), ';'));
      }
      continue;
    }
    auto cells = split(line, ',');
    if (!have_header) {
      if (cells.size() < 3 || trim(cells[0]) != "sample_id" || trim(cells[1]) != "dataset_tag") {
        throw DataError(where + ": header must start with sample_id,dataset_tag and name at least one class");
      }
      for (std::size_t c = 2; c < cells.size(); ++c) {
        out.class_names.push_back(trim(cells[c]));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != out.class_names.size() + 2) {
      throw DataError(where + ": expected " + std::to_string(out.class_names.size() + 2) + " cells, got " +
                      std::to_string(cells.size()));
    }
    out.sample_ids.push_back(trim(cells[0]));
    out.dataset_tags.push_back(trim(cells[1]));
    std::vector<int> row;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      row.push_back(parse_binary_cell(cells[c], where));
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) {
    throw DataError(source + ": missing header row");
  }
  if (rows.empty()) {
    throw DataError(source + ": no samples");
  }
  out.labels.resize(static_cast<Index>(rows.size()), static_cast<Index>(out.class_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out.labels(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
  }
  std::unordered_map<std::string, Index> col_of;
  for (std::size_t c = 0; c < out.class_names.size(); ++c) {
    col_of.emplace(out.class_names[c], static_cast<Index>(c));
  }
  for (const auto& [tag, names] : owned_names) {
    std::vector<Index> owned;
    for (const auto& n : names) {
      auto it = col_of.find(trim(n));
      if (it == col_of.end()) {
        throw DataError(source + ": ownership of '" + tag + "' names unknown class '" + n + "'");
      }
      owned.push_back(it->second);
    }
    out.ownership[tag] = owned;
  }
  try {
    out.validate();
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
  return out;
}

LabelMatrix read_labels_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_labels_csv(is, path.string());
}

void write_spatial_csv(const std::filesystem::path& path, const std::vector<std::string>& sample_ids,
                       const std::vector<std::string>& class_names, const SpatialLabelMatrix& spatial) {
  spatial.validate();
  auto os = open_out(path);
  os << "sample_id";
  for (auto name : SpatialLabelMatrix::kNames) {
    os << ',' << name;
  }
  for (const auto& c : class_names) {
    os << ",avail:" << c;
  }
  os << '\n';
  for (Index i = 0; i < spatial.samples(); ++i) {
    os << sample_ids[static_cast<std::size_t>(i)];
    for (Index m = 0; m < SpatialLabelMatrix::kClasses; ++m) {
      os << ',' << spatial.labels(i, m);
    }
    for (Index c = 0; c < spatial.available.cols(); ++c) {
      os << ',' << (spatial.available(i, c) ? 1 : 0);
    }
    os << '\n';
  }
}

SpatialLabelMatrix read_spatial_csv(const std::filesystem::path& path, std::vector<std::string>* sample_ids) {
  auto is = open_in(path);
  std::string line;
  int lineno = 0;
  Index classes = -1;
  std::vector<std::vector<int>> rows;
  std::vector<std::string> ids;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty() || line[0] == '#') {
      continue;
    }
    auto cells = split(line, ',');
    if (classes < 0) {
      if (cells.size() < 1 + SpatialLabelMatrix::kClasses || trim(cells[0]) != "sample_id") {
        throw DataError(where + ": malformed spatial header");
      }
      classes = static_cast<Index>(cells.size()) - 1 - SpatialLabelMatrix::kClasses;
      continue;
    }
    if (static_cast<Index>(cells.size()) != 1 + SpatialLabelMatrix::kClasses + classes) {
      throw DataError(where + ": wrong number of cells");
    }
    ids.push_back(trim(cells[0]));
    std::vector<int> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      row.push_back(parse_binary_cell(cells[c], where));
    }
    rows.push_back(std::move(row));
  }
  if (classes < 0) {
    throw DataError(path.string() + ": missing header row");
  }
  SpatialLabelMatrix out;
  out.labels.resize(static_cast<Index>(rows.size()), SpatialLabelMatrix::kClasses);
  out.available.resize(static_cast<Index>(rows.size()), classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ii = static_cast<Index>(i);
    for (Index m = 0; m < SpatialLabelMatrix::kClasses; ++m) {
      out.labels(ii, m) = rows[i][static_cast<std::size_t>(m)];
    }
    for (Index c = 0; c < classes; ++c) {
      out.available(ii, c) = rows[i][static_cast<std::size_t>(SpatialLabelMatrix::kClasses + c)] == 1;
    }
  }
  if (sample_ids) {
    *sample_ids = std::move(ids);
  }
  return out;
}

void write_predictions_csv(const std::filesystem::path& path, const PredictionTable& table) {
  auto os = open_out(path);
  os << "sample_id";
  for (const auto& c : table.class_names) {
    os << ',' << c;
  }
  os << '\n';
  for (Index i = 0; i < table.scores.rows(); ++i) {
    os << table.sample_ids[static_cast<std::size_t>(i)];
    for (Index c = 0; c < table.scores.cols(); ++c) {
      os << ',' << format_double(table.scores(i, c));
    }
    os << '\n';
  }
}

PredictionTable read_predictions_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  PredictionTable out;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty() || line[0] == '#') {
      continue;
    }
    auto cells = split(line, ',');
    if (!header) {
      if (cells.size() < 2 || trim(cells[0]) != "sample_id") {
        throw DataError(where + ": prediction header must start with sample_id");
      }
      for (std::size_t c = 1; c < cells.size(); ++c) {
        out.class_names.push_back(trim(cells[c]));
      }
      header = true;
      continue;
    }
    if (cells.size() != out.class_names.size() + 1) {
      throw DataError(where + ": wrong number of cells");
    }
    out.sample_ids.push_back(trim(cells[0]));
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      row.push_back(parse_double(cells[c], where));
    }
    rows.push_back(std::move(row));
  }
  if (!header) {
    throw DataError(path.string() + ": missing header row");
  }
  out.scores.resize(static_cast<Index>(rows.size()), static_cast<Index>(out.class_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out.scores(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
  }
  return out;
}

StructuredText to_structured(const NoiseProfile& profile) {
  StructuredText doc;
  doc.set("type", "noise_profile");
  doc.set("classes", join(profile.class_names, ","));
  doc.set("lambda_noise", format_double(profile.lambda_noise));
  doc.set("active", bools_to_string(profile.active));
  doc.set_matrix("sensitivity", as_row(profile.sensitivity));
  doc.set_matrix("specificity", as_row(profile.specificity));
  doc.set_matrix("f_pos", as_row(profile.f_pos));
  doc.set_matrix("f_neg", as_row(profile.f_neg));
  Eigen::MatrixXd counts(4, profile.classes());
  counts.row(0) = profile.true_pos.cast<double>().transpose();
  counts.row(1) = profile.pos.cast<double>().transpose();
  counts.row(2) = profile.true_neg.cast<double>().transpose();
  counts.row(3) = profile.neg.cast<double>().transpose();
  doc.set_matrix("counts_tp_p_tn_n", counts);
  return doc;
}

NoiseProfile noise_profile_from_structured(const StructuredText& doc) {
  if (doc.get_or("type", "") != "noise_profile") {
    throw DataError("not a noise profile file");
  }
  NoiseProfile p;
  p.class_names = split(doc.get("classes"), ',');
  const auto d = static_cast<Index>(p.class_names.size());
  p.lambda_noise = doc.get_double("lambda_noise");
  p.active = bools_from_string(doc.get("active"), p.class_names.size(), "active");
  p.sensitivity = row_vector(doc, "sensitivity", d);
  p.specificity = row_vector(doc, "specificity", d);
  p.f_pos = row_vector(doc, "f_pos", d);
  p.f_neg = row_vector(doc, "f_neg", d);
  p.true_pos = p.pos = p.true_neg = p.neg = Eigen::VectorXi::Zero(d);
  if (doc.has_matrix("counts_tp_p_tn_n")) {
    const Eigen::MatrixXd& counts = doc.matrix("counts_tp_p_tn_n");
    if (counts.rows() != 4 || counts.cols() != d) {
      throw DataError("matrix 'counts_tp_p_tn_n' has the wrong shape");
    }
    p.true_pos = counts.row(0).transpose().cast<int>();
    p.pos = counts.row(1).transpose().cast<int>();
    p.true_neg = counts.row(2).transpose().cast<int>();
    p.neg = counts.row(3).transpose().cast<int>();
  }
  return p;
}

StructuredText to_structured(const CorrelationStats& stats) {
  StructuredText doc;
  doc.set("type", "correlation");
  doc.set("convention", stats.convention);
  doc.set("classes", join(stats.class_names, ","));
  doc.set("zero_variance", bools_to_string(stats.zero_variance));
  doc.set_matrix("means", as_row(stats.means));
  doc.set_matrix("stddevs", as_row(stats.stddevs));
  doc.set_matrix("pearson", stats.pearson);
  doc.set_matrix("covariance", stats.covariance);
  return doc;
}

CorrelationStats correlation_from_structured(const StructuredText& doc) {
  if (doc.get_or("type", "") != "correlation") {
    throw DataError("not a correlation file");
  }
  CorrelationStats s;
  s.class_names = split(doc.get("classes"), ',');
  const auto d = static_cast<Index>(s.class_names.size());
  s.convention = doc.get("convention");
  s.zero_variance = bools_from_string(doc.get("zero_variance"), s.class_names.size(), "zero_variance");
  s.means = row_vector(doc, "means", d);
  s.stddevs = row_vector(doc, "stddevs", d);
  s.pearson = doc.matrix("pearson");
  s.covariance = doc.matrix("covariance");
  if (s.pearson.rows() != d || s.pearson.cols() != d || s.covariance.rows() != d || s.covariance.cols() != d) {
    throw DataError("correlation matrices must be D x D");
  }
  return s;
}

}  // namespace noisylab

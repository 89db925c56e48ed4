#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "noisylab/config_file.hpp"
#include "noisylab/label_model.hpp"

namespace noisylab {

// Label CSV layout:
//
//   # ownership <tag>=<class>;<class>...     (optional, one line per dataset)
//   sample_id,dataset_tag,<class 1>,...,<class D>
//   s0,default,0,1,...
//
// Every class cell must be exactly "0" or "1"; violations are reported with the
// file and line number.
void write_labels_csv(std::ostream& os, const LabelMatrix& labels);
void write_labels_csv(const std::filesystem::path& path, const LabelMatrix& labels);
LabelMatrix read_labels_csv(std::istream& is, const std::string& source = "<stream>");
LabelMatrix read_labels_csv(const std::filesystem::path& path);

// Spatial CSV: sample_id, the nine spatial classes, then one `avail:<class>`
// column per abnormality class.
void write_spatial_csv(const std::filesystem::path& path, const std::vector<std::string>& sample_ids,
                       const std::vector<std::string>& class_names, const SpatialLabelMatrix& spatial);
SpatialLabelMatrix read_spatial_csv(const std::filesystem::path& path, std::vector<std::string>* sample_ids = nullptr);

/// Per-sample scores, one column per class: `sample_id,<class 1>,...`.
struct PredictionTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> class_names;
  Eigen::MatrixXd scores;
};

void write_predictions_csv(const std::filesystem::path& path, const PredictionTable& table);
PredictionTable read_predictions_csv(const std::filesystem::path& path);

StructuredText to_structured(const NoiseProfile& profile);
NoiseProfile noise_profile_from_structured(const StructuredText& doc);
StructuredText to_structured(const CorrelationStats& stats);
CorrelationStats correlation_from_structured(const StructuredText& doc);

}  // namespace noisylab

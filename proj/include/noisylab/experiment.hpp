#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "noisylab/config_file.hpp"
#include "noisylab/label_io.hpp"
#include "noisylab/metrics.hpp"
#include "noisylab/synthetic.hpp"
#include "noisylab/trainer.hpp"

namespace noisylab {

/// One column of the results table. Names are "baseline" or "baseline" plus
/// "+norm", "+seg", "+loc", "+noise", "+corr" in any combination, plus the
/// shorthands "all-noise", "all-corr" and "all".
struct RunConfiguration {
  std::string name;
  bool norm = false;
  bool seg = false;
  bool loc = false;
  bool noise = false;
  bool corr = false;

  static RunConfiguration parse(const std::string& name);
};

struct ExperimentSpec {
  GeneratorConfig generator;
  Index n_train = 10000;
  Index n_validation = 2000;
  Index n_test = 2000;
  /// Training samples whose true labels are read back to measure the noise
  /// profile and label correlation.
  Index calibration_size = 1000;
  std::vector<RunConfiguration> configurations;
  int seeds = 5;
  std::uint64_t base_seed = 1;
  std::string output = "results";
  TrainConfig train;
  FeatureConfig features;
  double lambda_noise = 0.1;
  int bootstrap_replicates = 1000;

  void validate() const;
  StructuredText to_structured() const;
  static ExperimentSpec from_structured(const StructuredText& doc);
};

/// Everything one replicate needs: splits with features for both input
/// pipelines, loss priors and the test-set organ masks.
struct PreparedData {
  std::vector<std::string> class_names;
  TrainingSplit train, validation, test;  // features without normalization
  Eigen::MatrixXd train_norm, validation_norm, test_norm;
  std::vector<std::string> test_ids;
  std::vector<Eigen::ArrayXXi> test_lungs, test_hearts;
  TrainingPriors priors;
};

/// Generates the replicate's dataset: training and validation carry noisy
/// labels (clean kept for logging), the test split carries clean labels.
PreparedData prepare_data(const ExperimentSpec& spec, int replicate);

struct RunOutcome {
  std::string configuration;
  int replicate = 0;
  bool failed = false;
  std::string message;
  Eigen::VectorXd test_auc;
  double dice_lungs = std::nan("");
  double dice_heart = std::nan("");
};

/// Trains one configuration on prepared data and writes log.csv,
/// predictions.csv, model.ckpt and status into `dir`.
RunOutcome run_configuration(const ExperimentSpec& spec, const RunConfiguration& config, const PreparedData& data,
                             int replicate, const std::filesystem::path& dir);

/// Every configuration for every replicate into `workdir / spec.output`, then
/// the report. `progress` is called after each run.
std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec, const std::filesystem::path& workdir,
                                       const std::function<void(const RunOutcome&)>& progress = {});

struct ReportCell {
  std::string configuration;
  std::string class_name;
  double mean_auc = std::nan("");
  double pooled_auc = std::nan("");
  ConfidenceInterval ci;
  double p_vs_baseline = std::nan("");
  int seeds_ok = 0;
  int seeds_failed = 0;
  std::vector<std::string> sources;
};

struct Report {
  std::vector<std::string> configurations;
  std::vector<std::string> class_names;
  std::vector<ReportCell> cells;  // configuration-major, classes then "Average"

  const ReportCell& cell(const std::string& configuration, const std::string& class_name) const;
  void write_csv(std::ostream& os) const;
  void write_table(std::ostream& os) const;
};

/// Deterministic reduction over an experiment output directory. Throws
/// NoResults when it holds no finished runs.
Report report_from_directory(const std::filesystem::path& dir, int bootstrap_replicates, std::uint64_t seed);

/// report.csv and report.txt inside `dir`.
Report write_report(const std::filesystem::path& dir, int bootstrap_replicates, std::uint64_t seed);

}  // namespace noisylab

// noisylab command-line front end. Every path is taken relative to --workdir.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisylab/config_file.hpp"
#include "noisylab/error.hpp"
#include "noisylab/experiment.hpp"
#include "noisylab/label_io.hpp"
#include "noisylab/label_model.hpp"
#include "noisylab/metrics.hpp"
#include "noisylab/normalization.hpp"
#include "noisylab/pgm.hpp"
#include "noisylab/special.hpp"
#include "noisylab/synthetic.hpp"
#include "noisylab/trainer.hpp"

namespace fs = std::filesystem;
using namespace noisylab;

namespace {

struct Common {
  std::string workdir = ".";
  std::uint64_t seed = 1;

  fs::path at(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(workdir) / path;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--workdir", common.workdir, "Directory that relative paths resolve against");
  cmd->add_option("--seed", common.seed, "Seed for every stochastic step");
}

std::string cell(double v, int digits = 3) {
  if (std::isnan(v)) {
    return "-";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- generate ----

struct GenerateArgs {
  std::string config;
  long long n = 1000;
  bool shift = false;
  std::string out = "data";
};

int cmd_generate(const Common& common, const GenerateArgs& a) {
  GeneratorConfig g = a.config.empty() ? GeneratorConfig::standard_benchmark(a.n, common.seed)
                                       : GeneratorConfig::from_structured(StructuredText::load(common.at(a.config)));
  g.n_samples = a.n;
  g.seed = common.seed;
  g.intensity_shift = g.intensity_shift || a.shift;
  const SyntheticDataset data = generate_dataset(g);
  write_dataset(data, common.at(a.out));
  std::cout << "wrote " << data.samples() << " samples to " << common.at(a.out).string() << '\n';
  return 0;
}

// ---- normalize ----

struct NormalizeArgs {
  std::string input;
  std::string output;
  WindowConfig window;
};

void normalize_file(const fs::path& in, const fs::path& out, const WindowConfig& window) {
  const PgmImage img = read_pgm(in);
  WindowBounds bounds;
  const GrayImage<double> unit = normalize(img.pixels, window, &bounds);
  write_pgm_unit16(out, unit);
  std::cout << in.filename().string() << ": b_low=" << format_double(bounds.b_low)
            << " b_high=" << format_double(bounds.b_high) << (bounds.raw_fallback ? " (raw range fallback)" : "")
            << '\n';
}

int cmd_normalize(const Common& common, const NormalizeArgs& a) {
  const fs::path in = common.at(a.input);
  const fs::path out = common.at(a.output);
  if (!fs::is_directory(in)) {
    normalize_file(in, out, a.window);
    return 0;
  }
  fs::create_directories(out);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in)) {
    if (entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    normalize_file(f, out / f.filename(), a.window);
  }
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string data = "data";
  std::string out = "run";
  std::string configuration = "baseline";
  long long calibration = 0;
  ExperimentSpec spec;
};

/// Loads a generated dataset and splits it 90/10 into training and validation,
/// both with the noisy labels.
PreparedData load_for_training(const fs::path& dir, const ExperimentSpec& spec, long long calibration) {
  const SyntheticDataset ds = read_dataset(dir);
  const Index f = ds.samples();
  const Index n_train = (f * 9) / 10;
  if (n_train < 1 || n_train == f) {
    throw DataError(dir.string() + ": too few samples to split");
  }
  const Eigen::MatrixXd raw = image_features(ds.images, spec.features);
  FeatureConfig nc = spec.features;
  nc.normalize = true;
  const Eigen::MatrixXd norm = image_features(ds.images, nc);
  const Eigen::MatrixXd seg =
      segmentation_targets(ds.lung_masks, ds.heart_masks, ds.config.image_size / spec.features.downsample);
  std::vector<Index> train_rows(static_cast<std::size_t>(n_train));
  std::iota(train_rows.begin(), train_rows.end(), Index{0});
  std::vector<Index> val_rows(static_cast<std::size_t>(f - n_train));
  std::iota(val_rows.begin(), val_rows.end(), n_train);

  PreparedData out;
  out.class_names = ds.true_labels.class_names;
  const auto split = [&](const std::vector<Index>& rows, Eigen::MatrixXd& normed) {
    TrainingSplit s;
    s.features = raw(rows, Eigen::all);
    s.labels = ds.noisy_labels.select_rows(rows);
    s.clean = ds.true_labels.select_rows(rows).labels;
    s.spatial.labels = ds.spatial.labels(rows, Eigen::all);
    s.spatial.available = ds.spatial.available(rows, Eigen::all);
    s.segmentation = seg(rows, Eigen::all);
    normed = norm(rows, Eigen::all);
    return s;
  };
  out.train = split(train_rows, out.train_norm);
  out.validation = split(val_rows, out.validation_norm);
  out.test = out.validation;
  out.test_norm = out.validation_norm;
  for (Index r : val_rows) {
    out.test_ids.push_back(ds.true_labels.sample_ids[static_cast<std::size_t>(r)]);
    out.test_lungs.push_back(ds.lung_masks[static_cast<std::size_t>(r)]);
    out.test_hearts.push_back(ds.heart_masks[static_cast<std::size_t>(r)]);
  }
  out.test.labels = ds.true_labels.select_rows(val_rows);

  out.priors.weights = compute_class_weights(out.train.labels);
  out.priors.spatial_weights = compute_spatial_weights(out.train.spatial);
  const Index cal = calibration > 0 ? std::min<Index>(calibration, n_train) : std::max<Index>(1, n_train / 10);
  std::vector<Index> cal_rows(static_cast<std::size_t>(cal));
  std::iota(cal_rows.begin(), cal_rows.end(), Index{0});
  const LabelMatrix reread = ds.true_labels.select_rows(cal_rows);
  out.priors.noise = measure_noise_profile(ds.noisy_labels.select_rows(cal_rows), reread, spec.lambda_noise);
  out.priors.correlation = compute_correlation(reread);
  return out;
}

int cmd_train(const Common& common, TrainArgs& a) {
  a.spec.base_seed = common.seed;
  const RunConfiguration config = RunConfiguration::parse(a.configuration);
  a.spec.configurations = {config};
  const PreparedData data = load_for_training(common.at(a.data), a.spec, a.calibration);
  if (a.spec.train.batch_size > data.train.samples()) {
    throw UsageError("batch_size exceeds the training split (" + std::to_string(data.train.samples()) + ")");
  }
  const fs::path out = common.at(a.out);
  const RunOutcome o = run_configuration(a.spec, config, data, 0, out);
  to_structured(*data.priors.noise).save(out / "noise_profile.txt");
  to_structured(*data.priors.correlation).save(out / "correlation.txt");
  if (o.failed) {
    std::cerr << "error [NumericalError]: training diverged: " << o.message << " (log kept in "
              << (out / "log.csv").string() << ")\n";
    return static_cast<int>(ExitCode::Numerical);
  }
  std::cout << "validation AUC against true labels:\n";
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    std::cout << "  " << data.class_names[c] << ' ' << cell(o.test_auc(static_cast<Index>(c))) << '\n';
  }
  if (!std::isnan(o.dice_lungs)) {
    std::cout << "Dice lungs " << cell(o.dice_lungs) << ", heart " << cell(o.dice_heart) << '\n';
  }
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string model;
  std::string data = "data";
  std::string labels;
  std::string out;
  bool norm = false;
  int bootstrap = 1000;
  FeatureConfig features;
};

int cmd_evaluate(const Common& common, EvaluateArgs& a) {
  const ModelState model = load_checkpoint(common.at(a.model));
  const SyntheticDataset ds = read_dataset(common.at(a.data));
  const LabelMatrix labels =
      a.labels.empty() ? ds.true_labels : read_labels_csv(common.at(a.labels));
  if (labels.sample_ids != ds.true_labels.sample_ids) {
    throw DataError("label file lists different samples than the dataset");
  }
  a.features.normalize = a.norm;
  const Eigen::MatrixXd x = image_features(ds.images, a.features);
  const Predictions<double> pred = forward(model, x, {false, true});
  if (pred.abnormality.cols() != labels.classes()) {
    throw DataError("model predicts " + std::to_string(pred.abnormality.cols()) + " classes, labels hold " +
                    std::to_string(labels.classes()));
  }
  if (!a.out.empty()) {
    write_predictions_csv(common.at(a.out), {labels.sample_ids, labels.class_names, pred.abnormality});
  }
  const BoolMatrix mask = labels.ownership_mask();
  std::cout << "class,auc,ci_low,ci_high\n";
  for (Index c = 0; c < labels.classes(); ++c) {
    std::vector<double> s;
    std::vector<int> y;
    for (Index i = 0; i < labels.samples(); ++i) {
      if (mask(i, c)) {
        s.push_back(pred.abnormality(i, c));
        y.push_back(labels.labels(i, c));
      }
    }
    const Eigen::VectorXd sv = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Index>(s.size()));
    const Eigen::VectorXi yv = Eigen::Map<Eigen::VectorXi>(y.data(), static_cast<Index>(y.size()));
    std::cout << labels.class_names[static_cast<std::size_t>(c)] << ',';
    if (yv.sum() == 0 || yv.sum() == yv.size()) {
      std::cout << "undefined,,\n";
      continue;
    }
    const ConfidenceInterval ci = bootstrap_ci(sv, yv, a.bootstrap, derive_seed(common.seed, static_cast<std::uint64_t>(c)));
    std::cout << format_double(auc(sv, yv).auc) << ',' << format_double(ci.low) << ',' << format_double(ci.high)
              << '\n';
  }
  return 0;
}

// ---- measure-noise / correlate ----

struct MeasureArgs {
  std::string labels;
  std::string reference;
  std::string out;
  double lambda = 0.1;
};

int cmd_measure_noise(const Common& common, const MeasureArgs& a) {
  const LabelMatrix noisy = read_labels_csv(common.at(a.labels));
  const LabelMatrix truth = read_labels_csv(common.at(a.reference));
  const NoiseProfile p = measure_noise_profile(noisy, truth, a.lambda);
  std::size_t width = std::string("Abnormality").size();
  for (const auto& n : p.class_names) {
    width = std::max(width, n.size());
  }
  const auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  std::cout << pad("Abnormality") << "  Sensitivity  Specificity\n";
  for (Index c = 0; c < p.classes(); ++c) {
    const std::string& name = p.class_names[static_cast<std::size_t>(c)];
    if (!p.active[static_cast<std::size_t>(c)]) {
      std::cout << pad(name) << "  -            -\n";
      continue;
    }
    std::cout << pad(name) << "  " << cell(p.sensitivity(c)) << "        " << cell(p.specificity(c)) << '\n';
  }
  if (!a.out.empty()) {
    to_structured(p).save(common.at(a.out));
  }
  return 0;
}

struct CorrelateArgs {
  std::string labels;
  std::string out;
  std::string kind = "pearson";
};

int cmd_correlate(const Common& common, const CorrelateArgs& a) {
  const LabelMatrix labels = read_labels_csv(common.at(a.labels));
  const CorrelationStats stats = compute_correlation(labels);
  const Eigen::MatrixXd& m = a.kind == "covariance" ? stats.covariance : stats.pearson;
  std::ostringstream os;
  os << "class";
  for (const auto& n : labels.class_names) {
    os << ',' << n;
  }
  os << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    os << labels.class_names[static_cast<std::size_t>(r)];
    for (Index c = 0; c < m.cols(); ++c) {
      os << ',' << format_double(m(r, c));
    }
    os << '\n';
  }
  for (std::size_t c = 0; c < stats.zero_variance.size(); ++c) {
    if (stats.zero_variance[c]) {
      std::cerr << "warning: class " << labels.class_names[c] << " has zero variance; its correlations are 0\n";
    }
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(common.at(a.out));
    if (!f) {
      throw DataError("cannot write " + common.at(a.out).string());
    }
    f << os.str();
  }
  return 0;
}

// ---- report / run ----

struct ReportArgs {
  std::string dir = "results";
  int bootstrap = 1000;
};

int cmd_report(const Common& common, const ReportArgs& a) {
  const Report r = write_report(common.at(a.dir), a.bootstrap, derive_seed(common.seed, 300));
  r.write_table(std::cout);
  return 0;
}

struct RunArgs {
  std::string spec;
  bool seed_given = false;
};

int cmd_run(const Common& common, const RunArgs& a) {
  ExperimentSpec spec = ExperimentSpec::from_structured(StructuredText::load(common.at(a.spec)));
  if (a.seed_given) {
    spec.base_seed = common.seed;
  }
  int failed = 0;
  run_experiment(spec, fs::path(common.workdir), [&](const RunOutcome& o) {
    failed += o.failed;
    std::cerr << o.configuration << " seed " << o.replicate << ": " << (o.failed ? "failed: " + o.message : "ok")
              << '\n';
  });
  const fs::path out = common.at(spec.output);
  std::ifstream table(out / "report.txt");
  std::cout << table.rdbuf();
  if (failed) {
    std::cerr << failed << " run(s) failed; they are marked in the report\n";
  }
  return 0;
}

void add_training_options(CLI::App* cmd, ExperimentSpec& spec) {
  cmd->add_option("--epochs", spec.train.max_epochs, "Maximum epochs");
  cmd->add_option("--batch-size", spec.train.batch_size, "Mini-batch size");
  cmd->add_option("--learning-rate", spec.train.adam.learning_rate, "Initial Adam learning rate");
  cmd->add_option("--hidden", spec.train.hidden, "Width of both trunk layers");
  cmd->add_option("--plateau-patience", spec.train.plateau_patience, "Epochs without improvement before LR / 10");
  cmd->add_option("--early-stop-patience", spec.train.early_stop_patience, "Epochs without improvement before stopping");
  cmd->add_option("--lambda-noise", spec.lambda_noise, "Weight of the noise regularizer");
  cmd->add_option("--alpha-seg", spec.train.loss.alpha_seg, "Weight of the segmentation loss");
  cmd->add_option("--alpha-loc", spec.train.loss.alpha_loc, "Weight of the spatial loss");
  cmd->add_option("--corr-scale", spec.train.loss.corr_options.scale, "Multiplier of the correlation term");
  cmd->add_flag("--corr-pearson", spec.train.loss.corr_options.use_pearson, "Couple classes by Pearson correlation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label chest X-ray classification experiments on synthetic data"};
  app.require_subcommand(1);
  Common common;

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset (labels, images, masks)");
  add_common(generate, common);
  generate->add_option("--config", gen.config, "Generator settings file (default: standard benchmark)");
  generate->add_option("-n,--samples", gen.n, "Number of samples")->check(CLI::PositiveNumber);
  generate->add_flag("--intensity-shift", gen.shift, "Apply a random affine intensity change per image");
  generate->add_option("--out", gen.out, "Output directory");

  NormalizeArgs norm;
  auto* normalize_cmd = app.add_subcommand("normalize", "Window PGM images by their smoothed histogram");
  add_common(normalize_cmd, common);
  normalize_cmd->add_option("input", norm.input, "PGM file or directory")->required();
  normalize_cmd->add_option("output", norm.output, "Output file or directory")->required();
  normalize_cmd->add_option("--tau", norm.window.tau, "Threshold as a fraction of the histogram peak");
  normalize_cmd->add_option("--median-width", norm.window.median_width, "Median filter width in bins");
  normalize_cmd->add_option("--gauss-sigma", norm.window.gauss_sigma, "Gaussian smoothing sigma in bins");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one configuration on a generated dataset");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", tr.data, "Dataset directory");
  train_cmd->add_option("--out", tr.out, "Run directory");
  train_cmd->add_option("--configuration", tr.configuration, "baseline, +noise, all-corr, baseline+norm+seg, ...");
  train_cmd->add_option("--calibration-size", tr.calibration, "Samples read back for the noise and correlation priors");
  add_training_options(train_cmd, tr.spec);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  add_common(evaluate, common);
  evaluate->add_option("--model", ev.model, "Checkpoint file")->required();
  evaluate->add_option("--data", ev.data, "Dataset directory");
  evaluate->add_option("--labels", ev.labels, "Label CSV (default: the dataset's true labels)");
  evaluate->add_option("--out", ev.out, "Write predictions CSV here");
  evaluate->add_flag("--norm", ev.norm, "The model was trained on normalized images");
  evaluate->add_option("--bootstrap", ev.bootstrap, "Bootstrap replicates for the intervals");

  MeasureArgs me;
  auto* measure = app.add_subcommand("measure-noise", "Sensitivity and specificity of labels against a reference");
  add_common(measure, common);
  measure->add_option("--labels", me.labels, "Labels under test")->required();
  measure->add_option("--reference", me.reference, "Trusted labels")->required();
  measure->add_option("--out", me.out, "Write the noise profile here");
  measure->add_option("--lambda", me.lambda, "lambda_noise stored with the profile");

  CorrelateArgs co;
  auto* correlate = app.add_subcommand("correlate", "Label correlation matrix as CSV");
  add_common(correlate, common);
  correlate->add_option("--labels", co.labels, "Label CSV")->required();
  correlate->add_option("--out", co.out, "Output CSV (default: stdout)");
  correlate->add_option("--kind", co.kind, "pearson or covariance")->check(CLI::IsMember({"pearson", "covariance"}));

  ReportArgs re;
  auto* report = app.add_subcommand("report", "Summarize an experiment directory");
  add_common(report, common);
  report->add_option("--dir", re.dir, "Experiment output directory");
  report->add_option("--bootstrap", re.bootstrap, "Bootstrap replicates for the intervals");

  RunArgs ru;
  auto* run = app.add_subcommand("run", "Run an experiment spec end to end");
  add_common(run, common);
  run->add_option("spec", ru.spec, "Experiment spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }
  try {
    if (*generate) return cmd_generate(common, gen);
    if (*normalize_cmd) return cmd_normalize(common, norm);
    if (*train_cmd) return cmd_train(common, tr);
    if (*evaluate) return cmd_evaluate(common, ev);
    if (*measure) return cmd_measure_noise(common, me);
    if (*correlate) return cmd_correlate(common, co);
    if (*report) return cmd_report(common, re);
    if (*run) {
      ru.seed_given = run->count("--seed") > 0;
      return cmd_run(common, ru);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.name() << "]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [DataError]: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  }
  return static_cast<int>(ExitCode::Usage);
}

#include "noisylab/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "noisylab/error.hpp"
#include "noisylab/special.hpp"

namespace noisylab {

namespace fs = std::filesystem;

RunConfiguration RunConfiguration::parse(const std::string& raw) {
  RunConfiguration c;
  c.name = trim(raw);
  std::string rest = c.name;
  if (rest == "all" || rest == "all-noise" || rest == "all-corr") {
    c.norm = c.seg = c.loc = true;
    c.noise = rest != "all-corr";
    c.corr = rest != "all-noise";
    return c;
  }
  if (rest.rfind("baseline", 0) == 0) {
    rest = rest.substr(8);
  } else if (rest.empty() || rest.front() != '+') {
    throw UsageError("unknown configuration '" + c.name + "'");
  }
  if (rest.empty()) {
    return c;
  }
  const std::vector<std::string> parts = split(rest.substr(1), '+');
  for (const std::string& part : parts) {
    bool* flag = part == "norm"    ? &c.norm
                 : part == "seg"   ? &c.seg
                 : part == "loc"   ? &c.loc
                 : part == "noise" ? &c.noise
                 : part == "corr"  ? &c.corr
                                   : nullptr;
    if (!flag || *flag) {
      throw UsageError("configuration '" + c.name + "': unknown or repeated component '" + part + "'");
    }
    *flag = true;
  }
  return c;
}

void ExperimentSpec::validate() const {
  generator.validate();
  train.validate();
  if (configurations.empty()) {
    throw UsageError("experiment needs at least one configuration");
  }
  std::set<std::string> names;
  for (const auto& c : configurations) {
    if (!names.insert(c.name).second) {
      throw UsageError("configuration '" + c.name + "' listed twice");
    }
  }
  if (n_train < 1 || n_validation < 1 || n_test < 1) {
    throw UsageError("split sizes must be positive");
  }
  if (calibration_size < 1 || calibration_size > n_train) {
    throw UsageError("calibration_size must lie in [1, n_train]");
  }
  if (train.batch_size > n_train) {
    throw UsageError("batch_size exceeds the training split");
  }
  if (seeds < 1) {
    throw UsageError("seeds must be at least 1");
  }
  if (features.downsample < 1 || generator.image_size % features.downsample != 0) {
    throw UsageError("image_size must be a multiple of downsample");
  }
  if (!(features.raw_scale > 0.0)) {
    throw UsageError("raw_scale must be positive");
  }
  if (!(lambda_noise >= 0.0)) {
    throw UsageError("lambda_noise must be nonnegative");
  }
  if (bootstrap_replicates < 100) {
    throw UsageError("bootstrap_replicates must be at least 100");
  }
  if (output.empty()) {
    throw UsageError("output directory must be named");
  }
}

StructuredText ExperimentSpec::to_structured() const {
  StructuredText doc = generator.to_structured();
  doc.set("type", "experiment");
  doc.set("output", output);
  doc.set("seeds", std::to_string(seeds));
  doc.set("base_seed", std::to_string(base_seed));
  doc.set("n_train", std::to_string(n_train));
  doc.set("n_validation", std::to_string(n_validation));
  doc.set("n_test", std::to_string(n_test));
  doc.set("calibration_size", std::to_string(calibration_size));
  for (const auto& c : configurations) {
    doc.add("configuration", c.name);
  }
  doc.set("learning_rate", format_double(train.adam.learning_rate));
  doc.set("beta1", format_double(train.adam.beta1));
  doc.set("beta2", format_double(train.adam.beta2));
  doc.set("epsilon", format_double(train.adam.epsilon));
  doc.set("batch_size", std::to_string(train.batch_size));
  doc.set("max_epochs", std::to_string(train.max_epochs));
  doc.set("plateau_factor", format_double(train.plateau_factor));
  doc.set("plateau_patience", std::to_string(train.plateau_patience));
  doc.set("early_stop_patience", std::to_string(train.early_stop_patience));
  doc.set("hidden", std::to_string(train.hidden));
  doc.set("alpha_seg", format_double(train.loss.alpha_seg));
  doc.set("alpha_loc", format_double(train.loss.alpha_loc));
  doc.set("corr_scale", format_double(train.loss.corr_options.scale));
  doc.set("corr_use_pearson", train.loss.corr_options.use_pearson ? "1" : "0");
  doc.set("lambda_noise", format_double(lambda_noise));
  doc.set("standardize_inputs", train.standardize_inputs ? "1" : "0");
  doc.set("raw_scale", format_double(features.raw_scale));
  doc.set("downsample", std::to_string(features.downsample));
  doc.set("tau", format_double(features.window.tau));
  doc.set("median_width", std::to_string(features.window.median_width));
  doc.set("gauss_sigma", format_double(features.window.gauss_sigma));
  doc.set("bootstrap_replicates", std::to_string(bootstrap_replicates));
  return doc;
}

ExperimentSpec ExperimentSpec::from_structured(const StructuredText& doc) {
  if (doc.has("type") && doc.get("type") != "experiment") {
    throw DataError("expected an experiment spec, found type '" + doc.get("type") + "'");
  }
  ExperimentSpec s;
  s.generator = GeneratorConfig::from_structured(doc);
  s.output = doc.get_or("output", s.output);
  s.seeds = static_cast<int>(doc.get_int_or("seeds", s.seeds));
  s.base_seed = static_cast<std::uint64_t>(doc.get_int_or("base_seed", static_cast<long long>(s.base_seed)));
  s.n_train = doc.get_int_or("n_train", s.n_train);
  s.n_validation = doc.get_int_or("n_validation", s.n_validation);
  s.n_test = doc.get_int_or("n_test", s.n_test);
  s.calibration_size = doc.get_int_or("calibration_size", s.n_train / 10);
  for (const auto& name : doc.all("configuration")) {
    s.configurations.push_back(RunConfiguration::parse(name));
  }
  TrainConfig& t = s.train;
  t.adam.learning_rate = doc.get_double_or("learning_rate", t.adam.learning_rate);
  t.adam.beta1 = doc.get_double_or("beta1", t.adam.beta1);
  t.adam.beta2 = doc.get_double_or("beta2", t.adam.beta2);
  t.adam.epsilon = doc.get_double_or("epsilon", t.adam.epsilon);
  t.batch_size = doc.get_int_or("batch_size", t.batch_size);
  t.max_epochs = static_cast<int>(doc.get_int_or("max_epochs", t.max_epochs));
  t.plateau_factor = doc.get_double_or("plateau_factor", t.plateau_factor);
  t.plateau_patience = static_cast<int>(doc.get_int_or("plateau_patience", t.plateau_patience));
  t.early_stop_patience = static_cast<int>(doc.get_int_or("early_stop_patience", t.early_stop_patience));
  t.hidden = doc.get_int_or("hidden", t.hidden);
  t.loss.alpha_seg = doc.get_double_or("alpha_seg", t.loss.alpha_seg);
  t.loss.alpha_loc = doc.get_double_or("alpha_loc", t.loss.alpha_loc);
  t.loss.corr_options.scale = doc.get_double_or("corr_scale", t.loss.corr_options.scale);
  t.loss.corr_options.use_pearson = doc.get_int_or("corr_use_pearson", 0) != 0;
  t.standardize_inputs = doc.get_int_or("standardize_inputs", 1) != 0;
  s.lambda_noise = doc.get_double_or("lambda_noise", s.lambda_noise);
  s.features.raw_scale = doc.get_double_or("raw_scale", s.features.raw_scale);
  s.features.downsample = static_cast<int>(doc.get_int_or("downsample", s.features.downsample));
  s.features.window.tau = doc.get_double_or("tau", s.features.window.tau);
  s.features.window.median_width = static_cast<int>(doc.get_int_or("median_width", s.features.window.median_width));
  s.features.window.gauss_sigma = doc.get_double_or("gauss_sigma", s.features.window.gauss_sigma);
  s.bootstrap_replicates = static_cast<int>(doc.get_int_or("bootstrap_replicates", s.bootstrap_replicates));
  s.validate();
  return s;
}

namespace {

std::vector<Index> range(Index begin, Index end) {
  std::vector<Index> rows(static_cast<std::size_t>(end - begin));
  std::iota(rows.begin(), rows.end(), begin);
  return rows;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& items, const std::vector<Index>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (Index r : rows) {
    out.push_back(items[static_cast<std::size_t>(r)]);
  }
  return out;
}

Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Index>(k)) = m.row(rows[k]);
  }
  return out;
}

std::string seed_dir(int replicate) { return "seed_" + std::to_string(replicate); }

}  // namespace

PreparedData prepare_data(const ExperimentSpec& spec, int replicate) {
  GeneratorConfig g = spec.generator;
  g.n_samples = spec.n_train + spec.n_validation + spec.n_test;
  g.seed = derive_seed(spec.base_seed, 100 + static_cast<std::uint64_t>(replicate));
  const SyntheticDataset ds = generate_dataset(g);

  const Eigen::MatrixXd raw = image_features(ds.images, spec.features);
  FeatureConfig norm_config = spec.features;
  norm_config.normalize = true;
  const Eigen::MatrixXd norm = image_features(ds.images, norm_config);
  const Eigen::MatrixXd seg =
      segmentation_targets(ds.lung_masks, ds.heart_masks, g.image_size / spec.features.downsample);

  PreparedData out;
  out.class_names = g.class_names;
  const auto split = [&](const std::vector<Index>& rows, const LabelMatrix& labels) {
    TrainingSplit s;
    s.features = take(raw, rows);
    s.labels = labels.select_rows(rows);
    s.clean = ds.true_labels.select_rows(rows).labels;
    s.spatial.labels = ds.spatial.labels(rows, Eigen::all);
    s.spatial.available = ds.spatial.available(rows, Eigen::all);
    s.segmentation = take(seg, rows);
    return s;
  };
  const std::vector<Index> train_rows = range(0, spec.n_train);
  const std::vector<Index> val_rows = range(spec.n_train, spec.n_train + spec.n_validation);
  const std::vector<Index> test_rows = range(spec.n_train + spec.n_validation, g.n_samples);
  out.train = split(train_rows, ds.noisy_labels);
  out.validation = split(val_rows, ds.noisy_labels);
  out.test = split(test_rows, ds.true_labels);
  out.train_norm = take(norm, train_rows);
  out.validation_norm = take(norm, val_rows);
  out.test_norm = take(norm, test_rows);
  out.test_ids = pick(ds.true_labels.sample_ids, test_rows);
  out.test_lungs = pick(ds.lung_masks, test_rows);
  out.test_hearts = pick(ds.heart_masks, test_rows);

  out.priors.weights = compute_class_weights(out.train.labels);
  out.priors.spatial_weights = compute_spatial_weights(out.train.spatial);
  const std::vector<Index> calibration = range(0, spec.calibration_size);
  const LabelMatrix reread = ds.true_labels.select_rows(calibration);
  out.priors.noise = measure_noise_profile(ds.noisy_labels.select_rows(calibration), reread, spec.lambda_noise);
  out.priors.correlation = compute_correlation(reread);
  return out;
}

namespace {

/// Mean Dice of the thresholded, upsampled decoder channels against the masks.
std::pair<double, double> mean_dice(const Eigen::MatrixXd& decoded, const std::vector<Eigen::ArrayXXi>& lungs,
                                    const std::vector<Eigen::ArrayXXi>& hearts, Index side) {
  double lung_sum = 0.0;
  double heart_sum = 0.0;
  const Index per = side * side;
  for (Index i = 0; i < decoded.rows(); ++i) {
    const auto& truth_l = lungs[static_cast<std::size_t>(i)];
    const auto& truth_h = hearts[static_cast<std::size_t>(i)];
    for (int ch = 0; ch < 2; ++ch) {
      Eigen::ArrayXXd small(side, side);
      for (Index y = 0; y < side; ++y) {
        for (Index x = 0; x < side; ++x) {
          small(y, x) = decoded(i, ch * per + y * side + x);
        }
      }
      const auto& truth = ch == 0 ? truth_l : truth_h;
      const Eigen::ArrayXXi pred = binarize(upsample_bilinear(small, truth.rows(), truth.cols()));
      (ch == 0 ? lung_sum : heart_sum) += dice_iou(pred, truth).dice;
    }
  }
  const double n = static_cast<double>(decoded.rows());
  return {lung_sum / n, heart_sum / n};
}

StructuredText status_doc(const RunOutcome& o, const std::vector<std::string>& class_names, int best_epoch,
                          int epochs) {
  StructuredText doc;
  doc.set("type", "run_status");
  doc.set("configuration", o.configuration);
  doc.set("replicate", std::to_string(o.replicate));
  doc.set("status", o.failed ? "failed" : "ok");
  if (!o.message.empty()) {
    doc.set("message", o.message);
  }
  doc.set("best_epoch", std::to_string(best_epoch));
  doc.set("epochs", std::to_string(epochs));
  doc.set("classes", join(class_names, ","));
  if (o.test_auc.size()) {
    doc.set_matrix("test_auc", o.test_auc.transpose());
  }
  if (!std::isnan(o.dice_lungs)) {
    doc.set("dice_lungs", format_double(o.dice_lungs));
    doc.set("dice_heart", format_double(o.dice_heart));
  }
  return doc;
}

}  // namespace

RunOutcome run_configuration(const ExperimentSpec& spec, const RunConfiguration& config, const PreparedData& data,
                             int replicate, const fs::path& dir) {
  fs::create_directories(dir);
  RunOutcome outcome;
  outcome.configuration = config.name;
  outcome.replicate = replicate;

  TrainConfig tc = spec.train;
  tc.loss.noise = config.noise;
  tc.loss.corr = config.corr;
  tc.loss.seg = config.seg;
  tc.loss.loc = config.loc;
  tc.loss.corr_options.active = data.priors.noise->active;
  // Shared across configurations so that paired comparisons see the same
  // initialization and batch order.
  tc.seed = derive_seed(spec.base_seed, 200 + static_cast<std::uint64_t>(replicate));

  TrainingSplit train_split = data.train;
  TrainingSplit validation = data.validation;
  Eigen::MatrixXd test_features = data.test.features;
  if (config.norm) {
    train_split.features = data.train_norm;
    validation.features = data.validation_norm;
    test_features = data.test_norm;
  }

  int best_epoch = 0;
  int epochs = 0;
  try {
    const TrainResult result = train(train_split, validation, data.priors, tc);
    write_training_log(dir / "log.csv", result.log, data.class_names);
    best_epoch = result.best_epoch;
    epochs = static_cast<int>(result.log.size());
    if (result.diverged) {
      outcome.failed = true;
      outcome.message = result.message;
    } else {
      save_checkpoint(dir / "model.ckpt", result.model);
      const Predictions<double> pred = forward(result.model, test_features, {false, config.seg});
      write_predictions_csv(dir / "predictions.csv", {data.test_ids, data.class_names, pred.abnormality});
      outcome.test_auc = per_class_auc(pred.abnormality, data.test.labels.labels);
      if (config.seg) {
        std::tie(outcome.dice_lungs, outcome.dice_heart) =
            mean_dice(pred.segmentation, data.test_lungs, data.test_hearts, result.model.arch.mask_side);
      }
    }
  } catch (const NumericalError& e) {
    outcome.failed = true;
    outcome.message = e.what();
  }
  status_doc(outcome, data.class_names, best_epoch, epochs).save(dir / "status");
  return outcome;
}

std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec, const fs::path& workdir,
                                       const std::function<void(const RunOutcome&)>& progress) {
  spec.validate();
  const fs::path out = workdir / spec.output;
  fs::create_directories(out);
  spec.to_structured().save(out / "experiment.txt");
  std::vector<RunOutcome> outcomes;
  for (int r = 0; r < spec.seeds; ++r) {
    const PreparedData data = prepare_data(spec, r);
    fs::create_directories(out / seed_dir(r));
    write_labels_csv(out / seed_dir(r) / "test_labels.csv", data.test.labels);
    for (const RunConfiguration& c : spec.configurations) {
      outcomes.push_back(run_configuration(spec, c, data, r, out / c.name / seed_dir(r)));
      if (progress) {
        progress(outcomes.back());
      }
    }
  }
  write_report(out, spec.bootstrap_replicates, derive_seed(spec.base_seed, 300));
  return outcomes;
}

const ReportCell& Report::cell(const std::string& configuration, const std::string& class_name) const {
  for (const ReportCell& c : cells) {
    if (c.configuration == configuration && c.class_name == class_name) {
      return c;
    }
  }
  throw DataError("report has no cell for " + configuration + " / " + class_name);
}

namespace {

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string fixed(double v, int digits) {
  if (std::isnan(v)) {
    return "-";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void Report::write_csv(std::ostream& os) const {
  os << "configuration,class,mean_auc,pooled_auc,ci_low,ci_high,p_vs_baseline,seeds_ok,seeds_failed,sources\n";
  for (const ReportCell& c : cells) {
    const bool has_ci = c.ci.replicates > 0;
    os << c.configuration << ',' << c.class_name << ',' << csv_number(c.mean_auc) << ',' << csv_number(c.pooled_auc)
       << ',' << (has_ci ? format_double(c.ci.low) : "") << ',' << (has_ci ? format_double(c.ci.high) : "") << ','
       << csv_number(c.p_vs_baseline) << ',' << c.seeds_ok << ',' << c.seeds_failed << ',' << join(c.sources, ";")
       << '\n';
  }
}

void Report::write_table(std::ostream& os) const {
  std::vector<std::string> header{"Abnormality"};
  header.insert(header.end(), configurations.begin(), configurations.end());
  header.push_back("best");
  header.push_back("p-value");
  std::vector<std::vector<std::string>> rows{header};
  std::vector<std::string> labels = class_names;
  labels.push_back("Average");
  for (const std::string& cls : labels) {
    std::vector<std::string> row{cls};
    const ReportCell* best = nullptr;
    for (const std::string& cfg : configurations) {
      const ReportCell& c = cell(cfg, cls);
      row.push_back(c.seeds_ok == 0 ? "failed" : fixed(c.mean_auc, 3));
      if (!std::isnan(c.mean_auc) && (!best || c.mean_auc > best->mean_auc)) {
        best = &c;
      }
    }
    row.push_back(best ? best->configuration : "-");
    row.push_back(best ? fixed(best->p_vs_baseline, 4) : "-");
    rows.push_back(row);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      width[k] = std::max(width[k], row[k].size());
    }
  }
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      os << (k ? "  " : "") << row[k] << std::string(width[k] - row[k].size(), ' ');
    }
    os << '\n';
  }
  os << "\nCells are mean test AUC across seeds; p-value is DeLong's test of the best configuration against "
        "baseline on predictions pooled over seeds. Sources are listed in report.csv.\n";
}

Report report_from_directory(const fs::path& dir, int bootstrap_replicates, std::uint64_t seed) {
  if (!fs::exists(dir / "experiment.txt")) {
    throw NoResults(dir.string() + ": no experiment.txt, nothing to report");
  }
  const StructuredText doc = StructuredText::load(dir / "experiment.txt");
  Report report;
  report.configurations = doc.all("configuration");
  const int seeds = static_cast<int>(doc.get_int("seeds"));

  struct SeedLabels {
    int replicate;
    LabelMatrix labels;
  };
  std::vector<SeedLabels> truth;
  for (int r = 0; r < seeds; ++r) {
    const fs::path p = dir / seed_dir(r) / "test_labels.csv";
    if (fs::exists(p)) {
      truth.push_back({r, read_labels_csv(p)});
    }
  }
  if (truth.empty()) {
    throw NoResults(dir.string() + ": no finished replicates");
  }
  report.class_names = truth.front().labels.class_names;
  const Index d = static_cast<Index>(report.class_names.size());

  // predictions[config][k] is empty when that run failed or is missing.
  std::vector<std::vector<std::optional<PredictionTable>>> predictions;
  bool any = false;
  for (const std::string& cfg : report.configurations) {
    auto& per_seed = predictions.emplace_back();
    for (const SeedLabels& t : truth) {
      const fs::path run = dir / cfg / seed_dir(t.replicate);
      std::optional<PredictionTable> table;
      if (fs::exists(run / "status") && StructuredText::load(run / "status").get_or("status", "") == "ok") {
        table = read_predictions_csv(run / "predictions.csv");
        if (table->sample_ids != t.labels.sample_ids || table->class_names != report.class_names) {
          throw DataError((run / "predictions.csv").string() + ": samples or classes differ from test_labels.csv");
        }
        any = true;
      }
      per_seed.push_back(std::move(table));
    }
  }
  if (!any) {
    throw NoResults(dir.string() + ": no successful runs");
  }
  const auto base_it = std::find(report.configurations.begin(), report.configurations.end(), "baseline");
  const std::optional<std::size_t> base =
      base_it == report.configurations.end()
          ? std::nullopt
          : std::optional<std::size_t>(static_cast<std::size_t>(base_it - report.configurations.begin()));

  const auto pooled = [&](std::size_t cfg, Index c, bool need_base, Eigen::VectorXd& a, Eigen::VectorXd& b,
                          Eigen::VectorXi& y) {
    std::vector<double> sa, sb;
    std::vector<int> sy;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const auto& p = predictions[cfg][k];
      if (!p || (need_base && !predictions[*base][k])) {
        continue;
      }
      for (Index i = 0; i < p->scores.rows(); ++i) {
        sa.push_back(p->scores(i, c));
        sb.push_back(need_base ? predictions[*base][k]->scores(i, c) : 0.0);
        sy.push_back(truth[k].labels.labels(i, c));
      }
    }
    a = Eigen::Map<Eigen::VectorXd>(sa.data(), static_cast<Index>(sa.size()));
    b = Eigen::Map<Eigen::VectorXd>(sb.data(), static_cast<Index>(sb.size()));
    y = Eigen::Map<Eigen::VectorXi>(sy.data(), static_cast<Index>(sy.size()));
  };
  const auto single_class = [](const Eigen::VectorXi& y) { return y.size() == 0 || y.sum() == 0 || y.sum() == y.size(); };

  for (std::size_t cfg = 0; cfg < report.configurations.size(); ++cfg) {
    const std::string& name = report.configurations[cfg];
    std::vector<std::string> sources;
    int ok = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (predictions[cfg][k]) {
        ++ok;
        sources.push_back(name + "/" + seed_dir(truth[k].replicate) + "/predictions.csv");
      }
    }
    double average_sum = 0.0;
    Index average_count = 0;
    for (Index c = 0; c < d; ++c) {
      ReportCell cell;
      cell.configuration = name;
      cell.class_name = report.class_names[static_cast<std::size_t>(c)];
      cell.seeds_ok = ok;
      cell.seeds_failed = static_cast<int>(truth.size()) - ok;
      cell.sources = sources;
      double sum = 0.0;
      int n = 0;
      for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& p = predictions[cfg][k];
        if (!p) {
          continue;
        }
        const Eigen::VectorXi y = truth[k].labels.labels.col(c);
        if (single_class(y)) {
          continue;
        }
        sum += auc(p->scores.col(c), y).auc;
        ++n;
      }
      if (n > 0) {
        cell.mean_auc = sum / n;
        average_sum += cell.mean_auc;
        ++average_count;
      }
      Eigen::VectorXd a, b;
      Eigen::VectorXi y;
      pooled(cfg, c, false, a, b, y);
      if (!single_class(y)) {
        cell.pooled_auc = auc(a, y).auc;
        cell.ci = bootstrap_ci(a, y, bootstrap_replicates,
                               derive_seed(seed, cfg * 1000 + static_cast<std::uint64_t>(c)));
      }
      if (base && *base != cfg) {
        pooled(cfg, c, true, a, b, y);
        if (!single_class(y)) {
          try {
            cell.p_vs_baseline = delong_test(a, b, y).p_value;
          } catch (const NumericalError&) {
            cell.p_vs_baseline = std::nan("");
          }
        }
      }
      report.cells.push_back(std::move(cell));
    }
    ReportCell avg;
    avg.configuration = name;
    avg.class_name = "Average";
    avg.seeds_ok = ok;
    avg.seeds_failed = static_cast<int>(truth.size()) - ok;
    avg.sources = sources;
    if (average_count > 0) {
      avg.mean_auc = average_sum / static_cast<double>(average_count);
    }
    report.cells.push_back(std::move(avg));
  }
  return report;
}

Report write_report(const fs::path& dir, int bootstrap_replicates, std::uint64_t seed) {
  Report report = report_from_directory(dir, bootstrap_replicates, seed);
  std::ofstream csv(dir / "report.csv");
  std::ofstream txt(dir / "report.txt");
  if (!csv || !txt) {
    throw DataError("cannot write report files in " + dir.string());
  }
  report.write_csv(csv);
  report.write_table(txt);
  return report;
}

}  // namespace noisylab

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "noisylab/experiment.hpp"

using namespace noisylab;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny_spec(const std::vector<std::string>& configs) {
  ExperimentSpec s;
  s.generator = GeneratorConfig::standard_benchmark(1, 1);
  s.generator.lesion_contrast.setConstant(1500);
  s.n_train = 240;
  s.n_validation = 60;
  s.n_test = 80;
  s.calibration_size = 60;
  s.seeds = 2;
  s.base_seed = 4;
  s.train.max_epochs = 2;
  s.train.batch_size = 40;
  s.train.hidden = 8;
  s.bootstrap_replicates = 100;
  for (const auto& c : configs) s.configurations.push_back(RunConfiguration::parse(c));
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("configuration names") {
  const RunConfiguration b = RunConfiguration::parse("baseline");
  CHECK_FALSE((b.norm || b.seg || b.loc || b.noise || b.corr));
  const RunConfiguration n = RunConfiguration::parse("+noise");
  CHECK(n.noise);
  CHECK_FALSE(n.corr);
  CHECK(n.name == "+noise");
  const RunConfiguration combo = RunConfiguration::parse("baseline+norm+corr");
  CHECK(combo.norm);
  CHECK(combo.corr);
  CHECK_FALSE(combo.seg);

  const RunConfiguration an = RunConfiguration::parse("all-noise");
  CHECK((an.norm && an.seg && an.loc && an.noise && !an.corr));
  const RunConfiguration ac = RunConfiguration::parse("all-corr");
  CHECK((ac.norm && ac.seg && ac.loc && !ac.noise && ac.corr));
  // "all" is the union of the two joint models.
  const RunConfiguration all = RunConfiguration::parse("all");
  CHECK(all.norm == (an.norm || ac.norm));
  CHECK(all.noise == (an.noise || ac.noise));
  CHECK(all.corr == (an.corr || ac.corr));
  CHECK(all.seg);
  CHECK(all.loc);

  CHECK_THROWS_AS(RunConfiguration::parse("+dropout"), UsageError);
  CHECK_THROWS_AS(RunConfiguration::parse("+noise+noise"), UsageError);
  CHECK_THROWS_AS(RunConfiguration::parse(""), UsageError);
}

TEST_CASE("experiment spec survives structured text") {
  ExperimentSpec s = tiny_spec({"baseline", "+noise", "all"});
  s.lambda_noise = 0.25;
  s.train.adam.learning_rate = 0.003;
  s.features.downsample = 4;
  s.train.standardize_inputs = false;
  std::stringstream ss;
  s.to_structured().write(ss);
  const ExperimentSpec back = ExperimentSpec::from_structured(StructuredText::parse(ss));
  CHECK(back.n_train == s.n_train);
  CHECK(back.n_test == s.n_test);
  CHECK(back.calibration_size == s.calibration_size);
  CHECK(back.seeds == s.seeds);
  CHECK(back.base_seed == s.base_seed);
  CHECK(back.lambda_noise == 0.25);
  CHECK(back.train.adam.learning_rate == 0.003);
  CHECK(back.features.downsample == 4);
  CHECK_FALSE(back.train.standardize_inputs);
  CHECK(back.generator.lesion_contrast == s.generator.lesion_contrast);
  REQUIRE(back.configurations.size() == 3);
  CHECK(back.configurations[2].name == "all");
}

TEST_CASE("experiment spec validation") {
  ExperimentSpec s = tiny_spec({"baseline", "baseline"});
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = tiny_spec({"+noise"});
  CHECK_NOTHROW(s.validate());
  s.calibration_size = s.n_train + 1;
  CHECK_THROWS(s.validate());
  s = tiny_spec({"baseline"});
  s.train.batch_size = s.n_train + 1;
  CHECK_THROWS(s.validate());
}

TEST_CASE("prepared data keeps noise out of the test split") {
  const ExperimentSpec s = tiny_spec({"baseline"});
  const PreparedData d = prepare_data(s, 0);
  CHECK(d.train.samples() == 240);
  CHECK(d.validation.samples() == 60);
  CHECK(d.test.samples() == 80);
  REQUIRE(d.train.clean.has_value());
  CHECK(d.train.labels.labels != *d.train.clean);
  REQUIRE(d.test.clean.has_value());
  CHECK(d.test.labels.labels == *d.test.clean);
  REQUIRE(d.priors.noise.has_value());
  CHECK(d.priors.noise->lambda_noise == s.lambda_noise);
  CHECK(d.train_norm.rows() == 240);
  CHECK(d.train_norm.maxCoeff() <= 1.0);
}

TEST_CASE("the same seed reproduces every output byte for byte") {
  const ExperimentSpec s = tiny_spec({"baseline", "+noise", "all"});
  const fs::path a = fresh_dir("noisylab_repro_a");
  const fs::path b = fresh_dir("noisylab_repro_b");
  run_experiment(s, a);
  run_experiment(s, b);
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 20);
  CHECK(fs::exists(a / "results" / "report.csv"));
  CHECK(fs::exists(a / "results" / "all" / "seed_1" / "model.ckpt"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("reports: baseline-only tables and empty directories") {
  const fs::path dir = fresh_dir("noisylab_report_test");
  CHECK_THROWS_AS(report_from_directory(dir, 100, 1), NoResults);

  ExperimentSpec s = tiny_spec({"baseline"});
  s.seeds = 1;
  run_experiment(s, dir);
  const Report r = report_from_directory(dir / "results", 100, 1);
  CHECK(r.configurations == std::vector<std::string>{"baseline"});
  CHECK(r.cells.size() == r.class_names.size() + 1);
  const ReportCell& c = r.cell("baseline", r.class_names.front());
  CHECK(std::isnan(c.p_vs_baseline));
  CHECK(c.seeds_ok == 1);
  REQUIRE_FALSE(c.sources.empty());
  CHECK(fs::exists(dir / "results" / c.sources.front()));
  std::ostringstream table;
  r.write_table(table);
  CHECK(table.str().find("baseline") != std::string::npos);
  CHECK(table.str().find("+noise") == std::string::npos);
  fs::remove_all(dir);
}

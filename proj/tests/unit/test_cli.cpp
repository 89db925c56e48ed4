#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noisylab/label_io.hpp"
#include "noisylab/pgm.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "noisylab_cli_test";

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run cli(const std::string& args) {
  const std::string cmd = std::string(NOISYLAB_CLI) + " " + args + " > " + (kWork / "stdout").string() + " 2> " +
                          (kWork / "stderr").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(kWork / "stdout"), slurp(kWork / "stderr")};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// One generated dataset shared by the tests below.
const fs::path& dataset() {
  static const bool made = [] {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    return cli("generate -n 400 --out data --workdir " + kWork.string() + " --seed 3").code == 0;
  }();
  REQUIRE(made);
  static const fs::path dir = kWork / "data";
  return dir;
}

}  // namespace

TEST_CASE("cli: usage errors exit with 1") {
  dataset();
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("correlate --labels x.csv --kind spearman").code == 1);
  CHECK(cli("train --workdir " + kWork.string() + " --data data --configuration +dropout").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("cli: generate writes labels, images and masks") {
  const fs::path& d = dataset();
  CHECK(fs::exists(d / "labels_true.csv"));
  CHECK(fs::exists(d / "labels_noisy.csv"));
  CHECK(fs::exists(d / "spatial.csv"));
  CHECK(fs::exists(d / "manifest"));
  CHECK(fs::exists(d / "images"));
  CHECK(fs::exists(d / "masks"));
  const noisylab::LabelMatrix m = noisylab::read_labels_csv(d / "labels_true.csv");
  CHECK(m.samples() == 400);
  CHECK(m.classes() == 5);
}

TEST_CASE("cli: measure-noise prints the sensitivity/specificity table") {
  dataset();
  const Run r = cli("measure-noise --labels data/labels_noisy.csv --reference data/labels_true.csv --out np.txt "
                    "--workdir " + kWork.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("Abnormality", 0) == 0);
  CHECK(r.out.find("Sensitivity  Specificity") != std::string::npos);
  CHECK(r.out.find("Consolidation") != std::string::npos);
  CHECK(fs::exists(kWork / "np.txt"));
  // Perfect agreement.
  const Run same = cli("measure-noise --labels data/labels_true.csv --reference data/labels_true.csv --workdir " +
                       kWork.string());
  CHECK(same.out.find("1.000        1.000") != std::string::npos);
}

TEST_CASE("cli: correlate on identical columns gives 1") {
  dataset();
  write(kWork / "twin.csv", "sample_id,dataset_tag,A,B\ns0,default,1,1\ns1,default,0,0\ns2,default,1,1\n");
  const Run r = cli("correlate --labels twin.csv --workdir " + kWork.string());
  REQUIRE(r.code == 0);
  CHECK(r.out == "class,A,B\nA,1,1\nB,1,1\n");
  const Run cov = cli("correlate --labels twin.csv --kind covariance --workdir " + kWork.string());
  CHECK(cov.out.find("A,0.2222222222222222") != std::string::npos);
}

TEST_CASE("cli: malformed label files exit with 2 and name the line") {
  dataset();
  write(kWork / "bad.csv", "sample_id,dataset_tag,A\ns0,default,1\ns1,default,7\n");
  const Run r = cli("correlate --labels bad.csv --workdir " + kWork.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("DataError") != std::string::npos);
  CHECK(r.err.find("bad.csv:3") != std::string::npos);
  CHECK(cli("correlate --labels missing.csv --workdir " + kWork.string()).code == 2);
}

TEST_CASE("cli: report on an empty directory is NoResults") {
  dataset();
  fs::create_directories(kWork / "empty");
  const Run r = cli("report --dir empty --workdir " + kWork.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("NoResults") != std::string::npos);
}

TEST_CASE("cli: train, evaluate and divergence") {
  dataset();
  const std::string w = " --workdir " + kWork.string();
  const Run t = cli("train --data data --out run --configuration +noise --epochs 2 --batch-size 64 --hidden 8" + w);
  REQUIRE(t.code == 0);
  for (const char* f : {"log.csv", "model.ckpt", "status", "noise_profile.txt", "correlation.txt"}) {
    CHECK(fs::exists(kWork / "run" / f));
  }
  const Run e = cli("evaluate --model run/model.ckpt --data data --out preds.csv --bootstrap 100" + w);
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("class,auc,ci_low,ci_high\n", 0) == 0);
  CHECK(fs::exists(kWork / "preds.csv"));

  const Run d = cli("train --data data --out diverged --configuration baseline --epochs 2 --batch-size 64 "
                    "--learning-rate 1e300" + w);
  CHECK(d.code == 3);
  CHECK(d.err.find("NumericalError") != std::string::npos);
  CHECK(fs::exists(kWork / "diverged" / "log.csv"));

  CHECK(cli("train --data data --out x --configuration baseline --batch-size 100000" + w).code == 1);
}

TEST_CASE("cli: normalize windows a PGM image") {
  dataset();
  const Run r = cli("normalize data/images normed --workdir " + kWork.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("b_low=") != std::string::npos);
  CHECK(fs::exists(kWork / "normed" / "s0.pgm"));
  noisylab::write_pgm(kWork / "flat.pgm", Eigen::ArrayXXd::Constant(2, 2, 7.0), 255);
  const Run flat = cli("normalize flat.pgm flat_out.pgm --workdir " + kWork.string());
  CHECK(flat.code == 2);
  CHECK(flat.err.find("DegenerateHistogram") != std::string::npos);
}

TEST_CASE("cli: run executes a spec and reports every cell with its sources") {
  dataset();
  write(kWork / "spec.txt",
        "type = experiment\noutput = exp\nseeds = 1\nn_train = 200\nn_validation = 50\nn_test = 60\n"
        "calibration_size = 50\nconfiguration = baseline\nconfiguration = +corr\nmax_epochs = 1\n"
        "batch_size = 50\nhidden = 8\nbootstrap_replicates = 100\n");
  const Run r = cli("run spec.txt --seed 5 --workdir " + kWork.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(kWork / "exp" / "report.csv");
  CHECK(csv.rfind("configuration,class,mean_auc,pooled_auc,ci_low,ci_high,p_vs_baseline,seeds_ok,seeds_failed,sources",
                  0) == 0);
  CHECK(csv.find("+corr/seed_0/predictions.csv") != std::string::npos);
  CHECK(fs::exists(kWork / "exp" / "report.txt"));
  fs::remove_all(kWork);
}

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "noisylab/metrics.hpp"

using namespace noisylab;
using testing::Gen;
using testing::pairwise_auc;
using testing::random_scored;
using testing::Scored;

TEST_CASE("AUC matches pairwise counting") {
  Gen g(201);
  for (int t = 0; t < 100; ++t) {
    const Scored d = random_scored(g, g.integer(2, 60), g.uniform(-1, 2), g.coin());
    const RocResult r = auc(d.s, d.y);
    CHECK(std::abs(r.auc - pairwise_auc(d.s, d.y)) < 1e-12);
    CHECK(r.n_pos + r.n_neg == d.s.size());
  }
}

TEST_CASE("AUC worked examples") {
  Eigen::VectorXd s(4);
  Eigen::VectorXi y(4);
  s << 0.1, 0.4, 0.35, 0.8;
  y << 0, 0, 1, 1;
  CHECK(auc(s, y).auc == doctest::Approx(0.75));
  s << 0.5, 0.5, 0.5, 0.5;
  CHECK(auc(s, y).auc == 0.5);
  s << 0.0, 0.1, 0.2, 0.3;
  CHECK(auc(s, y).auc == 1.0);
  CHECK(auc(-s, y).auc == 0.0);
}

TEST_CASE("AUC of a single class is an error") {
  Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(5, 0, 1);
  CHECK_THROWS_AS(auc(s, Eigen::VectorXi::Ones(5)), UndefinedAuc);
  CHECK_THROWS_AS(auc(s, Eigen::VectorXi::Zero(5)), UndefinedAuc);
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  Gen g(202);
  for (int t = 0; t < 100; ++t) {
    const Scored d = random_scored(g, g.integer(2, 80), 0.7, g.coin());
    const double base = auc(d.s, d.y).auc;
    CHECK(auc((3.0 * d.s.array() + 7.0).matrix(), d.y).auc == base);
    CHECK(auc(d.s.array().cube().matrix(), d.y).auc == base);
    CHECK(auc(d.s.unaryExpr([](double v) { return std::exp(v); }), d.y).auc == base);
  }
}

TEST_CASE("midranks average tied positions") {
  Eigen::VectorXd v(5);
  v << 3, 1, 3, 2, 3;
  Eigen::VectorXd expect(5);
  expect << 4, 1, 4, 2, 4;
  CHECK(midranks(v) == expect);
}

TEST_CASE("DeLong: identical scores give p = 1") {
  Gen g(203);
  const Scored d = random_scored(g, 50);
  const DeLongComparison c = delong_test(d.s, d.s, d.y);
  CHECK(c.variance_diff == 0.0);
  CHECK(c.z_statistic == 0.0);
  CHECK(c.p_value == 1.0);
}

TEST_CASE("DeLong variance equals the structural-component formula") {
  Gen g(204);
  for (int t = 0; t < 20; ++t) {
    const Scored a = random_scored(g, g.integer(10, 60), 0.8, false);
    Eigen::VectorXd b = a.s + 0.7 * Eigen::VectorXd::NullaryExpr(a.s.size(), [&] { return g.normal(); });
    const DeLongComparison c = delong_test(a.s, b, a.y);
    // V10 / V01 components from pairwise kernels.
    std::vector<double> va10, vb10, va01, vb01;
    const auto psi = [](double x, double z) { return x > z ? 1.0 : (x == z ? 0.5 : 0.0); };
    for (Index i = 0; i < a.s.size(); ++i) {
      double sa = 0, sb = 0, k = 0;
      for (Index j = 0; j < a.s.size(); ++j) {
        if (a.y(j) == a.y(i)) continue;
        k += 1;
        sa += a.y(i) ? psi(a.s(i), a.s(j)) : psi(a.s(j), a.s(i));
        sb += a.y(i) ? psi(b(i), b(j)) : psi(b(j), b(i));
      }
      (a.y(i) ? va10 : va01).push_back(sa / k);
      (a.y(i) ? vb10 : vb01).push_back(sb / k);
    }
    const auto cov = [](const std::vector<double>& x, const std::vector<double>& z) {
      double mx = 0, mz = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        mz += z[k];
      }
      mx /= x.size();
      mz /= z.size();
      double s = 0;
      for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - mx) * (z[k] - mz);
      return s / (x.size() - 1);
    };
    const double m = va10.size(), n = va01.size();
    const double var_a = cov(va10, va10) / m + cov(va01, va01) / n;
    const double var_b = cov(vb10, vb10) / m + cov(vb01, vb01) / n;
    const double cov_ab = cov(va10, vb10) / m + cov(va01, vb01) / n;
    CHECK(std::abs(c.variance_a - var_a) < 1e-12);
    CHECK(std::abs(c.variance_b - var_b) < 1e-12);
    CHECK(std::abs(c.covariance_ab - cov_ab) < 1e-12);
    CHECK(std::abs(c.variance_diff - (var_a + var_b - 2 * cov_ab)) < 1e-12);
    CHECK(c.p_value == doctest::Approx(std::erfc(std::abs(c.z_statistic) / std::sqrt(2.0))));
  }
}

TEST_CASE("DeLong detects a clearly better scorer") {
  Gen g(205);
  const Index n = 400;
  Eigen::VectorXi y(n);
  Eigen::VectorXd good(n), bad(n);
  for (Index i = 0; i < n; ++i) {
    y(i) = g.coin();
    const double shared = g.normal();
    good(i) = shared + 2.0 * y(i);
    bad(i) = shared + 0.2 * y(i) + g.normal();
  }
  const DeLongComparison c = delong_test(good, bad, y);
  CHECK(c.auc_a > c.auc_b);
  CHECK(c.z_statistic > 0);
  CHECK(c.p_value < 1e-6);
}

TEST_CASE("bootstrap is deterministic and brackets the point estimate") {
  Gen g(206);
  const Scored d = random_scored(g, 150, 1.0, false);
  const ConfidenceInterval a = bootstrap_ci(d.s, d.y, 500, 42);
  const ConfidenceInterval b = bootstrap_ci(d.s, d.y, 500, 42);
  CHECK(a.low == b.low);
  CHECK(a.high == b.high);
  const double point = auc(d.s, d.y).auc;
  CHECK(a.low < point);
  CHECK(point < a.high);
  CHECK(a.replicates == 500);
  CHECK_THROWS_AS(bootstrap_ci(d.s, d.y, 50, 42), UsageError);
}

TEST_CASE("bootstrap replicates match a naive resample") {
  Gen g(207);
  const Scored d = random_scored(g, 40, 0.8, true);
  const Eigen::VectorXd reps = bootstrap_aucs(d.s, d.y, 20, 9);
  for (int r = 0; r < 20; ++r) {
    // Same draw sequence as the library: one index per sample from the
    // replicate's own generator, redrawn while a class is missing.
    std::mt19937_64 rng(derive_seed(9, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(d.s.size() - 1));
    Eigen::VectorXd s(d.s.size());
    Eigen::VectorXi y(d.s.size());
    do {
      for (Index k = 0; k < d.s.size(); ++k) {
        const auto i = static_cast<Index>(pick(rng));
        s(k) = d.s(i);
        y(k) = d.y(i);
      }
    } while (y.sum() == 0 || y.sum() == y.size());
    CHECK(std::abs(reps(r) - pairwise_auc(s, y)) < 1e-12);
  }
}

TEST_CASE("sensitivity and specificity match counting") {
  Gen g(208);
  for (int t = 0; t < 100; ++t) {
    const Index n = g.integer(2, 50);
    Eigen::VectorXi truth(n), pred(n);
    for (Index i = 0; i < n; ++i) {
      truth(i) = g.coin();
      pred(i) = g.coin();
    }
    truth(0) = 1;
    truth(1) = 0;
    double sens = 0, spec = 0;
    testing::sens_spec_oracle(pred, truth, sens, spec);
    const SensSpec r = sensitivity_specificity(pred, truth);
    CHECK(std::abs(r.sensitivity - sens) < 1e-12);
    CHECK(std::abs(r.specificity - spec) < 1e-12);
  }
}

TEST_CASE("quantile interpolates linearly") {
  Eigen::VectorXd v(5);
  v << 4, 0, 3, 1, 2;
  CHECK(quantile(v, 0.0) == 0.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == 2.0);
  CHECK(quantile(v, 0.125) == doctest::Approx(0.5));
}

TEST_CASE("Dice and IoU") {
  Eigen::ArrayXXi a(2, 2), b(2, 2);
  a << 1, 1, 0, 0;
  b << 1, 0, 0, 0;
  const OverlapScores s = dice_iou(a, b);
  CHECK(s.dice == doctest::Approx(2.0 / 3.0));
  CHECK(s.iou == doctest::Approx(0.5));
  const OverlapScores same = dice_iou(a, a);
  CHECK(same.dice == 1.0);
  CHECK(same.iou == 1.0);
  const OverlapScores empty = dice_iou(Eigen::ArrayXXi::Zero(2, 2), Eigen::ArrayXXi::Zero(2, 2));
  CHECK(empty.both_empty);
  CHECK(empty.dice == 1.0);
  Eigen::ArrayXXi c(2, 2);
  c << 0, 0, 1, 1;
  CHECK(dice_iou(a, c).dice == 0.0);
}

TEST_CASE("normal quantile inverts the CDF") {
  for (double p : {1e-6, 0.01, 0.2, 0.5, 0.8, 0.975, 1 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

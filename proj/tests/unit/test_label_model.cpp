#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "noisylab/label_io.hpp"
#include "noisylab/label_model.hpp"

using namespace noisylab;
using testing::Gen;

namespace {

// Two datasets: "a" owns classes {0, 1}, "b" owns {2}; others own all.
LabelMatrix tagged(Gen& g, Index f) {
  LabelMatrix m = LabelMatrix::from_dense(g.mixed_labels(f, 3), {"x", "y", "z"});
  for (Index i = 0; i < f; ++i) {
    m.dataset_tags[static_cast<std::size_t>(i)] = i % 3 == 0 ? "a" : (i % 3 == 1 ? "b" : "default");
  }
  m.ownership["a"] = {0, 1};
  m.ownership["b"] = {2};
  return m;
}

}  // namespace

TEST_CASE("class weights match a counting loop") {
  Gen g(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index f = g.integer(2, 30);
    const Index d = g.integer(1, 5);
    const BinaryMatrix y = g.labels(f, d, g.uniform(0.05, 0.95));
    const BoolMatrix mask = g.mask(f, d);
    const ClassWeights w = compute_class_weights(y, mask);
    const testing::WeightOracle o = testing::class_weights_oracle(y, mask);
    for (Index c = 0; c < d; ++c) {
      const auto k = static_cast<std::size_t>(c);
      CHECK(w.degenerate[k] == o.degenerate[k]);
      CHECK(std::abs(w.w_pos(c) - o.w_pos[k]) < 1e-12);
      CHECK(std::abs(w.w_neg(c) - o.w_neg[k]) < 1e-12);
    }
  }
}

TEST_CASE("class weights: worked examples") {
  BinaryMatrix y(4, 2);
  y << 1, 0, 0, 0, 0, 0, 0, 1;
  const ClassWeights w = compute_class_weights(LabelMatrix::from_dense(y));
  CHECK(w.w_pos(0) == 4.0);
  CHECK(w.w_neg(0) == doctest::Approx(4.0 / 3.0));
  // Balanced classes would weigh 2 on both sides.
  BinaryMatrix b(4, 1);
  b << 1, 1, 0, 0;
  const ClassWeights wb = compute_class_weights(LabelMatrix::from_dense(b));
  CHECK(wb.w_pos(0) == 2.0);
  CHECK(wb.w_neg(0) == 2.0);
}

TEST_CASE("class weights only count owned entries") {
  Gen g(3);
  const LabelMatrix m = tagged(g, 30);
  const BoolMatrix mask = m.ownership_mask();
  CHECK(mask(0, 0));
  CHECK_FALSE(mask(0, 2));
  CHECK_FALSE(mask(1, 0));
  CHECK(mask(1, 2));
  CHECK(mask(2, 1));
  const ClassWeights w = compute_class_weights(m);
  CHECK(w.pos_count(2) + w.neg_count(2) == 20);
  CHECK(w.pos_count(0) + w.neg_count(0) == 20);
}

TEST_CASE("all-negative class is flagged degenerate") {
  BinaryMatrix y = BinaryMatrix::Zero(5, 2);
  y(0, 1) = 1;
  const ClassWeights w = compute_class_weights(LabelMatrix::from_dense(y));
  CHECK(w.degenerate[0]);
  CHECK_FALSE(w.degenerate[1]);
}

TEST_CASE("label matrix validation") {
  LabelMatrix m = LabelMatrix::from_dense(BinaryMatrix::Ones(3, 2));
  CHECK_NOTHROW(m.validate());
  m.labels(1, 1) = 2;
  CHECK_THROWS_AS(m.validate(), DataError);
  m.labels(1, 1) = 1;
  m.sample_ids[2] = m.sample_ids[0];
  CHECK_THROWS_AS(m.validate(), DataError);
  m.sample_ids[2] = "s2";
  m.ownership["default"] = {5};
  CHECK_THROWS_AS(m.validate(), DataError);
}

TEST_CASE("correlation matches naive population moments") {
  Gen g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index f = g.integer(3, 40);
    const Index d = g.integer(1, 5);
    const BinaryMatrix y = g.labels(f, d);
    const CorrelationStats s = compute_correlation(y);
    Eigen::MatrixXd cov, r;
    testing::moments_oracle(y, cov, r);
    CHECK((s.covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.pearson - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("correlation: identical columns, independence and zero variance") {
  BinaryMatrix y(6, 3);
  y << 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0;
  const CorrelationStats s = compute_correlation(LabelMatrix::from_dense(y));
  CHECK(s.pearson(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.pearson(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.pearson(0, 2) == 0.0);
  CHECK(s.zero_variance[2]);
  CHECK_FALSE(s.zero_variance[0]);
  CHECK(s.convention == "population");

  BinaryMatrix ind(4, 2);
  ind << 0, 0, 0, 1, 1, 0, 1, 1;
  CHECK(compute_correlation(LabelMatrix::from_dense(ind)).pearson(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("correlation properties: symmetric, unit diagonal, bounded") {
  Gen g(8);
  for (int trial = 0; trial < 50; ++trial) {
    const CorrelationStats s = compute_correlation(g.mixed_labels(g.integer(4, 60), g.integer(2, 6)));
    CHECK((s.pearson - s.pearson.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.pearson.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(s.pearson.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("noise profile matches confusion counts") {
  Gen g(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Index f = g.integer(4, 50);
    const Index d = g.integer(1, 5);
    const LabelMatrix truth = LabelMatrix::from_dense(g.labels(f, d));
    LabelMatrix noisy = truth;
    for (Index k = 0; k < noisy.labels.size(); ++k) {
      if (g.coin(0.2)) noisy.labels(k) = 1 - noisy.labels(k);
    }
    const NoiseProfile p = measure_noise_profile(noisy, truth);
    for (Index c = 0; c < d; ++c) {
      double tp = 0, pos = 0, tn = 0, neg = 0;
      for (Index i = 0; i < f; ++i) {
        if (truth.labels(i, c)) {
          pos += 1;
          tp += noisy.labels(i, c);
        } else {
          neg += 1;
          tn += 1 - noisy.labels(i, c);
        }
      }
      const bool active = pos > 0 && neg > 0;
      CHECK(p.active[static_cast<std::size_t>(c)] == active);
      if (active) {
        CHECK(std::abs(p.sensitivity(c) - tp / pos) < 1e-12);
        CHECK(std::abs(p.specificity(c) - tn / neg) < 1e-12);
        CHECK(std::abs(p.f_pos(c) + p.sensitivity(c) - 1.0) < 1e-15);
      }
    }
  }
}

TEST_CASE("noise profile aligns by sample id and class name") {
  BinaryMatrix noisy(4, 2), truth(2, 1);
  noisy << 1, 0, 0, 1, 1, 1, 0, 0;
  LabelMatrix original = LabelMatrix::from_dense(noisy, {"A", "B"});
  // Re-read covers samples s3 and s0 (in that order) and only class B.
  truth << 1, 0;
  LabelMatrix reread = LabelMatrix::from_dense(truth, {"B"});
  reread.sample_ids = {"s3", "s0"};
  const NoiseProfile p = measure_noise_profile(original, reread);
  CHECK_FALSE(p.active[0]);
  CHECK(p.f_pos(0) == 0.0);
  REQUIRE(p.active[1]);
  CHECK(p.sensitivity(1) == 0.0);  // s3 true positive labeled 0
  CHECK(p.specificity(1) == 1.0);  // s0 true negative labeled 0

  reread.sample_ids = {"s3", "zz"};
  CHECK_THROWS_AS(measure_noise_profile(original, reread), DataError);
}

TEST_CASE("perfect labels give sensitivity and specificity of one") {
  Gen g(2);
  const LabelMatrix m = LabelMatrix::from_dense(g.mixed_labels(20, 4));
  const NoiseProfile p = measure_noise_profile(m, m);
  CHECK((p.sensitivity.array() == 1.0).all());
  CHECK((p.specificity.array() == 1.0).all());
  CHECK((p.f_pos.array() == 0.0).all());
}

TEST_CASE("label csv round trip keeps tags and ownership") {
  Gen g(4);
  const LabelMatrix m = tagged(g, 9);
  std::stringstream ss;
  write_labels_csv(ss, m);
  const LabelMatrix back = read_labels_csv(ss);
  CHECK(back.labels == m.labels);
  CHECK(back.sample_ids == m.sample_ids);
  CHECK(back.dataset_tags == m.dataset_tags);
  CHECK(back.class_names == m.class_names);
  CHECK(back.ownership == m.ownership);
}

TEST_CASE("malformed label csv reports the line") {
  std::stringstream ss("sample_id,dataset_tag,A,B\ns0,default,1,0\ns1,default,1,x\n");
  try {
    read_labels_csv(ss, "labels.csv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("labels.csv:3") != std::string::npos);
  }
  std::stringstream short_row("sample_id,dataset_tag,A,B\ns0,default,1\n");
  CHECK_THROWS_AS(read_labels_csv(short_row), DataError);
}

TEST_CASE("noise profile and correlation survive structured text") {
  Gen g(9);
  const LabelMatrix truth = LabelMatrix::from_dense(g.mixed_labels(30, 3), {"a", "b", "c"});
  LabelMatrix noisy = truth;
  noisy.labels(0, 0) = 0;
  const NoiseProfile p = measure_noise_profile(noisy, truth, 0.25);
  std::stringstream ss;
  to_structured(p).write(ss);
  const NoiseProfile q = noise_profile_from_structured(StructuredText::parse(ss));
  CHECK(q.sensitivity == p.sensitivity);
  CHECK(q.specificity == p.specificity);
  CHECK(q.lambda_noise == 0.25);
  CHECK(q.active == p.active);
  CHECK(q.class_names == p.class_names);

  const CorrelationStats s = compute_correlation(truth);
  std::stringstream cs;
  to_structured(s).write(cs);
  const CorrelationStats t = correlation_from_structured(StructuredText::parse(cs));
  CHECK(t.covariance == s.covariance);
  CHECK(t.pearson == s.pearson);
}

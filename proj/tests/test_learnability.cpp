#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "reldiag/errors.hpp"
#include "reldiag/learnability.hpp"
#include "reldiag/rng.hpp"

using namespace reldiag;

namespace {

SparseVector dense_to_sparse(const std::vector<double>& dense) {
  SparseVector v;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(i));
      v.values.push_back(dense[i]);
    }
  }
  return v;
}

struct RandomData {
  std::vector<SparseVector> features;
  std::vector<int> targets;
  std::size_t n_features;
};

RandomData make_random_data(Rng& rng, std::size_t n, std::size_t dim) {
  RandomData data;
  data.n_features = dim;
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dense(dim, 0.0);
    for (auto& value : dense) {
      if (rng.bounded(3) != 0) value = 2.0 * rng.uniform01() - 1.0;
    }
    data.features.push_back(dense_to_sparse(dense));
    int target = static_cast<int>(rng.bounded(2));
    if (i + 2 >= n && !has_pos) target = 1;
    if (i + 1 >= n && !has_neg) target = 0;
    (target ? has_pos : has_neg) = true;
    data.targets.push_back(target);
  }
  return data;
}

ProbeDataset tiny_probe_dataset(std::size_t per_class, std::size_t dim, std::uint64_t seed,
                                bool label_is_feature0) {
  Rng rng(seed);
  std::vector<SparseVector> a_vectors;
  std::vector<SparseVector> b_vectors;
  std::vector<std::string> a_ids;
  std::vector<std::string> b_ids;
  for (std::size_t i = 0; i < per_class; ++i) {
    std::vector<double> da(dim, 0.0);
    std::vector<double> db(dim, 0.0);
    for (std::size_t j = 1; j < dim; ++j) {
      da[j] = rng.uniform01();
      db[j] = rng.uniform01();
    }
    if (label_is_feature0) db[0] = 1.0;
    a_vectors.push_back(dense_to_sparse(da));
    b_vectors.push_back(dense_to_sparse(db));
    a_ids.push_back("a" + std::to_string(100 + i));
    b_ids.push_back("b" + std::to_string(100 + i));
  }
  return build_probe_dataset(a_vectors, a_ids, b_vectors, b_ids, dim, seed);
}

}  // namespace

TEST_SUITE("learnability") {

TEST_CASE("balanced inputs keep every example, majorities get downsampled") {
  Rng rng(42);
  std::vector<SparseVector> a(10);
  std::vector<SparseVector> b(10);
  std::vector<std::string> a_ids;
  std::vector<std::string> b_ids;
  for (int i = 0; i < 10; ++i) {
    a[i] = dense_to_sparse({rng.uniform01(), 0.0});
    b[i] = dense_to_sparse({0.0, rng.uniform01()});
    a_ids.push_back("a" + std::to_string(i));
    b_ids.push_back("b" + std::to_string(i));
  }
  const ProbeDataset balanced = build_probe_dataset(a, a_ids, b, b_ids, 2, 9);
  CHECK(balanced.features.size() == 20);
  CHECK(std::count(balanced.targets.begin(), balanced.targets.end(), 0) == 10);
  CHECK(std::count(balanced.targets.begin(), balanced.targets.end(), 1) == 10);

  std::vector<SparseVector> big(100, dense_to_sparse({1.0, 0.0}));
  std::vector<std::string> big_ids;
  for (int i = 0; i < 100; ++i) big_ids.push_back("big" + std::to_string(1000 + i));
  const ProbeDataset down = build_probe_dataset(big, big_ids, b, b_ids, 2, 9);
  CHECK(down.features.size() == 20);
  CHECK(std::count(down.targets.begin(), down.targets.end(), 0) == 10);

  const ProbeDataset again = build_probe_dataset(big, big_ids, b, b_ids, 2, 9);
  CHECK(down.doc_ids == again.doc_ids);  // same seed, same sample

  const ProbeDataset other = build_probe_dataset(big, big_ids, b, b_ids, 2, 10);
  CHECK(down.doc_ids != other.doc_ids);  // overwhelmingly likely for 10 of 100

  CHECK_THROWS_WITH_AS(build_probe_dataset({}, {}, b, b_ids, 2, 9),
                       doctest::Contains("0"), DomainError);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4 + rng.bounded(17);
    const std::size_t dim = 2 + rng.bounded(9);
    const RandomData data = make_random_data(rng, n, dim);

    std::vector<double> weights(dim);
    for (auto& w : weights) w = rng.uniform01() - 0.5;
    const double bias = rng.uniform01() - 0.5;
    const double lambda = rng.uniform01();

    const auto grad =
        logreg_gradient(data.features, data.targets, dim, weights, bias, lambda);
    REQUIRE(grad.size() == dim + 1);

    const double h = 1e-5;
    double max_rel_err = 0.0;
    for (std::size_t j = 0; j <= dim; ++j) {
      auto wp = weights;
      auto wm = weights;
      double bp = bias;
      double bm = bias;
      if (j < dim) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double lp = logreg_loss(data.features, data.targets, wp, bp, lambda);
      const double lm = logreg_loss(data.features, data.targets, wm, bm, lambda);
      const double numeric = (lp - lm) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(numeric), std::abs(grad[j])});
      max_rel_err = std::max(max_rel_err, std::abs(numeric - grad[j]) / denom);
    }
    CHECK(max_rel_err < 1e-5);
  }
}

TEST_CASE("separable two-point dataset trains to perfect accuracy") {
  const std::vector<SparseVector> features = {dense_to_sparse({-1.0}),
                                              dense_to_sparse({1.0})};
  const std::vector<int> targets = {0, 1};
  const LogisticModel model = train_logreg(features, targets, 1);
  CHECK(model.predict(features[0]) < 0.5);
  CHECK(model.predict(features[1]) > 0.5);
  CHECK(model.converged);
}

TEST_CASE("training rejects single-class input naming the counts") {
  const std::vector<SparseVector> features = {dense_to_sparse({1.0}), dense_to_sparse({2.0})};
  const std::vector<int> targets = {1, 1};
  CHECK_THROWS_WITH_AS(train_logreg(features, targets, 1), doctest::Contains("class"),
                       DomainError);
}

TEST_CASE("stronger regularization shrinks the weight norm") {
  Rng rng(88);
  RandomData data = make_random_data(rng, 30, 5);
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    data.targets[i] = static_cast<int>(i % 2);  // balanced, so the bias optimum is 0
  }

  TrainOptions heavy;
  heavy.lambda = 1e9;
  const LogisticModel crushed = train_logreg(data.features, data.targets, 5, heavy);
  for (const double w : crushed.weights) CHECK(std::abs(w) < 1e-6);
  CHECK(crushed.predict(data.features[0]) == doctest::Approx(0.5).epsilon(1e-3));

  TrainOptions light;
  light.lambda = 0.1;
  const LogisticModel loose = train_logreg(data.features, data.targets, 5, light);
  TrainOptions medium;
  medium.lambda = 10.0;
  const LogisticModel tight = train_logreg(data.features, data.targets, 5, medium);
  auto norm = [](const std::vector<double>& w) {
    double s = 0.0;
    for (const double v : w) s += v * v;
    return std::sqrt(s);
  };
  CHECK(norm(tight.weights) < norm(loose.weights));
}

TEST_CASE("two different initializations reach the same loss") {
  Rng rng(123);
  const RandomData data = make_random_data(rng, 40, 8);
  TrainOptions cold;
  cold.lambda = 0.5;
  const LogisticModel m1 = train_logreg(data.features, data.targets, 8, cold);

  TrainOptions warm = cold;
  warm.init_weights.assign(8, 0.0);
  for (auto& w : warm.init_weights) w = rng.uniform01() - 0.5;
  warm.init_bias = 0.3;
  const LogisticModel m2 = train_logreg(data.features, data.targets, 8, warm);

  CHECK(m1.converged);
  CHECK(m2.converged);
  CHECK(m1.final_loss == doctest::Approx(m2.final_loss).epsilon(1e-5));
}

TEST_CASE("loss never increases during training") {
  Rng rng(321);
  const RandomData data = make_random_data(rng, 25, 6);
  TrainOptions options;
  options.lambda = 0.1;
  const LogisticModel model = train_logreg(data.features, data.targets, 6, options);
  const double initial_loss =
      logreg_loss(data.features, data.targets, std::vector<double>(6, 0.0), 0.0, 0.1);
  CHECK(model.final_loss <= initial_loss + 1e-12);
}

TEST_CASE("auc hand cases") {
  CHECK(roc_auc(std::vector<double>{0.0, 1.0, 0.0, 1.0}, std::vector<int>{0, 1, 0, 1}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.7, 0.7, 0.7}, std::vector<int>{0, 1, 0}) == 0.5);
  CHECK(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}) == 0.0);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.5, 0.6}, std::vector<int>{1, 1}), DomainError);
}

TEST_CASE("auc equals the pairwise-count oracle on random data") {
  Rng rng(456);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.bounded(12);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.bounded(5) * 0.25;  // coarse grid forces plenty of ties
      labels[i] = static_cast<int>(rng.bounded(2));
    }
    labels[0] = 0;
    labels[n - 1] = 1;
    const double expected = oracles::auc(scores, labels);
    CHECK(roc_auc(scores, labels) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("auc of flipped labels is the exact complement") {
  Rng rng(654);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 4 + rng.bounded(20);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.bounded(7) * 0.125;
      labels[i] = static_cast<int>(rng.bounded(2));
    }
    labels[0] = 0;
    labels[n - 1] = 1;
    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - labels[i];
    CHECK(roc_auc(scores, labels) + roc_auc(scores, flipped) == 1.0);  // exact, not approx
  }
}

TEST_CASE("auc is invariant under strictly increasing score transforms") {
  Rng rng(987);
  std::vector<double> scores(40);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform01();
    labels[i] = static_cast<int>(rng.bounded(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  std::vector<double> transformed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    transformed[i] = std::exp(3.0 * scores[i]) + 7.0;
  }
  CHECK(roc_auc(scores, labels) == roc_auc(transformed, labels));
}

TEST_CASE("stratified folds are disjoint, exhaustive, and class-balanced within one") {
  Rng rng(135);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + rng.bounded(60);
    const std::size_t k = 2 + rng.bounded(5);
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<int>(rng.bounded(2));
    for (std::size_t c = 0; c < 2; ++c) {
      // make sure each class can fill every fold
      for (std::size_t j = 0; j < k; ++j) targets[(c * k + j) % n] = static_cast<int>(c);
    }
    const auto fold_ids = stratified_fold_ids(targets, k, rng.next_u64());
    REQUIRE(fold_ids.size() == n);

    std::vector<std::vector<std::size_t>> per_fold_class(k, std::vector<std::size_t>(2, 0));
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(fold_ids[i] < k);
      per_fold_class[fold_ids[i]][static_cast<std::size_t>(targets[i])]++;
    }
    for (std::size_t cls = 0; cls < 2; ++cls) {
      std::size_t lo = n;
      std::size_t hi = 0;
      for (std::size_t f = 0; f < k; ++f) {
        lo = std::min(lo, per_fold_class[f][cls]);
        hi = std::max(hi, per_fold_class[f][cls]);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("cross validation is perfect when a feature equals the label") {
  const ProbeDataset dataset = tiny_probe_dataset(25, 4, 7, true);
  const CvReport report = cross_validate(dataset, 5, 77);
  CHECK(report.fold_aucs.size() == 5);
  CHECK(report.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.n_examples == 50);
  CHECK(report.n_features == 4);
}

TEST_CASE("cross validation hovers near chance on label-independent features") {
  const ProbeDataset dataset = tiny_probe_dataset(100, 6, 31, false);
  const CvReport report = cross_validate(dataset, 5, 313);
  CHECK(report.mean > 0.4);
  CHECK(report.mean < 0.6);
}

TEST_CASE("cross validation is deterministic and validates its inputs") {
  const ProbeDataset dataset = tiny_probe_dataset(10, 3, 11, true);
  const CvReport r1 = cross_validate(dataset, 5, 99);
  const CvReport r2 = cross_validate(dataset, 5, 99);
  CHECK(r1.fold_aucs == r2.fold_aucs);
  CHECK(r1.mean == r2.mean);
  CHECK(r1.std_dev == r2.std_dev);

  // mean and std are recomputable from the fold list
  double mean = 0.0;
  for (const double auc : r1.fold_aucs) mean += auc;
  mean /= static_cast<double>(r1.fold_aucs.size());
  double var = 0.0;
  for (const double auc : r1.fold_aucs) var += (auc - mean) * (auc - mean);
  var /= static_cast<double>(r1.fold_aucs.size());
  CHECK(r1.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r1.std_dev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

  CHECK_THROWS_AS(cross_validate(dataset, 1, 99), DomainError);
  const ProbeDataset small = tiny_probe_dataset(3, 3, 5, true);
  CHECK_THROWS_AS(cross_validate(small, 5, 99), DomainError);  // 3 per class < 5 folds
}

TEST_CASE("cv report serializes the documented shape") {
  const ProbeDataset dataset = tiny_probe_dataset(10, 3, 21, true);
  const CvReport report = cross_validate(dataset, 5, 2);
  const auto json = nlohmann::json::parse(cv_report_to_json(report));
  CHECK(json["k"] == 5);
  CHECK(json["seed"] == 2);
  CHECK(json["fold_aucs"].size() == 5);
  CHECK(json.contains("mean"));
  CHECK(json.contains("std"));
  CHECK(json["n_examples"] == 20);
  CHECK(json["n_features"] == 3);
  CHECK(json["lambda"] == 1.0);
}

}  // TEST_SUITE

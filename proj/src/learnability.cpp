#include "reldiag/learnability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "reldiag/errors.hpp"
#include "reldiag/rng.hpp"

namespace reldiag {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

std::vector<std::size_t> pick_subset(std::size_t pool, std::size_t take, Rng& rng) {
  std::vector<std::size_t> indices(pool);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  rng.partial_shuffle(indices, take);
  indices.resize(take);
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace

double LogisticModel::decision(const SparseVector& x) const {
  double z = bias;
  for (std::size_t i = 0; i < x.indices.size(); ++i) z += x.values[i] * weights[x.indices[i]];
  return z;
}

double LogisticModel::predict(const SparseVector& x) const { return sigmoid(decision(x)); }

ProbeDataset build_probe_dataset(std::span<const SparseVector> a_vectors,
                                 std::span<const std::string> a_ids,
                                 std::span<const SparseVector> b_vectors,
                                 std::span<const std::string> b_ids, std::size_t n_features,
                                 std::uint64_t seed) {
  if (a_vectors.size() != a_ids.size() || b_vectors.size() != b_ids.size()) {
    throw DomainError("build_probe_dataset requires one doc_id per vector");
  }
  if (a_vectors.empty() || b_vectors.empty()) {
    throw DomainError("build_probe_dataset requires both disagreement quadrants non-empty "
                      "(a_only=" + std::to_string(a_vectors.size()) +
                      ", b_only=" + std::to_string(b_vectors.size()) + ")");
  }

  const std::size_t minority = std::min(a_vectors.size(), b_vectors.size());
  Rng rng(seed);
  auto keep_a = a_vectors.size() > minority ? pick_subset(a_vectors.size(), minority, rng)
                                            : pick_subset(a_vectors.size(), a_vectors.size(), rng);
  auto keep_b = b_vectors.size() > minority ? pick_subset(b_vectors.size(), minority, rng)
                                            : pick_subset(b_vectors.size(), b_vectors.size(), rng);

  ProbeDataset dataset;
  dataset.n_features = n_features;
  dataset.seed = seed;
  dataset.features.reserve(2 * minority);
  dataset.targets.reserve(2 * minority);
  dataset.doc_ids.reserve(2 * minority);
  for (const std::size_t i : keep_a) {
    dataset.features.push_back(a_vectors[i]);
    dataset.targets.push_back(0);
    dataset.doc_ids.push_back(a_ids[i]);
  }
  for (const std::size_t i : keep_b) {
    dataset.features.push_back(b_vectors[i]);
    dataset.targets.push_back(1);
    dataset.doc_ids.push_back(b_ids[i]);
  }
  return dataset;
}

double logreg_loss(std::span<const SparseVector> features, std::span<const int> targets,
                   std::span<const double> weights, double bias, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double z = bias;
    const auto& x = features[i];
    for (std::size_t j = 0; j < x.indices.size(); ++j) z += x.values[j] * weights[x.indices[j]];
    loss += softplus(z) - static_cast<double>(targets[i]) * z;
  }
  loss /= static_cast<double>(features.size());
  double reg = 0.0;
  for (const double w : weights) reg += w * w;
  return loss + 0.5 * lambda * reg;
}

std::vector<double> logreg_gradient(std::span<const SparseVector> features,
                                    std::span<const int> targets, std::size_t n_features,
                                    std::span<const double> weights, double bias, double lambda) {
  std::vector<double> grad(n_features + 1, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    double z = bias;
    const auto& x = features[i];
    for (std::size_t j = 0; j < x.indices.size(); ++j) z += x.values[j] * weights[x.indices[j]];
    const double residual = sigmoid(z) - static_cast<double>(targets[i]);
    for (std::size_t j = 0; j < x.indices.size(); ++j) {
      grad[x.indices[j]] += residual * x.values[j];
    }
    grad[n_features] += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (auto& g : grad) g *= inv_n;
  for (std::size_t j = 0; j < n_features; ++j) grad[j] += lambda * weights[j];
  return grad;
}

LogisticModel train_logreg(std::span<const SparseVector> features, std::span<const int> targets,
                           std::size_t n_features, const TrainOptions& options) {
  if (features.size() != targets.size()) {
    throw DomainError("train_logreg requires one target per feature vector");
  }
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (const int t : targets) (t ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DomainError("train_logreg requires both classes present (class 0: " +
                      std::to_string(n_neg) + ", class 1: " + std::to_string(n_pos) + ")");
  }
  if (!options.init_weights.empty() && options.init_weights.size() != n_features) {
    throw DomainError("train_logreg init_weights size mismatch");
  }

  LogisticModel model;
  model.lambda = options.lambda;
  model.weights = options.init_weights.empty() ? std::vector<double>(n_features, 0.0)
                                               : options.init_weights;
  model.bias = options.init_bias;

  double loss = logreg_loss(features, targets, model.weights, model.bias, options.lambda);
  double step = 1.0;
  constexpr double kArmijo = 1e-4;

  while (model.iterations < options.max_iters) {
    const auto grad =
        logreg_gradient(features, targets, n_features, model.weights, model.bias, options.lambda);
    double grad_norm_sq = 0.0;
    for (const double g : grad) grad_norm_sq += g * g;
    model.final_gradient_norm = std::sqrt(grad_norm_sq);
    if (model.final_gradient_norm < options.tolerance) {
      model.converged = true;
      break;
    }

    step = std::min(step * 2.0, 1.0);
    bool accepted = false;
    std::vector<double> trial_w(n_features);
    while (step > 1e-18) {
      for (std::size_t j = 0; j < n_features; ++j) trial_w[j] = model.weights[j] - step * grad[j];
      const double trial_b = model.bias - step * grad[n_features];
      const double trial_loss =
          logreg_loss(features, targets, trial_w, trial_b, options.lambda);
      if (trial_loss <= loss - kArmijo * step * grad_norm_sq) {
        model.weights = trial_w;
        model.bias = trial_b;
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // numerical floor reached
    ++model.iterations;
  }
  if (!model.converged) {
    const auto grad =
        logreg_gradient(features, targets, n_features, model.weights, model.bias, options.lambda);
    double grad_norm_sq = 0.0;
    for (const double g : grad) grad_norm_sq += g * g;
    model.final_gradient_norm = std::sqrt(grad_norm_sq);
    model.converged = model.final_gradient_norm < options.tolerance;
  }
  model.final_loss = loss;
  return model;
}

LogisticModel train_logreg(const ProbeDataset& dataset, const TrainOptions& options) {
  return train_logreg(dataset.features, dataset.targets, dataset.n_features, options);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DomainError("roc_auc requires one label per score");
  }
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (const int y : labels) (y ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DomainError("roc_auc requires both classes present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // rank sum of positives with average ranks over ties
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }

  const double d = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  const double u_pos =
      rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  const double u_neg = d - u_pos;
  // complement form keeps auc(labels) + auc(flipped labels) = 1 exact in IEEE arithmetic
  if (u_pos <= u_neg) return u_pos / d;
  return 1.0 - u_neg / d;
}

std::vector<std::size_t> stratified_fold_ids(std::span<const int> targets, std::size_t k,
                                             std::uint64_t seed) {
  if (k < 2) throw DomainError("stratified folds require k >= 2");
  std::vector<std::size_t> folds(targets.size(), 0);
  for (const int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] == cls) members.push_back(i);
    }
    if (members.size() < k) {
      throw DomainError("class " + std::to_string(cls) + " has " +
                        std::to_string(members.size()) + " examples, fewer than k=" +
                        std::to_string(k) + " folds");
    }
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) folds[members[i]] = i % k;
  }
  return folds;
}

CvReport cross_validate(const ProbeDataset& dataset, std::size_t k, std::uint64_t seed,
                        const TrainOptions& options) {
  const auto folds = stratified_fold_ids(dataset.targets, k, seed);

  CvReport report;
  report.k = k;
  report.seed = seed;
  report.n_examples = dataset.features.size();
  report.n_features = dataset.n_features;
  report.lambda = options.lambda;

  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<SparseVector> train_x;
    std::vector<int> train_y;
    std::vector<SparseVector> test_x;
    std::vector<int> test_y;
    for (std::size_t i = 0; i < dataset.features.size(); ++i) {
      if (folds[i] == fold) {
        test_x.push_back(dataset.features[i]);
        test_y.push_back(dataset.targets[i]);
      } else {
        train_x.push_back(dataset.features[i]);
        train_y.push_back(dataset.targets[i]);
      }
    }
    const LogisticModel model = train_logreg(train_x, train_y, dataset.n_features, options);
    std::vector<double> scores;
    scores.reserve(test_x.size());
    for (const auto& x : test_x) scores.push_back(model.decision(x));
    report.fold_aucs.push_back(roc_auc(scores, test_y));
  }

  double sum = 0.0;
  for (const double auc : report.fold_aucs) sum += auc;
  report.mean = sum / static_cast<double>(k);
  double var = 0.0;
  for (const double auc : report.fold_aucs) {
    var += (auc - report.mean) * (auc - report.mean);
  }
  report.std_dev = std::sqrt(var / static_cast<double>(k));
  return report;
}

std::string cv_report_to_json(const CvReport& report) {
  nlohmann::ordered_json j;
  j["k"] = report.k;
  j["seed"] = report.seed;
  j["fold_aucs"] = report.fold_aucs;
  j["mean"] = report.mean;
  j["std"] = report.std_dev;
  j["n_examples"] = report.n_examples;
  j["n_features"] = report.n_features;
  j["lambda"] = report.lambda;
  return j.dump(2) + "\n";
}

}  // namespace reldiag

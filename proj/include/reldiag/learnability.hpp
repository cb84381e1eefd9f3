#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reldiag/tfidf.hpp"

namespace reldiag {

// Balanced binary probe data: target 0 = model-A-only-relevant, 1 = model-B-only-relevant.
struct ProbeDataset {
  std::vector<SparseVector> features;
  std::vector<int> targets;
  std::vector<std::string> doc_ids;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1.0;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  double final_loss = 0.0;
  bool converged = false;

  double decision(const SparseVector& x) const;  // w·x + bias
  double predict(const SparseVector& x) const;   // sigmoid(decision)
};

struct TrainOptions {
  double lambda = 1.0;
  double tolerance = 1e-6;  // on the full gradient norm
  std::size_t max_iters = 1000;
  std::vector<double> init_weights;  // empty = zeros
  double init_bias = 0.0;
};

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<double> fold_aucs;
  double mean = 0.0;
  double std_dev = 0.0;  // population std over folds
  std::size_t n_examples = 0;
  std::size_t n_features = 0;
  double lambda = 1.0;
};

// Downsamples the majority class uniformly at random to the minority size.
ProbeDataset build_probe_dataset(std::span<const SparseVector> a_vectors,
                                 std::span<const std::string> a_ids,
                                 std::span<const SparseVector> b_vectors,
                                 std::span<const std::string> b_ids, std::size_t n_features,
                                 std::uint64_t seed);

// Mean log-loss + (lambda/2)·||w||^2, bias unregularized.
double logreg_loss(std::span<const SparseVector> features, std::span<const int> targets,
                   std::span<const double> weights, double bias, double lambda);

// Gradient of logreg_loss; returns n_features weight components followed by the bias component.
std::vector<double> logreg_gradient(std::span<const SparseVector> features,
                                    std::span<const int> targets, std::size_t n_features,
                                    std::span<const double> weights, double bias, double lambda);

LogisticModel train_logreg(std::span<const SparseVector> features, std::span<const int> targets,
                           std::size_t n_features, const TrainOptions& options = {});
LogisticModel train_logreg(const ProbeDataset& dataset, const TrainOptions& options = {});

// Rank-based (Mann-Whitney) AUC; ties contribute 0.5.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Stratified k-fold cross-validation returning per-fold AUCs.
CvReport cross_validate(const ProbeDataset& dataset, std::size_t k, std::uint64_t seed,
                        const TrainOptions& options = {});

std::string cv_report_to_json(const CvReport& report);

// Exposed for fold-shape property tests: fold id per example, stratified round-robin.
std::vector<std::size_t> stratified_fold_ids(std::span<const int> targets, std::size_t k,
                                             std::uint64_t seed);

}  // namespace reldiag

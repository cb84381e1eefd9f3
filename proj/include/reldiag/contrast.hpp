#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reldiag/tfidf.hpp"

namespace reldiag {

// How Monte-Carlo p-values are formed from the permutation hit count.
// AddOne keeps p in (0,1]; Literal is the plain hit proportion and may be 0.
enum class PValueMode { AddOne, Literal };

struct TermContrast {
  std::string term;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta = 0.0;  // mean_b - mean_a
  double p_value = 1.0;
  double p_adjusted = 1.0;
  bool rejected = false;
};

// Terms sorted by |delta| descending, ties lexicographic.
struct ContrastResult {
  std::vector<TermContrast> terms;
  std::size_t top_n = 0;
};

struct TermDistribution {
  std::vector<double> probabilities;
  double epsilon = 0.0;
};

struct FdrResult {
  std::vector<bool> rejected;
  std::vector<double> p_adjusted;
  std::size_t n_rejected = 0;
};

struct ContrastOptions {
  std::size_t top_n = 200;
  std::size_t n_perm = 9999;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  PValueMode p_mode = PValueMode::AddOne;
  unsigned n_threads = 1;
};

ContrastResult contrastive_diff(const VectorizerModel& model,
                                std::span<const SparseVector> set_a,
                                std::span<const SparseVector> set_b, std::size_t top_n);

double permutation_test(const VectorizerModel& model, std::span<const SparseVector> set_a,
                        std::span<const SparseVector> set_b, std::string_view term,
                        std::size_t n_perm, std::uint64_t seed,
                        PValueMode mode = PValueMode::AddOne);

FdrResult bh_fdr(std::span<const double> p_values, double alpha);

TermDistribution smooth_distribution(std::span<const double> means, double epsilon);

double kl_divergence(const TermDistribution& p, const TermDistribution& q);
double kl_divergence(std::span<const double> mean_a, std::span<const double> mean_b,
                     double epsilon);

// contrastive_diff + per-term permutation tests on the top_n terms + FDR flags.
// Per-term RNG streams are derived from (seed, vocabulary index), so results are
// identical for any n_threads and match standalone permutation_test calls.
ContrastResult run_contrast(const VectorizerModel& model, std::span<const SparseVector> set_a,
                            std::span<const SparseVector> set_b, const ContrastOptions& options);

}  // namespace reldiag

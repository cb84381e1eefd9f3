#include "reldiag/contrast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "reldiag/errors.hpp"
#include "reldiag/rng.hpp"

namespace reldiag {

namespace {

double term_value(const SparseVector& vec, std::uint32_t term_idx) {
  auto it = std::lower_bound(vec.indices.begin(), vec.indices.end(), term_idx);
  if (it == vec.indices.end() || *it != term_idx) return 0.0;
  return vec.values[static_cast<std::size_t>(it - vec.indices.begin())];
}

std::vector<double> term_column(std::span<const SparseVector> set_a,
                                std::span<const SparseVector> set_b, std::uint32_t term_idx) {
  std::vector<double> column;
  column.reserve(set_a.size() + set_b.size());
  for (const auto& vec : set_a) column.push_back(term_value(vec, term_idx));
  for (const auto& vec : set_b) column.push_back(term_value(vec, term_idx));
  return column;
}

double finish_p(std::size_t hits, std::size_t n_perm, PValueMode mode) {
  if (mode == PValueMode::AddOne) {
    return static_cast<double>(hits + 1) / static_cast<double>(n_perm + 1);
  }
  return static_cast<double>(hits) / static_cast<double>(n_perm);
}

// Monte-Carlo permutation p-value for one term column (set_a entries first).
double column_permutation_p(std::span<const double> column, std::size_t n_a, std::size_t n_perm,
                            std::uint64_t stream_seed, PValueMode mode) {
  const std::size_t n = column.size();
  const std::size_t n_b = n - n_a;
  // group sums accumulated independently so identical groups give |delta| = 0 exactly
  double sum_a_obs = 0.0;
  for (std::size_t i = 0; i < n_a; ++i) sum_a_obs += column[i];
  double sum_b_obs = 0.0;
  for (std::size_t i = n_a; i < n; ++i) sum_b_obs += column[i];
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double abs_obs = std::abs(sum_b_obs / nb - sum_a_obs / na);

  Rng rng(stream_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n_perm; ++p) {
    rng.partial_shuffle(order, n_a);
    // permuted sums use the same accumulation as the observed ones so a
    // regrouping identical to the observed split ties abs_obs exactly
    double sum_a = 0.0;
    for (std::size_t i = 0; i < n_a; ++i) sum_a += column[order[i]];
    double sum_b = 0.0;
    for (std::size_t i = n_a; i < n; ++i) sum_b += column[order[i]];
    const double delta = sum_b / nb - sum_a / na;
    if (std::abs(delta) >= abs_obs) ++hits;
  }
  return finish_p(hits, n_perm, mode);
}

}  // namespace

ContrastResult contrastive_diff(const VectorizerModel& model,
                                std::span<const SparseVector> set_a,
                                std::span<const SparseVector> set_b, std::size_t top_n) {
  if (set_a.empty() || set_b.empty()) {
    throw DomainError("contrastive_diff requires two non-empty vector sets (|a|=" +
                      std::to_string(set_a.size()) + ", |b|=" + std::to_string(set_b.size()) + ")");
  }
  if (top_n < 1) throw DomainError("contrastive_diff requires top_n >= 1");

  const std::size_t vocab = model.vocabulary_size();
  const auto mean_a = mean_vector(set_a, vocab);
  const auto mean_b = mean_vector(set_b, vocab);

  std::vector<std::uint32_t> order(vocab);
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  std::sort(order.begin(), order.end(), [&](std::uint32_t lhs, std::uint32_t rhs) {
    const double dl = std::abs(mean_b[lhs] - mean_a[lhs]);
    const double dr = std::abs(mean_b[rhs] - mean_a[rhs]);
    if (dl != dr) return dl > dr;
    return lhs < rhs;  // vocabulary order is lexicographic
  });

  ContrastResult result;
  result.top_n = std::min(top_n, vocab);
  result.terms.reserve(result.top_n);
  for (std::size_t i = 0; i < result.top_n; ++i) {
    const std::uint32_t t = order[i];
    TermContrast record;
    record.term = model.terms()[t];
    record.mean_a = mean_a[t];
    record.mean_b = mean_b[t];
    record.delta = mean_b[t] - mean_a[t];
    result.terms.push_back(std::move(record));
  }
  return result;
}

double permutation_test(const VectorizerModel& model, std::span<const SparseVector> set_a,
                        std::span<const SparseVector> set_b, std::string_view term,
                        std::size_t n_perm, std::uint64_t seed, PValueMode mode) {
  if (set_a.empty() || set_b.empty()) {
    throw DomainError("permutation_test requires two non-empty groups");
  }
  if (n_perm < 1) throw DomainError("permutation_test requires n_perm >= 1");
  const std::int64_t idx = model.term_index(term);
  if (idx < 0) {
    throw DomainError("permutation_test: term \"" + std::string(term) + "\" not in vocabulary");
  }
  const auto term_idx = static_cast<std::uint32_t>(idx);
  const auto column = term_column(set_a, set_b, term_idx);
  return column_permutation_p(column, set_a.size(), n_perm, derive_stream(seed, term_idx), mode);
}

FdrResult bh_fdr(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("bh_fdr requires alpha in (0,1), got " + std::to_string(alpha));
  }
  for (const double p : p_values) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw DomainError("bh_fdr requires p-values in (0,1], got " + std::to_string(p));
    }
  }

  const std::size_t m = p_values.size();
  FdrResult result;
  result.rejected.assign(m, false);
  result.p_adjusted.assign(m, 1.0);
  if (m == 0) return result;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  // step-up adjusted p: running minimum of p(i)*m/i from the largest rank down
  double running = 1.0;
  std::vector<double> adjusted_sorted(m);
  for (std::size_t i = m; i-- > 0;) {
    const double scaled = p_values[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, std::min(1.0, scaled));
    adjusted_sorted[i] = running;
  }

  std::size_t cutoff = 0;  // one past the last rejected rank
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = static_cast<double>(i + 1) / static_cast<double>(m) * alpha;
    if (p_values[order[i]] <= threshold) cutoff = i + 1;
  }
  for (std::size_t i = 0; i < m; ++i) {
    result.p_adjusted[order[i]] = adjusted_sorted[i];
    if (i < cutoff) result.rejected[order[i]] = true;
  }
  result.n_rejected = cutoff;
  return result;
}

TermDistribution smooth_distribution(std::span<const double> means, double epsilon) {
  if (means.empty()) throw DomainError("smooth_distribution requires a non-empty vector");
  if (!(epsilon > 0.0)) throw DomainError("smooth_distribution requires epsilon > 0");
  TermDistribution dist;
  dist.epsilon = epsilon;
  dist.probabilities.reserve(means.size());
  double total = 0.0;
  for (const double v : means) {
    if (!(v >= 0.0)) throw DomainError("smooth_distribution requires non-negative entries");
    total += v + epsilon;
  }
  for (const double v : means) dist.probabilities.push_back((v + epsilon) / total);
  return dist;
}

double kl_divergence(const TermDistribution& p, const TermDistribution& q) {
  if (p.probabilities.size() != q.probabilities.size()) {
    throw DomainError("kl_divergence requires distributions over the same vocabulary (" +
                      std::to_string(p.probabilities.size()) + " vs " +
                      std::to_string(q.probabilities.size()) + " entries)");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    d += p.probabilities[i] * std::log(p.probabilities[i] / q.probabilities[i]);
  }
  return d;
}

double kl_divergence(std::span<const double> mean_a, std::span<const double> mean_b,
                     double epsilon) {
  if (mean_a.size() != mean_b.size()) {
    throw DomainError("kl_divergence requires vectors over the same vocabulary (" +
                      std::to_string(mean_a.size()) + " vs " + std::to_string(mean_b.size()) +
                      " entries)");
  }
  return kl_divergence(smooth_distribution(mean_a, epsilon), smooth_distribution(mean_b, epsilon));
}

ContrastResult run_contrast(const VectorizerModel& model, std::span<const SparseVector> set_a,
                            std::span<const SparseVector> set_b, const ContrastOptions& options) {
  if (options.n_perm < 1) throw DomainError("run_contrast requires n_perm >= 1");
  ContrastResult result = contrastive_diff(model, set_a, set_b, options.top_n);

  std::vector<std::uint32_t> term_indices(result.terms.size());
  for (std::size_t i = 0; i < result.terms.size(); ++i) {
    term_indices[i] = static_cast<std::uint32_t>(model.term_index(result.terms[i].term));
  }

  const unsigned workers = std::max(1u, options.n_threads);
  std::atomic<std::size_t> next{0};
  auto run_worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.terms.size()) break;
      const auto column = term_column(set_a, set_b, term_indices[i]);
      result.terms[i].p_value =
          column_permutation_p(column, set_a.size(), options.n_perm,
                               derive_stream(options.seed, term_indices[i]), options.p_mode);
    }
  };
  if (workers == 1) {
    run_worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> p_values;
  p_values.reserve(result.terms.size());
  for (const auto& record : result.terms) p_values.push_back(record.p_value);
  const FdrResult fdr = bh_fdr(p_values, options.alpha);
  for (std::size_t i = 0; i < result.terms.size(); ++i) {
    result.terms[i].p_adjusted = fdr.p_adjusted[i];
    result.terms[i].rejected = fdr.rejected[i];
  }
  return result;
}

}  // namespace reldiag

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reldiag/tfidf.hpp"

namespace reldiag {

enum class QueryProvenance { Centroid, RepresentativeTerms };

struct QueryVector {
  std::vector<double> dense;  // fitted TF-IDF space
  QueryProvenance provenance = QueryProvenance::Centroid;
  std::vector<std::string> terms;       // filled for representative queries
  std::optional<std::string> warning;   // set when n_terms was clamped
};

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based position within its list
};

struct OverlapReport {
  std::string method;  // "centroid" | "query"
  std::size_t k = 0;
  std::size_t a_only = 0;
  std::size_t b_only = 0;
  std::size_t both = 0;
  std::vector<RankedDoc> a_list;
  std::vector<RankedDoc> b_list;
};

// Arithmetic mean of document vectors, not re-normalized.
QueryVector centroid_query(std::span<const SparseVector> vectors, std::size_t dimension);

// Top n_terms by mean TF-IDF (ties lexicographic), vectorized as a synthetic document.
// n_terms beyond the vocabulary is clamped and noted in the warning field.
QueryVector representative_query(const VectorizerModel& model,
                                 std::span<const SparseVector> vectors, std::size_t n_terms);

// Cosine scores sorted descending, ties broken by doc_id ascending; zero vectors score 0.
std::vector<RankedDoc> cosine_rank(const QueryVector& query, std::span<const SparseVector> docs,
                                   std::span<const std::string> doc_ids);

// First k ranked entries whose doc_id is in relevant_keys, re-ranked 1..k.
std::vector<RankedDoc> filtered_topk(std::span<const RankedDoc> ranked,
                                     const std::set<std::string>& relevant_keys, std::size_t k);

OverlapReport overlap_report(std::span<const RankedDoc> topk_a,
                             std::span<const RankedDoc> topk_b, std::string method,
                             std::size_t k);

std::string overlap_report_to_json(const OverlapReport& report);

}  // namespace reldiag

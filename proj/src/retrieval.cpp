#include "reldiag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "reldiag/errors.hpp"

namespace reldiag {

QueryVector centroid_query(std::span<const SparseVector> vectors, std::size_t dimension) {
  if (vectors.empty()) throw DomainError("centroid_query requires a non-empty document slice");
  QueryVector query;
  query.dense = mean_vector(vectors, dimension);
  query.provenance = QueryProvenance::Centroid;
  return query;
}

QueryVector representative_query(const VectorizerModel& model,
                                 std::span<const SparseVector> vectors, std::size_t n_terms) {
  if (n_terms < 1) throw DomainError("representative_query requires n_terms >= 1");
  if (vectors.empty()) {
    throw DomainError("representative_query requires a non-empty document slice");
  }
  const std::size_t vocab = model.vocabulary_size();
  QueryVector query;
  query.provenance = QueryProvenance::RepresentativeTerms;
  std::size_t effective = n_terms;
  if (effective > vocab) {
    std::ostringstream msg;
    msg << "n_terms=" << n_terms << " exceeds vocabulary size " << vocab << "; clamped to "
        << vocab;
    query.warning = msg.str();
    effective = vocab;
  }

  const auto means = mean_vector(vectors, vocab);
  std::vector<std::uint32_t> order(vocab);
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  std::sort(order.begin(), order.end(), [&](std::uint32_t lhs, std::uint32_t rhs) {
    if (means[lhs] != means[rhs]) return means[lhs] > means[rhs];
    return lhs < rhs;  // vocabulary order is lexicographic
  });

  std::string synthetic;
  for (std::size_t i = 0; i < effective; ++i) {
    const auto& term = model.terms()[order[i]];
    query.terms.push_back(term);
    if (!synthetic.empty()) synthetic.push_back(' ');
    synthetic += term;
  }

  const SparseVector sparse = model.transform(synthetic);
  query.dense.assign(vocab, 0.0);
  for (std::size_t i = 0; i < sparse.indices.size(); ++i) {
    query.dense[sparse.indices[i]] = sparse.values[i];
  }
  return query;
}

std::vector<RankedDoc> cosine_rank(const QueryVector& query, std::span<const SparseVector> docs,
                                   std::span<const std::string> doc_ids) {
  if (docs.size() != doc_ids.size()) {
    throw DomainError("cosine_rank requires one doc_id per document vector");
  }
  double query_norm_sq = 0.0;
  for (const double v : query.dense) query_norm_sq += v * v;
  if (query_norm_sq <= 0.0) throw DomainError("cosine_rank requires a non-zero query vector");
  const double query_norm = std::sqrt(query_norm_sq);

  std::vector<RankedDoc> ranked;
  ranked.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const double doc_norm = docs[i].l2_norm();
    double score = 0.0;
    if (doc_norm > 0.0) score = docs[i].dot_dense(query.dense) / (query_norm * doc_norm);
    ranked.push_back(RankedDoc{doc_ids[i], score, 0});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedDoc& a, const RankedDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
  return ranked;
}

std::vector<RankedDoc> filtered_topk(std::span<const RankedDoc> ranked,
                                     const std::set<std::string>& relevant_keys, std::size_t k) {
  if (k < 1) throw DomainError("filtered_topk requires k >= 1");
  std::vector<RankedDoc> top;
  for (const auto& entry : ranked) {
    if (top.size() == k) break;
    if (!relevant_keys.contains(entry.doc_id)) continue;
    RankedDoc kept = entry;
    kept.rank = top.size() + 1;
    top.push_back(std::move(kept));
  }
  return top;
}

OverlapReport overlap_report(std::span<const RankedDoc> topk_a,
                             std::span<const RankedDoc> topk_b, std::string method,
                             std::size_t k) {
  OverlapReport report;
  report.method = std::move(method);
  report.k = k;
  report.a_list.assign(topk_a.begin(), topk_a.end());
  report.b_list.assign(topk_b.begin(), topk_b.end());

  std::set<std::string> keys_a;
  for (const auto& entry : topk_a) keys_a.insert(entry.doc_id);
  std::set<std::string> keys_b;
  for (const auto& entry : topk_b) keys_b.insert(entry.doc_id);
  for (const auto& key : keys_a) {
    if (keys_b.contains(key)) ++report.both;
    else ++report.a_only;
  }
  for (const auto& key : keys_b) {
    if (!keys_a.contains(key)) ++report.b_only;
  }
  return report;
}

std::string overlap_report_to_json(const OverlapReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["k"] = report.k;
  j["a_only"] = report.a_only;
  j["b_only"] = report.b_only;
  j["both"] = report.both;
  auto list_json = [](const std::vector<RankedDoc>& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& entry : list) {
      nlohmann::ordered_json e;
      e["doc_id"] = entry.doc_id;
      e["score"] = entry.score;
      e["rank"] = entry.rank;
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["a_list"] = list_json(report.a_list);
  j["b_list"] = list_json(report.b_list);
  return j.dump(2) + "\n";
}

}  // namespace reldiag

#include "reldiag/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "reldiag/errors.hpp"
#include "reldiag/stopwords.hpp"

namespace reldiag {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (alnum) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      if (current.size() >= 2) tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (current.size() >= 2) tokens.push_back(std::move(current));
  return tokens;
}

double SparseVector::l2_norm() const {
  double sum = 0.0;
  for (const double v : values) sum += v * v;
  return std::sqrt(sum);
}

double SparseVector::dot_dense(std::span<const double> dense) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) sum += values[i] * dense[indices[i]];
  return sum;
}

VectorizerModel VectorizerModel::fit(std::span<const std::string> docs, const TfidfConfig& config) {
  if (docs.empty()) throw DomainError("cannot fit vectorizer on an empty document set");

  // document frequencies; std::map keeps terms lexicographic
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }

  const auto n_docs = docs.size();
  const auto max_count = static_cast<std::size_t>(
      std::floor(config.max_df * static_cast<double>(n_docs)));

  VectorizerModel model;
  model.config_ = config;
  for (const auto& [term, count] : df) {
    if (count < config.min_df || count > max_count) continue;
    if (config.stopwords == StopwordSet::English318V1 && is_english_stopword(term)) continue;
    model.index_.emplace(term, static_cast<std::uint32_t>(model.terms_.size()));
    model.terms_.push_back(term);
    model.idf_.push_back(std::log((1.0 + static_cast<double>(n_docs)) /
                                  (1.0 + static_cast<double>(count))) + 1.0);
  }
  if (model.terms_.empty()) {
    throw DomainError("vectorizer fit produced an empty vocabulary (min_df=" +
                      std::to_string(config.min_df) + ", max_df=" + std::to_string(config.max_df) +
                      ", N=" + std::to_string(n_docs) + ")");
  }
  return model;
}

std::int64_t VectorizerModel::term_index(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

SparseVector VectorizerModel::transform(std::string_view text) const {
  std::map<std::uint32_t, double> weights;  // ordered -> strictly increasing indices
  for (const auto& token : tokenize(text)) {
    auto it = index_.find(token);
    if (it != index_.end()) weights[it->second] += idf_[it->second];
  }

  SparseVector vec;
  vec.indices.reserve(weights.size());
  vec.values.reserve(weights.size());
  double norm_sq = 0.0;
  for (const auto& [idx, w] : weights) {
    vec.indices.push_back(idx);
    vec.values.push_back(w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& v : vec.values) v *= inv;
  }
  return vec;
}

std::vector<SparseVector> VectorizerModel::transform_all(std::span<const std::string> docs) const {
  std::vector<SparseVector> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(transform(doc));
  return out;
}

std::vector<double> mean_vector(std::span<const SparseVector> vectors, std::size_t dimension) {
  if (vectors.empty()) throw DomainError("mean_vector requires at least one vector");
  std::vector<double> mean(dimension, 0.0);
  for (const auto& vec : vectors) {
    for (std::size_t i = 0; i < vec.indices.size(); ++i) mean[vec.indices[i]] += vec.values[i];
  }
  const double inv_n = 1.0 / static_cast<double>(vectors.size());
  for (auto& v : mean) v *= inv_n;
  return mean;
}

}  // namespace reldiag

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reldiag {

// Lowercased maximal runs of >= 2 ASCII alphanumeric characters.
// Stopwords are kept here; the vectorizer removes them at fit time.
std::vector<std::string> tokenize(std::string_view text);

enum class StopwordSet { None, English318V1 };

struct TfidfConfig {
  std::size_t min_df = 5;   // absolute document count
  double max_df = 0.95;     // corpus fraction
  StopwordSet stopwords = StopwordSet::English318V1;

  static constexpr const char* token_pattern_id = "ascii-alnum-2+";
};

// Document vector in the fitted term space. Indices strictly increasing.
// An all-out-of-vocabulary document transforms to an empty (zero) vector.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  bool empty() const { return indices.empty(); }
  std::size_t nnz() const { return indices.size(); }
  double l2_norm() const;
  double dot_dense(std::span<const double> dense) const;
};

class VectorizerModel {
 public:
  // Vocabulary = terms with min_df <= df <= floor(max_df * N), minus
  // stopwords, ordered lexicographically. idf(t) = ln((1+N)/(1+df(t))) + 1.
  static VectorizerModel fit(std::span<const std::string> docs, const TfidfConfig& config);

  // Raw term counts weighted by idf, then L2-normalized.
  SparseVector transform(std::string_view text) const;
  std::vector<SparseVector> transform_all(std::span<const std::string> docs) const;

  std::size_t vocabulary_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  const TfidfConfig& config() const { return config_; }

  // -1 if the term is not in the vocabulary.
  std::int64_t term_index(std::string_view term) const;

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
  TfidfConfig config_;
};

// Per-term arithmetic mean over a set of document vectors (absent terms
// count as zero). Errors on an empty set.
std::vector<double> mean_vector(std::span<const SparseVector> vectors, std::size_t dimension);

}  // namespace reldiag

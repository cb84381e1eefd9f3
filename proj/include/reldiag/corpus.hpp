#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace reldiag {

struct Document {
  std::string doc_id;
  std::string title;
  std::string abstract_text;
  std::set<std::string> topics;
  std::optional<int> year;
  std::optional<std::int64_t> citations;
};

struct Provenance {
  std::string source_path;
  std::uint64_t config_hash = 0;
};

// Immutable after ingestion; iteration order is insertion order after dedup.
class Corpus {
 public:
  Corpus() = default;

  // Returns false (and leaves the corpus unchanged) on duplicate doc_id.
  bool add(Document doc);

  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  const Document* find(const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const { return index_.count(doc_id) > 0; }

  Provenance provenance;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Jsonl, Csv };

struct IngestRecordError {
  std::size_t line;  // 1-based line or CSV row number
  std::string message;
};

struct IngestReport {
  std::size_t records_seen = 0;
  std::size_t records_kept = 0;
  std::size_t dropped_empty_id = 0;
  std::size_t dropped_empty_abstract = 0;
  std::size_t dropped_duplicate = 0;
  std::vector<IngestRecordError> malformed;
};

// Abstract cleaning: Unicode NFC normalization, control-character strip,
// whitespace-run collapse, trim.
std::string clean_text(const std::string& raw);

// Reads documents from `path`, cleaning abstracts and dropping records with
// empty doc_id / empty cleaned abstract (counted in the report). Duplicate
// doc_ids keep the first occurrence. Malformed records are collected into
// the report; only a file where every record fails is an error.
Corpus ingest_corpus(const std::string& path, CorpusFormat format, IngestReport& report);

std::string ingest_report_to_json(const IngestReport& report);

// Canonical JSONL serialization (one document per line, sorted keys, LF).
void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
std::string corpus_to_jsonl(const Corpus& corpus);

struct SplitSpec {
  double train_fraction = 0.8;
  std::string stratify_key = "label";
  std::uint64_t seed = 0;
};

struct SplitResult {
  Corpus train;
  Corpus test;
};

// Stratified split: per class, round(n_class * train_fraction) documents go
// to train, chosen uniformly at random; document order within each side
// follows the input corpus. Every document must have a label.
SplitResult stratified_split(const Corpus& corpus,
                             const std::map<std::string, int>& labels,
                             const SplitSpec& spec);

}  // namespace reldiag

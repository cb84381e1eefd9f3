#include "reldiag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "json.hpp"

#include "reldiag/errors.hpp"
#include "reldiag/rng.hpp"

using nlohmann::json;

namespace reldiag {

bool Corpus::add(Document doc) {
  auto [it, inserted] = index_.try_emplace(doc.doc_id, docs_.size());
  if (!inserted) return false;
  docs_.push_back(std::move(doc));
  return true;
}

const Document* Corpus::find(const std::string& doc_id) const {
  auto it = index_.find(doc_id);
  return it == index_.end() ? nullptr : &docs_[it->second];
}

namespace {

std::string nfc_normalize(const std::string& utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return utf8;
  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(utf8);
  const icu::UnicodeString normalized = nfc->normalize(input, status);
  if (U_FAILURE(status)) return utf8;
  std::string result;
  normalized.toUTF8String(result);
  return result;
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_control(unsigned char c) { return c < 0x20 || c == 0x7f; }

}  // namespace

std::string clean_text(const std::string& raw) {
  const std::string nfc = nfc_normalize(raw);
  std::string out;
  out.reserve(nfc.size());
  bool pending_space = false;
  for (const char ch : nfc) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_space(c)) {
      pending_space = true;
      continue;
    }
    if (is_control(c)) continue;
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

namespace {

constexpr std::uint64_t kIngestConfigVersion = 1;  // cleaning + dedup policy version

std::uint64_t ingest_config_hash(CorpusFormat format) {
  return derive_stream(kIngestConfigVersion, format == CorpusFormat::Jsonl ? 1 : 2);
}

struct RawRecord {
  Document doc;
  std::size_t line = 0;
};

void finish_record(Document doc, std::size_t line, Corpus& corpus, IngestReport& report) {
  ++report.records_seen;
  doc.abstract_text = clean_text(doc.abstract_text);
  doc.title = clean_text(doc.title);
  if (doc.doc_id.empty()) {
    ++report.dropped_empty_id;
    return;
  }
  if (doc.abstract_text.empty()) {
    ++report.dropped_empty_abstract;
    return;
  }
  if (doc.citations && *doc.citations < 0) {
    report.malformed.push_back({line, "negative citations for doc_id '" + doc.doc_id + "'"});
    return;
  }
  if (!corpus.add(std::move(doc))) ++report.dropped_duplicate;
  else ++report.records_kept;
}

void ingest_jsonl(std::istream& in, Corpus& corpus, IngestReport& report) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++report.records_seen;
      report.malformed.push_back({line_no, "invalid JSON object"});
      continue;
    }
    if (!j.contains("doc_id") || !j["doc_id"].is_string() || !j.contains("abstract") ||
        !j["abstract"].is_string()) {
      ++report.records_seen;
      report.malformed.push_back({line_no, "missing required string fields doc_id/abstract"});
      continue;
    }
    Document doc;
    doc.doc_id = j["doc_id"].get<std::string>();
    doc.abstract_text = j["abstract"].get<std::string>();
    if (j.contains("title") && j["title"].is_string()) doc.title = j["title"].get<std::string>();
    if (j.contains("topics") && j["topics"].is_array()) {
      for (const auto& t : j["topics"]) {
        if (t.is_string()) doc.topics.insert(t.get<std::string>());
      }
    }
    if (j.contains("year") && j["year"].is_number_integer()) doc.year = j["year"].get<int>();
    if (j.contains("citations") && j["citations"].is_number_integer()) {
      doc.citations = j["citations"].get<std::int64_t>();
    }
    finish_record(std::move(doc), line_no, corpus, report);
  }
}

// Minimal RFC 4180 CSV reader: quoted fields, embedded commas/quotes/newlines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at EOF. `row_line` is the line the row started on.
  bool next_row(std::vector<std::string>& fields, std::size_t& row_line) {
    fields.clear();
    int c = in_.peek();
    if (c == EOF) return false;
    row_line = line_;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    while ((c = in_.get()) != EOF) {
      any = true;
      if (c == '\n') ++line_;
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"') {
        in_quotes = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r') {
        // swallowed; LF (or EOF) terminates the row
      } else if (c == '\n') {
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    if (any) {
      fields.push_back(std::move(field));
      return true;
    }
    return false;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

std::set<std::string> parse_topics_cell(const std::string& cell) {
  std::set<std::string> topics;
  std::string item;
  std::istringstream ss(cell);
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) topics.insert(item);
  }
  return topics;
}

void ingest_csv(std::istream& in, Corpus& corpus, IngestReport& report) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::size_t row_line = 0;
  if (!reader.next_row(fields, row_line)) return;  // empty file: 0 documents

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
  if (!col.count("doc_id") || !col.count("abstract")) {
    throw IoError("CSV header must name at least doc_id and abstract columns");
  }

  auto cell = [&](const char* name) -> const std::string* {
    auto it = col.find(name);
    if (it == col.end() || it->second >= fields.size()) return nullptr;
    return &fields[it->second];
  };

  while (reader.next_row(fields, row_line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    Document doc;
    if (const auto* s = cell("doc_id")) doc.doc_id = *s;
    if (const auto* s = cell("abstract")) doc.abstract_text = *s;
    if (const auto* s = cell("title")) doc.title = *s;
    if (const auto* s = cell("topics")) doc.topics = parse_topics_cell(*s);
    if (const auto* s = cell("year"); s && !s->empty()) {
      try {
        doc.year = std::stoi(*s);
      } catch (const std::exception&) {
        ++report.records_seen;
        report.malformed.push_back({row_line, "non-integer year '" + *s + "'"});
        continue;
      }
    }
    if (const auto* s = cell("citations"); s && !s->empty()) {
      try {
        doc.citations = std::stoll(*s);
      } catch (const std::exception&) {
        ++report.records_seen;
        report.malformed.push_back({row_line, "non-integer citations '" + *s + "'"});
        continue;
      }
    }
    finish_record(std::move(doc), row_line, corpus, report);
  }
}

}  // namespace

Corpus ingest_corpus(const std::string& path, CorpusFormat format, IngestReport& report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  Corpus corpus;
  corpus.provenance.source_path = path;
  corpus.provenance.config_hash = ingest_config_hash(format);

  if (format == CorpusFormat::Jsonl) ingest_jsonl(in, corpus, report);
  else ingest_csv(in, corpus, report);

  if (report.records_seen > 0 && corpus.empty() &&
      report.malformed.size() == report.records_seen) {
    throw IoError("all " + std::to_string(report.records_seen) + " records in " + path +
                  " are malformed");
  }
  return corpus;
}

namespace {

json document_to_json(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["title"] = doc.title;
  j["abstract"] = doc.abstract_text;
  j["topics"] = doc.topics;
  if (doc.year) j["year"] = *doc.year;
  if (doc.citations) j["citations"] = *doc.citations;
  return j;
}

}  // namespace

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents()) {
    out += document_to_json(doc).dump();
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  out << corpus_to_jsonl(corpus);
  if (!out) throw IoError("write failed: " + path);
}

SplitResult stratified_split(const Corpus& corpus, const std::map<std::string, int>& labels,
                             const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw DomainError("train_fraction must lie strictly between 0 and 1");
  }

  // class label -> document indices, in corpus order
  std::map<int, std::vector<std::size_t>> by_class;
  const auto& docs = corpus.documents();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto it = labels.find(docs[i].doc_id);
    if (it == labels.end()) {
      throw DomainError("missing label for doc_id '" + docs[i].doc_id + "'");
    }
    by_class[it->second].push_back(i);
  }

  std::vector<bool> in_train(docs.size(), false);
  Rng rng(spec.seed);
  for (auto& [cls, indices] : by_class) {
    const auto n_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(indices.size()) * spec.train_fraction));
    rng.shuffle(indices);
    for (std::size_t i = 0; i < n_train; ++i) in_train[indices[i]] = true;
  }

  SplitResult result;
  result.train.provenance = corpus.provenance;
  result.test.provenance = corpus.provenance;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    (in_train[i] ? result.train : result.test).add(docs[i]);
  }
  return result;
}

std::string ingest_report_to_json(const IngestReport& report) {
  nlohmann::ordered_json j;
  j["records_seen"] = report.records_seen;
  j["records_kept"] = report.records_kept;
  j["dropped_empty_id"] = report.dropped_empty_id;
  j["dropped_empty_abstract"] = report.dropped_empty_abstract;
  j["dropped_duplicate"] = report.dropped_duplicate;
  auto& malformed = j["malformed"] = nlohmann::ordered_json::array();
  for (const auto& error : report.malformed) {
    malformed.push_back({{"line", error.line}, {"message", error.message}});
  }
  return j.dump(2) + "\n";
}

}  // namespace reldiag

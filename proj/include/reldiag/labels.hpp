#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reldiag {

enum class Label { Relevant, NonRelevant };

// Parsed labels plus the two audit outcomes; only the first two enter pairing.
enum class LabelOutcome { Relevant, NonRelevant, Unparseable, Failed };

std::string_view outcome_name(LabelOutcome outcome);
std::optional<LabelOutcome> outcome_from_name(std::string_view name);

struct LabelRecord {
  std::string doc_id;
  std::string topic;
  std::string model_id;
  LabelOutcome outcome = LabelOutcome::Unparseable;
  std::string justification;
  std::optional<std::string> contribution_type;
  std::string raw_response;
};

// One model's labels; (doc_id, topic) keys must be unique.
struct LabelSet {
  std::string model_id;
  std::vector<LabelRecord> records;
};

struct LabeledPair {
  std::string doc_id;
  std::string topic;
  Label label_a = Label::NonRelevant;
  Label label_b = Label::NonRelevant;
};

struct PairedLabelSet {
  std::string model_a;
  std::string model_b;
  std::vector<LabeledPair> pairs;  // sorted by (topic, doc_id)
  std::size_t unmatched_a = 0;     // parsed records without a partner
  std::size_t unmatched_b = 0;
  std::size_t excluded_a = 0;  // unparseable/failed records dropped before joining
  std::size_t excluded_b = 0;
};

// Inner join on (doc_id, topic). Duplicate keys within one set raise IntegrityError.
PairedLabelSet pair_labels(const LabelSet& set_a, const LabelSet& set_b);

std::string label_record_to_json(const LabelRecord& record);

// Reads label JSONL; all records must share one model_id.
LabelSet load_label_jsonl(const std::string& path);
void write_label_jsonl(const std::string& path, const LabelSet& set);

std::string paired_set_to_json(const PairedLabelSet& paired);
PairedLabelSet load_paired_json(const std::string& path);

}  // namespace reldiag

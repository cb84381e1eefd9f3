#include "reldiag/labels.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "reldiag/errors.hpp"

namespace reldiag {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view label_name(Label label) {
  return label == Label::Relevant ? "relevant" : "non_relevant";
}

Label label_from_name(std::string_view name, const std::string& context) {
  if (name == "relevant") return Label::Relevant;
  if (name == "non_relevant") return Label::NonRelevant;
  throw IntegrityError("invalid label \"" + std::string(name) + "\" in " + context);
}

json record_to_json_value(const LabelRecord& record) {
  json j;
  j["doc_id"] = record.doc_id;
  j["topic"] = record.topic;
  j["model_id"] = record.model_id;
  j["label"] = std::string(outcome_name(record.outcome));
  j["justification"] = record.justification;
  j["contribution_type"] =
      record.contribution_type ? json(*record.contribution_type) : json(nullptr);
  j["raw_response"] = record.raw_response;
  return j;
}

}  // namespace

std::string_view outcome_name(LabelOutcome outcome) {
  switch (outcome) {
    case LabelOutcome::Relevant: return "relevant";
    case LabelOutcome::NonRelevant: return "non_relevant";
    case LabelOutcome::Unparseable: return "unparseable";
    case LabelOutcome::Failed: return "failed";
  }
  return "unparseable";
}

std::optional<LabelOutcome> outcome_from_name(std::string_view name) {
  if (name == "relevant") return LabelOutcome::Relevant;
  if (name == "non_relevant") return LabelOutcome::NonRelevant;
  if (name == "unparseable") return LabelOutcome::Unparseable;
  if (name == "failed") return LabelOutcome::Failed;
  return std::nullopt;
}

PairedLabelSet pair_labels(const LabelSet& set_a, const LabelSet& set_b) {
  using Key = std::pair<std::string, std::string>;  // (topic, doc_id)

  auto collect = [](const LabelSet& set, std::size_t& excluded, const char* side) {
    std::map<Key, Label> parsed;
    std::set<Key> seen;
    for (const auto& record : set.records) {
      Key key{record.topic, record.doc_id};
      if (!seen.insert(key).second) {
        throw IntegrityError("duplicate label key (doc_id=" + record.doc_id + ", topic=" +
                             record.topic + ") in set " + side);
      }
      switch (record.outcome) {
        case LabelOutcome::Relevant: parsed.emplace(key, Label::Relevant); break;
        case LabelOutcome::NonRelevant: parsed.emplace(key, Label::NonRelevant); break;
        default: ++excluded; break;
      }
    }
    return parsed;
  };

  PairedLabelSet result;
  result.model_a = set_a.model_id;
  result.model_b = set_b.model_id;
  const auto parsed_a = collect(set_a, result.excluded_a, "a");
  const auto parsed_b = collect(set_b, result.excluded_b, "b");

  for (const auto& [key, label_a] : parsed_a) {
    auto it = parsed_b.find(key);
    if (it == parsed_b.end()) {
      ++result.unmatched_a;
      continue;
    }
    LabeledPair pair;
    pair.topic = key.first;
    pair.doc_id = key.second;
    pair.label_a = label_a;
    pair.label_b = it->second;
    result.pairs.push_back(std::move(pair));
  }
  for (const auto& [key, label_b] : parsed_b) {
    if (!parsed_a.contains(key)) ++result.unmatched_b;
  }
  return result;  // map iteration already sorted by (topic, doc_id)
}

std::string label_record_to_json(const LabelRecord& record) {
  return record_to_json_value(record).dump();
}

LabelSet load_label_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);

  LabelSet set;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> model_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": invalid label JSON");
    }
    LabelRecord record;
    try {
      record.doc_id = j.at("doc_id").get<std::string>();
      record.topic = j.at("topic").get<std::string>();
      record.model_id = j.at("model_id").get<std::string>();
      const auto outcome = outcome_from_name(j.at("label").get<std::string>());
      if (!outcome) throw IoError("unknown label value");
      record.outcome = *outcome;
      record.justification = j.value("justification", std::string{});
      if (j.contains("contribution_type") && !j["contribution_type"].is_null()) {
        record.contribution_type = j["contribution_type"].get<std::string>();
      }
      record.raw_response = j.value("raw_response", std::string{});
    } catch (const json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    model_ids.insert(record.model_id);
    set.records.push_back(std::move(record));
  }
  if (model_ids.size() > 1) {
    std::ostringstream ids;
    for (const auto& id : model_ids) ids << ' ' << id;
    throw IntegrityError("label file " + path + " mixes model_ids:" + ids.str());
  }
  if (!model_ids.empty()) set.model_id = *model_ids.begin();
  return set;
}

void write_label_jsonl(const std::string& path, const LabelSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write label file: " + path);
  for (const auto& record : set.records) out << label_record_to_json(record) << '\n';
}

std::string paired_set_to_json(const PairedLabelSet& paired) {
  ordered_json j;
  j["model_a"] = paired.model_a;
  j["model_b"] = paired.model_b;
  j["n_pairs"] = paired.pairs.size();
  j["unmatched_a"] = paired.unmatched_a;
  j["unmatched_b"] = paired.unmatched_b;
  j["excluded_a"] = paired.excluded_a;
  j["excluded_b"] = paired.excluded_b;
  auto& pairs = j["pairs"] = ordered_json::array();
  for (const auto& pair : paired.pairs) {
    ordered_json p;
    p["doc_id"] = pair.doc_id;
    p["topic"] = pair.topic;
    p["label_a"] = std::string(label_name(pair.label_a));
    p["label_b"] = std::string(label_name(pair.label_b));
    pairs.push_back(std::move(p));
  }
  return j.dump(2) + "\n";
}

PairedLabelSet load_paired_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open paired label file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid paired label JSON: " + e.what());
  }
  PairedLabelSet paired;
  try {
    paired.model_a = j.at("model_a").get<std::string>();
    paired.model_b = j.at("model_b").get<std::string>();
    paired.unmatched_a = j.value("unmatched_a", std::size_t{0});
    paired.unmatched_b = j.value("unmatched_b", std::size_t{0});
    paired.excluded_a = j.value("excluded_a", std::size_t{0});
    paired.excluded_b = j.value("excluded_b", std::size_t{0});
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : j.at("pairs")) {
      LabeledPair pair;
      pair.doc_id = p.at("doc_id").get<std::string>();
      pair.topic = p.at("topic").get<std::string>();
      pair.label_a = label_from_name(p.at("label_a").get<std::string>(), path);
      pair.label_b = label_from_name(p.at("label_b").get<std::string>(), path);
      if (!seen.emplace(pair.topic, pair.doc_id).second) {
        throw IntegrityError("duplicate pair key (doc_id=" + pair.doc_id + ", topic=" +
                             pair.topic + ") in " + path);
      }
      paired.pairs.push_back(std::move(pair));
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid paired label JSON: " + e.what());
  }
  std::sort(paired.pairs.begin(), paired.pairs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.topic, a.doc_id) < std::tie(b.topic, b.doc_id);
  });
  return paired;
}

}  // namespace reldiag

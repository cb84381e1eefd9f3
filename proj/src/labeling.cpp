#include "reldiag/labeling.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "reldiag/errors.hpp"

namespace reldiag {

namespace {

using nlohmann::json;

constexpr const char* kPromptVersion = "prompt-v1";
constexpr const char* kPromptSystem =
    "You are an expert research analyst screening scientific abstracts for topical relevance. "
    "Decide whether the abstract makes a substantive contribution to the topic described by the "
    "user. Start your answer with the single word Relevant or Non-Relevant, then give a short "
    "justification. If the abstract is relevant, you may end with a line of the form "
    "\"Contribution type: <type>\".";
constexpr const char* kPromptUser =
    "Topic: {topic_name}\n"
    "Topic targets: {topic_targets}\n"
    "\n"
    "Abstract:\n"
    "{abstract}\n"
    "\n"
    "Does this abstract make a substantive contribution to the topic? Answer Relevant or "
    "Non-Relevant and justify briefly.";

std::string render_text(const std::string& text,
                        const std::vector<std::pair<std::string, const std::string*>>& bindings) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const std::size_t close = text.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const std::string name = text.substr(open + 1, close - open - 1);
    const auto it = std::find_if(bindings.begin(), bindings.end(),
                                 [&](const auto& b) { return b.first == name; });
    if (it == bindings.end()) {
      throw TemplateError("unbound placeholder {" + name + "} in prompt template");
    }
    out.append(*it->second);
    pos = close + 1;
  }
  return out;
}

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

bool matches_lower(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (ascii_lower(text[pos + i]) != word[i]) return false;
  }
  return true;
}

// Skips whitespace and simple label separators, including a UTF-8 em-dash.
std::size_t skip_separators(std::string_view text, std::size_t pos) {
  while (pos < text.size()) {
    const char c = text[pos];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '.' || c == ':' || c == ',' ||
        c == ';' || c == '-' || c == '*') {
      ++pos;
      continue;
    }
    if (pos + 3 <= text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
        static_cast<unsigned char>(text[pos + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[pos + 2]) == 0x93 ||
         static_cast<unsigned char>(text[pos + 2]) == 0x94)) {
      pos += 3;
      continue;
    }
    break;
  }
  return pos;
}

std::string trim_copy(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

}  // namespace

PromptTemplate default_prompt_template() {
  return PromptTemplate{kPromptVersion, kPromptSystem, kPromptUser};
}

PromptTemplate load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt template: " + path);
  json j;
  try {
    in >> j;
    PromptTemplate tmpl;
    tmpl.version = j.at("version").get<std::string>();
    tmpl.system_text = j.at("system").get<std::string>();
    tmpl.user_text = j.at("user").get<std::string>();
    return tmpl;
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid prompt template: " + e.what());
  }
}

RenderedPrompt build_prompt(const Document& doc, const TopicSpec& topic,
                            const PromptTemplate& tmpl) {
  if (tmpl.user_text.find("{abstract}") == std::string::npos) {
    throw TemplateError("prompt template user text must reference {abstract}");
  }
  const std::vector<std::pair<std::string, const std::string*>> bindings{
      {"abstract", &doc.abstract_text},
      {"topic_name", &topic.name},
      {"topic_targets", &topic.targets},
  };
  RenderedPrompt rendered;
  rendered.system_text = render_text(tmpl.system_text, bindings);
  rendered.user_text = render_text(tmpl.user_text, bindings);
  if (rendered.system_text.empty() || rendered.user_text.empty()) {
    throw TemplateError("prompt template rendered an empty message");
  }
  return rendered;
}

void GenerationConfig::validate() const {
  if (max_new_tokens < 1) {
    throw DomainError("generation config requires max_new_tokens >= 1");
  }
  if (temperature < 0.0) {
    throw DomainError("generation config requires temperature >= 0");
  }
  if (!sampling_enabled && temperature != 0.0) {
    throw DomainError("generation config requires temperature = 0 when sampling is disabled");
  }
}

ParsedLabel parse_response(std::string_view raw) {
  constexpr std::string_view kToken = "relevant";
  ParsedLabel parsed;

  std::size_t search = 0;
  while (search < raw.size()) {
    std::size_t match = std::string_view::npos;
    for (std::size_t i = search; i + kToken.size() <= raw.size(); ++i) {
      if (matches_lower(raw, i, kToken)) {
        match = i;
        break;
      }
    }
    if (match == std::string_view::npos) break;

    const std::size_t end = match + kToken.size();
    const bool boundary_after = end == raw.size() || !is_ascii_alpha(raw[end]);
    if (!boundary_after) {
      search = match + 1;
      continue;
    }

    // bound "non" prefix: "non-relevant", "non relevant", "non_relevant", "nonrelevant"
    bool negated = false;
    if (match >= 4 && matches_lower(raw, match - 4, "non") &&
        (raw[match - 1] == '-' || raw[match - 1] == '_' || raw[match - 1] == ' ') &&
        (match == 4 || !is_ascii_alpha(raw[match - 5]))) {
      negated = true;
    } else if (match >= 3 && matches_lower(raw, match - 3, "non") &&
               (match == 3 || !is_ascii_alpha(raw[match - 4]))) {
      negated = true;
    }
    if (!negated && match != 0 && is_ascii_alpha(raw[match - 1])) {
      search = match + 1;  // embedded in another word, e.g. "irrelevant"
      continue;
    }
    parsed.outcome = negated ? LabelOutcome::NonRelevant : LabelOutcome::Relevant;

    std::string_view rest = raw.substr(skip_separators(raw, end));
    // pull out a "contribution type:" field if present
    for (std::size_t i = 0; i + 17 <= rest.size(); ++i) {
      if (!matches_lower(rest, i, "contribution type")) continue;
      std::size_t colon = i + 17;
      while (colon < rest.size() && (rest[colon] == ' ' || rest[colon] == '\t')) ++colon;
      if (colon >= rest.size() || rest[colon] != ':') continue;
      std::size_t value_end = rest.find('\n', colon);
      if (value_end == std::string_view::npos) value_end = rest.size();
      const std::string value = trim_copy(rest.substr(colon + 1, value_end - colon - 1));
      if (!value.empty()) parsed.contribution_type = value;
      std::string head = trim_copy(rest.substr(0, i));
      std::string tail =
          value_end < rest.size() ? trim_copy(rest.substr(value_end + 1)) : std::string{};
      if (!tail.empty()) head += head.empty() ? tail : "\n" + tail;
      parsed.justification = std::move(head);
      return parsed;
    }
    parsed.justification = trim_copy(rest);
    return parsed;
  }

  parsed.outcome = LabelOutcome::Unparseable;
  return parsed;
}

HttpChatBackend::HttpChatBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  if (!descriptor_.auth_token_env.empty()) {
    if (const char* token = std::getenv(descriptor_.auth_token_env.c_str())) {
      auth_token_ = token;
    }
  }
}

ChatResponse HttpChatBackend::complete(const RenderedPrompt& prompt,
                                       const GenerationConfig& config) {
  json body;
  body["model"] = descriptor_.model;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", prompt.system_text}},
      json{{"role", "user"}, {"content", prompt.user_text}},
  });
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_new_tokens;

  // one client per call keeps complete() safe under concurrency
  httplib::Client client(descriptor_.base_url);
  const auto timeout = std::chrono::duration<double>(descriptor_.timeout_seconds);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

  const auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");

  ChatResponse response;
  if (!res) {
    response.status = ChatResponse::Status::TransientError;
    response.error = "http error: " + httplib::to_string(res.error());
    return response;
  }
  if (res->status == 429 || res->status >= 500) {
    response.status = ChatResponse::Status::TransientError;
    response.error = "http status " + std::to_string(res->status);
    return response;
  }
  if (res->status != 200) {
    response.status = ChatResponse::Status::PermanentError;
    response.error = "http status " + std::to_string(res->status) + ": " + res->body;
    return response;
  }
  const json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
      !parsed["choices"][0].contains("message") ||
      !parsed["choices"][0]["message"].contains("content") ||
      !parsed["choices"][0]["message"]["content"].is_string()) {
    response.status = ChatResponse::Status::PermanentError;
    response.error = "malformed completion response body";
    return response;
  }
  response.status = ChatResponse::Status::Ok;
  response.text = parsed["choices"][0]["message"]["content"].get<std::string>();
  return response;
}

ResumeStore::ResumeStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw IoError(path_ + ":" + std::to_string(line_no) + ": invalid resume store line");
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
        throw IoError(path_ + ":" + std::to_string(line_no) + ": " + e.what());
      }
      keys_.emplace(record.doc_id, record.topic, record.model_id);
      records_.push_back(std::move(record));
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw IoError("cannot open resume store for append: " + path_);
}

bool ResumeStore::contains(const std::string& doc_id, const std::string& topic,
                           const std::string& model_id) const {
  std::lock_guard lock(mutex_);
  return keys_.contains(Key{doc_id, topic, model_id});
}

std::optional<LabelRecord> ResumeStore::find(const std::string& doc_id, const std::string& topic,
                                             const std::string& model_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& record : records_) {
    if (record.doc_id == doc_id && record.topic == topic && record.model_id == model_id) {
      return record;
    }
  }
  return std::nullopt;
}

void ResumeStore::append(const LabelRecord& record) {
  std::lock_guard lock(mutex_);
  if (!keys_.emplace(record.doc_id, record.topic, record.model_id).second) {
    throw IntegrityError("resume store already holds (doc_id=" + record.doc_id + ", topic=" +
                         record.topic + ", model_id=" + record.model_id + ")");
  }
  out_ << label_record_to_json(record) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed to append to resume store: " + path_);
  records_.push_back(record);
}

std::size_t ResumeStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

LabelSet label_corpus(const Corpus& corpus, const TopicSpec& topic, ChatBackend& backend,
                      const PromptTemplate& tmpl, const GenerationConfig& config,
                      unsigned concurrency_limit, ResumeStore& store, const RetryPolicy& retry,
                      const ProgressFn& progress) {
  config.validate();
  if (concurrency_limit < 1) throw DomainError("label_corpus requires concurrency_limit >= 1");
  if (retry.max_attempts < 1) throw DomainError("retry policy requires max_attempts >= 1");
  const std::string model = backend.model_id();

  std::function<void(std::chrono::milliseconds)> sleeper = retry.sleeper;
  if (!sleeper) {
    sleeper = [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
  }

  std::vector<const Document*> pending;
  for (const auto& doc : corpus.documents()) {
    if (!store.contains(doc.doc_id, topic.id, model)) pending.push_back(&doc);
  }

  std::mutex progress_mutex;
  std::size_t completed = 0;

  auto label_one = [&](const Document& doc) {
    LabelRecord record;
    record.doc_id = doc.doc_id;
    record.topic = topic.id;
    record.model_id = model;

    const RenderedPrompt prompt = build_prompt(doc, topic, tmpl);
    ChatResponse response;
    for (std::size_t attempt = 1; attempt <= retry.max_attempts; ++attempt) {
      response = backend.complete(prompt, config);
      if (response.status != ChatResponse::Status::TransientError) break;
      if (attempt == retry.max_attempts) break;
      const double scale = std::pow(retry.factor, static_cast<double>(attempt - 1));
      const auto delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(static_cast<double>(retry.base_delay.count()) *
                                                 scale)));
      sleeper(delay);
    }

    if (response.status != ChatResponse::Status::Ok) {
      record.outcome = LabelOutcome::Failed;
      record.raw_response = response.error;
    } else {
      const ParsedLabel parsed = parse_response(response.text);
      record.outcome = parsed.outcome;
      record.justification = parsed.justification;
      record.contribution_type = parsed.contribution_type;
      record.raw_response = response.text;
    }
    store.append(record);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++completed, pending.size());
    }
  };

  if (!pending.empty()) {
    const unsigned workers =
        std::min<unsigned>(concurrency_limit, static_cast<unsigned>(pending.size()));
    if (workers == 1) {
      for (const Document* doc : pending) label_one(*doc);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          try {
            for (;;) {
              const std::size_t i = next.fetch_add(1);
              if (i >= pending.size()) break;
              label_one(*pending[i]);
            }
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(pending.size());  // stop remaining work
          }
        });
      }
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }
  }

  LabelSet set;
  set.model_id = model;
  for (const auto& doc : corpus.documents()) {
    auto record = store.find(doc.doc_id, topic.id, model);
    if (record) set.records.push_back(std::move(*record));
  }
  std::sort(set.records.begin(), set.records.end(),
            [](const LabelRecord& a, const LabelRecord& b) { return a.doc_id < b.doc_id; });
  return set;
}

}  // namespace reldiag

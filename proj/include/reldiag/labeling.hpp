#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "reldiag/corpus.hpp"
#include "reldiag/labels.hpp"

namespace reldiag {

struct TopicSpec {
  std::string id;       // join key stored in label records
  std::string name;     // bound to {topic_name}
  std::string targets;  // bound to {topic_targets}
};

struct PromptTemplate {
  std::string version;
  std::string system_text;
  std::string user_text;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

// Built-in template; canonical copy lives in assets/prompt_v1.json.
PromptTemplate default_prompt_template();
PromptTemplate load_prompt_template(const std::string& path);

// Substitutes {abstract}, {topic_name}, {topic_targets}. Unknown placeholders,
// a user text without {abstract}, or an empty rendered message raise TemplateError.
RenderedPrompt build_prompt(const Document& doc, const TopicSpec& topic,
                            const PromptTemplate& tmpl);

struct GenerationConfig {
  int max_new_tokens = 500;
  double temperature = 0.0;
  bool sampling_enabled = false;

  void validate() const;  // temperature must be 0 when sampling is disabled
};

struct ParsedLabel {
  LabelOutcome outcome = LabelOutcome::Unparseable;
  std::string justification;
  std::optional<std::string> contribution_type;
};

// Earliest standalone "relevant" token decides the label; a bound "non" prefix
// wins NonRelevant. No token at all yields Unparseable, never a silent default.
ParsedLabel parse_response(std::string_view raw);

struct ChatResponse {
  enum class Status { Ok, TransientError, PermanentError };
  Status status = Status::PermanentError;
  std::string text;   // assistant message when Ok
  std::string error;  // diagnostic otherwise
};

// Implementations must tolerate concurrent complete() calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const RenderedPrompt& prompt, const GenerationConfig& config) = 0;
  virtual std::string model_id() const = 0;
};

struct BackendDescriptor {
  std::string base_url;  // e.g. http://localhost:8000
  std::string model;
  std::string auth_token_env;  // env var holding a bearer token, empty = none
  double timeout_seconds = 120.0;
};

// JSON chat-completion client posting to /v1/chat/completions.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendDescriptor descriptor);
  ChatResponse complete(const RenderedPrompt& prompt, const GenerationConfig& config) override;
  std::string model_id() const override { return descriptor_.model; }

 private:
  BackendDescriptor descriptor_;
  std::string auth_token_;
};

struct RetryPolicy {
  std::size_t max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  std::function<void(std::chrono::milliseconds)> sleeper;  // default: sleep_for
};

// Append-only JSONL cache keyed by (doc_id, topic, model_id); safe for
// concurrent appends; existing records are loaded on construction.
class ResumeStore {
 public:
  explicit ResumeStore(std::string path);

  bool contains(const std::string& doc_id, const std::string& topic,
                const std::string& model_id) const;
  std::optional<LabelRecord> find(const std::string& doc_id, const std::string& topic,
                                  const std::string& model_id) const;
  void append(const LabelRecord& record);
  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  std::string path_;
  std::ofstream out_;
  std::vector<LabelRecord> records_;
  std::set<Key> keys_;
  mutable std::mutex mutex_;
};

// Called after each newly labeled document with (completed, total) for this run.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

// Labels every corpus document for one topic, skipping keys already in the
// store; transient backend errors are retried per policy, then recorded as
// Failed. Returns all records for this corpus+topic+model sorted by doc_id.
LabelSet label_corpus(const Corpus& corpus, const TopicSpec& topic, ChatBackend& backend,
                      const PromptTemplate& tmpl, const GenerationConfig& config,
                      unsigned concurrency_limit, ResumeStore& store,
                      const RetryPolicy& retry = {}, const ProgressFn& progress = {});

}  // namespace reldiag

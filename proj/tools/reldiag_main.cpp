#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reldiag/corpus.hpp"
#include "reldiag/errors.hpp"
#include "reldiag/labeling.hpp"
#include "reldiag/labels.hpp"
#include "reldiag/pipeline.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;

std::string json_scalar_to_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

void flatten_json_config(const json& node, std::vector<std::string>& parents,
                         std::vector<CLI::ConfigItem>& items) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (it.value().is_object()) {
      parents.push_back(it.key());
      flatten_json_config(it.value(), parents, items);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = it.key();
    if (it.value().is_array()) {
      for (const auto& element : it.value()) {
        item.inputs.push_back(json_scalar_to_string(element));
      }
    } else {
      item.inputs.push_back(json_scalar_to_string(it.value()));
    }
    items.push_back(std::move(item));
  }
}

// Accepts TOML (delegated to CLI11) or a JSON object keyed by subcommand.
class FlexibleConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string content((std::istreambuf_iterator<char>(input)),
                        std::istreambuf_iterator<char>());
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '{') {
      json root = json::parse(content, nullptr, false);
      if (root.is_discarded() || !root.is_object()) {
        throw CLI::ConfigError("config file is not a valid JSON object");
      }
      std::vector<CLI::ConfigItem> items;
      std::vector<std::string> parents;
      flatten_json_config(root, parents, items);
      return items;
    }
    std::istringstream rest(content);
    return CLI::ConfigTOML::from_config(rest);
  }
};

void write_file_or_throw(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw reldiag::IoError("cannot write " + path.string());
  out << content;
  if (!out) throw reldiag::IoError("failed writing " + path.string());
}

struct IngestArgs {
  std::string in;
  std::string out;
  std::string format = "jsonl";
};

int cmd_ingest(const IngestArgs& args) {
  reldiag::IngestReport report;
  const auto format =
      args.format == "csv" ? reldiag::CorpusFormat::Csv : reldiag::CorpusFormat::Jsonl;
  const reldiag::Corpus corpus = reldiag::ingest_corpus(args.in, format, report);
  reldiag::write_corpus_jsonl(corpus, args.out);
  std::cout << reldiag::ingest_report_to_json(report);
  std::cerr << "kept " << report.records_kept << " of " << report.records_seen
            << " records -> " << args.out << "\n";
  return kExitOk;
}

struct LabelArgs {
  std::string corpus;
  std::string out;
  std::string topic;
  std::string topic_name;
  std::string topic_targets;
  std::string backend_name;
  std::string base_url;
  std::string model;
  std::string auth_env;
  double timeout_seconds = 120.0;
  unsigned concurrency = 1;
  std::string prompt_template;
  int max_new_tokens = 500;
  double temperature = 0.0;
  bool sample = false;
  std::size_t max_attempts = 5;
  std::size_t retry_base_ms = 1000;
  double retry_factor = 2.0;
  bool no_topic_filter = false;
};

int cmd_label(const LabelArgs& args) {
  reldiag::IngestReport ingest_report;
  const reldiag::Corpus full =
      reldiag::ingest_corpus(args.corpus, reldiag::CorpusFormat::Jsonl, ingest_report);

  reldiag::Corpus corpus;
  if (args.no_topic_filter) {
    corpus = full;
  } else {
    for (const auto& doc : full.documents()) {
      if (doc.topics.contains(args.topic)) corpus.add(doc);
    }
    if (corpus.empty()) {
      throw reldiag::DomainError("no documents carry topic \"" + args.topic +
                                 "\"; pass --no-topic-filter to label the whole corpus");
    }
  }

  reldiag::TopicSpec topic;
  topic.id = args.topic;
  topic.name = args.topic_name.empty() ? args.topic : args.topic_name;
  topic.targets = args.topic_targets;

  const reldiag::PromptTemplate tmpl = args.prompt_template.empty()
                                           ? reldiag::default_prompt_template()
                                           : reldiag::load_prompt_template(args.prompt_template);

  reldiag::BackendDescriptor descriptor;
  descriptor.base_url = args.base_url;
  descriptor.model = args.model;
  descriptor.auth_token_env = args.auth_env;
  descriptor.timeout_seconds = args.timeout_seconds;
  reldiag::HttpChatBackend backend(descriptor);

  reldiag::GenerationConfig generation;
  generation.max_new_tokens = args.max_new_tokens;
  generation.temperature = args.temperature;
  generation.sampling_enabled = args.sample;

  reldiag::RetryPolicy retry;
  retry.max_attempts = args.max_attempts;
  retry.base_delay = std::chrono::milliseconds(args.retry_base_ms);
  retry.factor = args.retry_factor;

  reldiag::ResumeStore store(args.out);
  std::cerr << "labeling topic \"" << topic.id << "\": " << corpus.size()
            << " documents, " << store.size() << " records already in " << args.out << "\n";

  const auto progress = [](std::size_t done, std::size_t total) {
    std::fprintf(stderr, "labeled %zu/%zu\n", done, total);
  };
  const reldiag::LabelSet set = reldiag::label_corpus(corpus, topic, backend, tmpl, generation,
                                                      args.concurrency, store, retry, progress);

  std::size_t failed = 0;
  std::size_t unparseable = 0;
  for (const auto& record : set.records) {
    if (record.outcome == reldiag::LabelOutcome::Failed) ++failed;
    if (record.outcome == reldiag::LabelOutcome::Unparseable) ++unparseable;
  }
  std::cerr << set.records.size() << " records for model " << set.model_id << " (" << failed
            << " failed, " << unparseable << " unparseable)\n";
  return failed > 0 ? kExitBackend : kExitOk;
}

struct PairArgs {
  std::string a;
  std::string b;
  std::string out;
};

int cmd_pair(const PairArgs& args) {
  const reldiag::LabelSet set_a = reldiag::load_label_jsonl(args.a);
  const reldiag::LabelSet set_b = reldiag::load_label_jsonl(args.b);
  const reldiag::PairedLabelSet paired = reldiag::pair_labels(set_a, set_b);
  write_file_or_throw(args.out, reldiag::paired_set_to_json(paired));
  std::cerr << paired.pairs.size() << " pairs (" << paired.unmatched_a << "+"
            << paired.unmatched_b << " unmatched, " << paired.excluded_a << "+"
            << paired.excluded_b << " excluded) -> " << args.out << "\n";
  return kExitOk;
}

struct DiagnoseArgs {
  std::string corpus;
  std::string pairs;
  std::string out;
  std::string stages = "agree,contrast,retrieve,probe";
  std::string scope = "full_corpus";
  std::string centroid_source = "full_corpus";
  reldiag::RunConfig config;
};

int cmd_diagnose(DiagnoseArgs& args) {
  reldiag::IngestReport ingest_report;
  const reldiag::Corpus corpus =
      reldiag::ingest_corpus(args.corpus, reldiag::CorpusFormat::Jsonl, ingest_report);
  const reldiag::PairedLabelSet paired = reldiag::load_paired_json(args.pairs);

  args.config.corpus_path = args.corpus;
  args.config.scope = reldiag::scope_from_name(args.scope);
  args.config.centroid_source = reldiag::centroid_source_from_name(args.centroid_source);
  const reldiag::StageSelection stages = reldiag::stages_from_string(args.stages);

  const reldiag::DiagnoseResult result =
      reldiag::run_diagnose(corpus, paired, args.config, args.out, stages);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
  std::cerr << "wrote " << result.written_files.size() << " report files under " << args.out
            << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string dir;
};

int cmd_report(const ReportArgs& args) {
  namespace fs = std::filesystem;
  const auto has_reports = [](const fs::path& dir) {
    for (const char* name : {"agreement.json", "contrast.json", "retrieval_centroid.json",
                             "retrieval_query.json", "probe.json"}) {
      if (fs::exists(dir / name)) return true;
    }
    return false;
  };

  const fs::path root(args.dir);
  if (!fs::is_directory(root)) {
    throw reldiag::IoError("not a directory: " + args.dir);
  }
  std::vector<fs::path> topic_dirs;
  if (has_reports(root)) {
    topic_dirs.push_back(root);
  } else {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && has_reports(entry.path())) {
        topic_dirs.push_back(entry.path());
      }
    }
    std::sort(topic_dirs.begin(), topic_dirs.end());
  }
  if (topic_dirs.empty()) {
    throw reldiag::DomainError("no report files found under " + args.dir);
  }
  for (const auto& dir : topic_dirs) {
    write_file_or_throw(dir / "summary.md", reldiag::render_topic_markdown(dir.string()));
    std::cerr << "rendered " << (dir / "summary.md").string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relevance disagreement diagnostics for labeled document corpora"};
  app.require_subcommand(1);
  app.set_config("--config", "", "configuration file (TOML or JSON); flags take precedence");
  app.config_formatter(std::make_shared<FlexibleConfig>());

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Clean and validate a raw corpus file");
  ingest->configurable();
  ingest->add_option("--in", ingest_args.in, "raw corpus file")->required();
  ingest->add_option("--out", ingest_args.out, "cleaned corpus JSONL")->required();
  ingest->add_option("--format", ingest_args.format, "input format")
      ->check(CLI::IsMember({"jsonl", "csv"}));

  LabelArgs label_args;
  auto* label = app.add_subcommand("label", "Label a corpus with one chat backend");
  label->configurable();
  label->add_option("--corpus", label_args.corpus, "cleaned corpus JSONL")->required();
  label->add_option("--out", label_args.out, "label JSONL, also the resume store")->required();
  label->add_option("--topic", label_args.topic, "topic id")->required();
  label->add_option("--topic-name", label_args.topic_name, "topic display name (default: id)");
  label->add_option("--topic-targets", label_args.topic_targets, "topic target description");
  label->add_option("--base-url", label_args.base_url, "backend base URL")->required();
  label->add_option("--model", label_args.model, "backend model id")->required();
  label->add_option("--auth-env", label_args.auth_env,
                    "env var holding a bearer token (empty: no auth header)");
  label->add_option("--timeout", label_args.timeout_seconds, "request timeout seconds")
      ->check(CLI::PositiveNumber);
  label->add_option("--concurrency", label_args.concurrency, "parallel requests")
      ->check(CLI::Range(1u, 256u));
  label->add_option("--prompt-template", label_args.prompt_template,
                    "prompt template JSON (default: built-in prompt-v1)");
  label->add_option("--max-new-tokens", label_args.max_new_tokens, "generation token budget")
      ->check(CLI::PositiveNumber);
  label->add_option("--temperature", label_args.temperature, "sampling temperature");
  label->add_flag("--sample", label_args.sample, "enable sampling");
  label->add_option("--max-attempts", label_args.max_attempts, "attempts per document")
      ->check(CLI::PositiveNumber);
  label->add_option("--retry-base-ms", label_args.retry_base_ms, "first retry delay");
  label->add_option("--retry-factor", label_args.retry_factor, "retry backoff factor");
  label->add_flag("--no-topic-filter", label_args.no_topic_filter,
                  "label all documents, not only those tagged with the topic");

  PairArgs pair_args;
  auto* pair = app.add_subcommand("pair", "Join two label files on (doc, topic)");
  pair->configurable();
  pair->add_option("--a", pair_args.a, "label JSONL for rater A")->required();
  pair->add_option("--b", pair_args.b, "label JSONL for rater B")->required();
  pair->add_option("--out", pair_args.out, "paired label JSON")->required();

  DiagnoseArgs diag_args;
  auto* diagnose = app.add_subcommand("diagnose", "Run disagreement diagnostics per topic");
  diagnose->configurable();
  diagnose->add_option("--corpus", diag_args.corpus, "cleaned corpus JSONL")->required();
  diagnose->add_option("--pairs", diag_args.pairs, "paired label JSON")->required();
  diagnose->add_option("--out", diag_args.out, "report output directory")->required();
  diagnose->add_option("--seed", diag_args.config.seed, "global RNG seed")->required();
  diagnose->add_option("--topics", diag_args.config.topics,
                       "topics to diagnose (default: all in the paired file)")
      ->delimiter(',');
  diagnose->add_option("--stages", diag_args.stages, "comma list: agree,contrast,retrieve,probe");
  diagnose->add_option("--min-df", diag_args.config.min_df, "vectorizer min document frequency");
  diagnose->add_option("--max-df", diag_args.config.max_df,
                       "vectorizer max document frequency fraction");
  diagnose->add_option("--scope", diag_args.scope, "vectorizer fit scope")
      ->check(CLI::IsMember({"full_corpus", "combined_disagreement", "per_subset"}));
  diagnose->add_option("--n-perm", diag_args.config.n_perm, "permutations per term");
  diagnose->add_option("--alpha", diag_args.config.alpha, "FDR level");
  diagnose->add_option("--top-n", diag_args.config.top_n, "contrast terms to report");
  diagnose->add_option("--epsilon", diag_args.config.epsilon, "KL smoothing epsilon");
  diagnose->add_flag("--literal-p", diag_args.config.literal_p,
                     "report literal permutation p-values instead of add-one");
  diagnose->add_option("--k", diag_args.config.k, "retrieval cutoff");
  diagnose->add_option("--n-terms", diag_args.config.n_terms, "representative query terms");
  diagnose->add_option("--centroid-source", diag_args.centroid_source,
                       "documents averaged for the centroid query")
      ->check(CLI::IsMember({"full_corpus", "disagreement_pool"}));
  diagnose->add_option("--k-folds", diag_args.config.k_folds, "cross-validation folds");
  diagnose->add_option("--lambda", diag_args.config.lambda, "probe L2 strength");
  diagnose->add_option("--tolerance", diag_args.config.tolerance, "probe gradient tolerance");
  diagnose->add_option("--max-iters", diag_args.config.max_iters, "probe iteration cap");
  diagnose->add_option("--threads", diag_args.config.threads,
                       "worker threads for permutation tests")
      ->check(CLI::Range(1u, 256u));

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Re-render summary.md from report JSON files");
  report->configurable();
  report->add_option("--dir", report_args.dir, "topic directory or diagnose output directory")
      ->required();

  int rc = kExitOk;
  ingest->callback([&] { rc = cmd_ingest(ingest_args); });
  label->callback([&] { rc = cmd_label(label_args); });
  pair->callback([&] { rc = cmd_pair(pair_args); });
  diagnose->callback([&] { rc = cmd_diagnose(diag_args); });
  report->callback([&] { rc = cmd_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const reldiag::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const reldiag::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const reldiag::TemplateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const reldiag::IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return rc;
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reldiag/corpus.hpp"
#include "reldiag/labels.hpp"

namespace reldiag {

enum class VectorizerScope { FullCorpus, CombinedDisagreement, PerSubset };
enum class CentroidSource { FullCorpus, DisagreementPool };

std::string_view scope_name(VectorizerScope scope);
VectorizerScope scope_from_name(std::string_view name);
std::string_view centroid_source_name(CentroidSource source);
CentroidSource centroid_source_from_name(std::string_view name);

struct BackendConfig {
  std::string name;
  std::string base_url;
  std::string model;
  std::string auth_token_env;
  double timeout_seconds = 120.0;
};

struct RunConfig {
  std::string corpus_path;
  std::vector<std::string> topics;  // empty = every topic in the paired set
  std::vector<BackendConfig> backends;

  // vectorizer
  std::size_t min_df = 5;
  double max_df = 0.95;
  VectorizerScope scope = VectorizerScope::FullCorpus;

  // contrast
  std::size_t n_perm = 9999;
  double alpha = 0.05;
  std::size_t top_n = 200;
  double epsilon = 1e-9;
  bool literal_p = false;

  // retrieval
  std::size_t k = 20;
  std::size_t n_terms = 8;
  CentroidSource centroid_source = CentroidSource::FullCorpus;

  // probe
  std::size_t k_folds = 5;
  double lambda = 1.0;
  double tolerance = 1e-6;
  std::size_t max_iters = 1000;

  std::uint64_t seed = 0;

  // execution detail, never embedded in reports: results must not depend on it
  unsigned threads = 1;
};

// The provenance block embedded in every report (excludes `threads`).
std::string run_config_to_json(const RunConfig& config);

struct StageSelection {
  bool agree = true;
  bool contrast = true;
  bool retrieve = true;
  bool probe = true;
};

// Parses "agree,contrast,retrieve,probe" subsets.
StageSelection stages_from_string(const std::string& spec);

struct DiagnoseResult {
  std::vector<std::string> written_files;
  std::vector<std::string> warnings;
};

// Runs the selected stages for each topic, writing per-topic report
// directories under out_dir. Deterministic for a fixed corpus+pairs+config.
DiagnoseResult run_diagnose(const Corpus& corpus, const PairedLabelSet& paired,
                            const RunConfig& config, const std::string& out_dir,
                            const StageSelection& stages = {});

// Renders the combined Markdown summary for one topic directory's JSON
// reports; missing stage files are skipped.
std::string render_topic_markdown(const std::string& topic_dir);

}  // namespace reldiag

#include "reldiag/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>

#include <json.hpp>

#include "reldiag/agreement.hpp"
#include "reldiag/contrast.hpp"
#include "reldiag/errors.hpp"
#include "reldiag/learnability.hpp"
#include "reldiag/retrieval.hpp"
#include "reldiag/rng.hpp"
#include "reldiag/tfidf.hpp"

namespace reldiag {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kContrastStream = 1;
constexpr std::uint64_t kProbeSampleStream = 2;
constexpr std::uint64_t kCvStream = 3;

ordered_json config_to_ordered_json(const RunConfig& c) {
  ordered_json j;
  j["corpus_path"] = c.corpus_path;
  j["topics"] = c.topics;
  auto& backends = j["backends"] = ordered_json::array();
  for (const auto& b : c.backends) {
    ordered_json bj;
    bj["name"] = b.name;
    bj["base_url"] = b.base_url;
    bj["model"] = b.model;
    bj["auth_token_env"] = b.auth_token_env;
    bj["timeout_seconds"] = b.timeout_seconds;
    backends.push_back(std::move(bj));
  }
  j["vectorizer"]["min_df"] = c.min_df;
  j["vectorizer"]["max_df"] = c.max_df;
  j["vectorizer"]["scope"] = std::string(scope_name(c.scope));
  j["contrast"]["n_perm"] = c.n_perm;
  j["contrast"]["alpha"] = c.alpha;
  j["contrast"]["top_n"] = c.top_n;
  j["contrast"]["epsilon"] = c.epsilon;
  j["contrast"]["literal_p"] = c.literal_p;
  j["retrieval"]["k"] = c.k;
  j["retrieval"]["n_terms"] = c.n_terms;
  j["retrieval"]["centroid_source"] = std::string(centroid_source_name(c.centroid_source));
  j["probe"]["k_folds"] = c.k_folds;
  j["probe"]["lambda"] = c.lambda;
  j["probe"]["tolerance"] = c.tolerance;
  j["probe"]["max_iters"] = c.max_iters;
  j["seed"] = c.seed;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report file: " + path.string());
  out << content;
  if (!out) throw IoError("failed writing report file: " + path.string());
}

std::string sanitize_topic(const std::string& topic) {
  std::string safe;
  safe.reserve(topic.size());
  for (const char c : topic) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    safe.push_back(ok ? c : '_');
  }
  return safe.empty() ? std::string("topic") : safe;
}

std::string fmt(double value, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, value);
  return buf;
}

struct TopicData {
  PairedLabelSet pairs;
  QuadrantPartition quadrants;
  std::vector<const Document*> slice;
  std::vector<std::string> a_ids;
  std::vector<std::string> b_ids;
};

TopicData collect_topic_data(const Corpus& corpus, const PairedLabelSet& paired,
                             const std::string& topic) {
  TopicData data;
  data.pairs.model_a = paired.model_a;
  data.pairs.model_b = paired.model_b;
  for (const auto& pair : paired.pairs) {
    if (pair.topic == topic) data.pairs.pairs.push_back(pair);
  }
  if (data.pairs.pairs.empty()) {
    throw DomainError("topic \"" + topic + "\" has no label pairs");
  }
  data.quadrants = partition_quadrants(data.pairs);
  for (const auto& key : data.quadrants.a_only) data.a_ids.push_back(key.doc_id);
  for (const auto& key : data.quadrants.b_only) data.b_ids.push_back(key.doc_id);

  std::set<std::string> pair_docs;
  for (const auto& pair : data.pairs.pairs) pair_docs.insert(pair.doc_id);
  std::set<std::string> found;
  for (const auto& doc : corpus.documents()) {
    if (doc.topics.contains(topic) || pair_docs.contains(doc.doc_id)) {
      data.slice.push_back(&doc);
      if (pair_docs.contains(doc.doc_id)) found.insert(doc.doc_id);
    }
  }
  for (const auto& id : pair_docs) {
    if (!found.contains(id)) {
      throw DomainError("label pair references doc_id \"" + id +
                        "\" missing from the corpus (topic \"" + topic + "\")");
    }
  }
  return data;
}

std::vector<std::string> texts_of(std::span<const Document* const> docs) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const Document* doc : docs) texts.push_back(doc->abstract_text);
  return texts;
}

std::vector<std::string> texts_of_ids(const Corpus& corpus, std::span<const std::string> ids) {
  std::vector<std::string> texts;
  texts.reserve(ids.size());
  for (const auto& id : ids) texts.push_back(corpus.find(id)->abstract_text);
  return texts;
}

ordered_json ranked_list_json(const std::vector<RankedDoc>& list) {
  ordered_json arr = ordered_json::array();
  for (const auto& entry : list) {
    ordered_json e;
    e["doc_id"] = entry.doc_id;
    e["score"] = entry.score;
    e["rank"] = entry.rank;
    arr.push_back(std::move(e));
  }
  return arr;
}

ordered_json overlap_json(const OverlapReport& report) {
  ordered_json j;
  j["method"] = report.method;
  j["k"] = report.k;
  j["a_only"] = report.a_only;
  j["b_only"] = report.b_only;
  j["both"] = report.both;
  j["a_list"] = ranked_list_json(report.a_list);
  j["b_list"] = ranked_list_json(report.b_list);
  return j;
}

}  // namespace

std::string_view scope_name(VectorizerScope scope) {
  switch (scope) {
    case VectorizerScope::FullCorpus: return "full_corpus";
    case VectorizerScope::CombinedDisagreement: return "combined_disagreement";
    case VectorizerScope::PerSubset: return "per_subset";
  }
  return "full_corpus";
}

VectorizerScope scope_from_name(std::string_view name) {
  if (name == "full_corpus") return VectorizerScope::FullCorpus;
  if (name == "combined_disagreement") return VectorizerScope::CombinedDisagreement;
  if (name == "per_subset") return VectorizerScope::PerSubset;
  throw DomainError("unknown vectorizer scope \"" + std::string(name) +
                    "\" (expected full_corpus, combined_disagreement, or per_subset)");
}

std::string_view centroid_source_name(CentroidSource source) {
  return source == CentroidSource::FullCorpus ? "full_corpus" : "disagreement_pool";
}

CentroidSource centroid_source_from_name(std::string_view name) {
  if (name == "full_corpus") return CentroidSource::FullCorpus;
  if (name == "disagreement_pool") return CentroidSource::DisagreementPool;
  throw DomainError("unknown centroid source \"" + std::string(name) +
                    "\" (expected full_corpus or disagreement_pool)");
}

std::string run_config_to_json(const RunConfig& config) {
  return config_to_ordered_json(config).dump(2) + "\n";
}

StageSelection stages_from_string(const std::string& spec) {
  if (spec.empty()) return {};
  StageSelection stages{false, false, false, false};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    std::string token = spec.substr(pos, comma - pos);
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (token == "agree") stages.agree = true;
    else if (token == "contrast") stages.contrast = true;
    else if (token == "retrieve") stages.retrieve = true;
    else if (token == "probe") stages.probe = true;
    else if (!token.empty()) {
      throw DomainError("unknown stage \"" + token +
                        "\" (expected agree, contrast, retrieve, probe)");
    }
    pos = comma + 1;
  }
  if (!stages.agree && !stages.contrast && !stages.retrieve && !stages.probe) {
    throw DomainError("stage selection is empty");
  }
  return stages;
}

DiagnoseResult run_diagnose(const Corpus& corpus, const PairedLabelSet& paired,
                            const RunConfig& config, const std::string& out_dir,
                            const StageSelection& stages) {
  DiagnoseResult result;
  const ordered_json config_json = config_to_ordered_json(config);

  std::vector<std::string> topics = config.topics;
  if (topics.empty()) {
    std::set<std::string> seen;
    for (const auto& pair : paired.pairs) seen.insert(pair.topic);
    topics.assign(seen.begin(), seen.end());
  }
  if (topics.empty()) throw DomainError("paired label set contains no topics");

  for (const auto& topic : topics) {
    const TopicData data = collect_topic_data(corpus, paired, topic);
    const std::uint64_t topic_seed = derive_stream(config.seed, fnv1a64(topic));
    const std::filesystem::path topic_dir =
        std::filesystem::path(out_dir) / sanitize_topic(topic);
    std::filesystem::create_directories(topic_dir);

    auto emit = [&](const char* name, ordered_json body) {
      ordered_json j;
      j["topic"] = topic;
      j["seed"] = config.seed;
      j["config"] = config_json;
      for (auto& [key, value] : body.items()) j[key] = value;
      const auto path = topic_dir / name;
      write_text_file(path, j.dump(2) + "\n");
      result.written_files.push_back(path.string());
    };

    if (stages.agree) {
      const AgreementReport report = agreement_report(data.pairs);
      ordered_json body;
      body["agreement"]["n_pairs"] = report.n_pairs;
      body["agreement"]["counts"]["both_relevant"] = report.counts.both_relevant;
      body["agreement"]["counts"]["a_only_relevant"] = report.counts.a_only_relevant;
      body["agreement"]["counts"]["b_only_relevant"] = report.counts.b_only_relevant;
      body["agreement"]["counts"]["both_nonrelevant"] = report.counts.both_nonrelevant;
      body["agreement"]["raw_agreement"] = report.raw_agreement;
      body["agreement"]["kappa"] =
          report.kappa ? ordered_json(*report.kappa) : ordered_json(nullptr);
      body["agreement"]["kappa_defined"] = report.kappa.has_value();
      body["agreement"]["fractions"]["both_relevant"] = report.frac_both_relevant;
      body["agreement"]["fractions"]["both_nonrelevant"] = report.frac_both_nonrelevant;
      body["agreement"]["fractions"]["a_only"] = report.frac_a_only;
      body["agreement"]["fractions"]["b_only"] = report.frac_b_only;
      body["models"]["a"] = data.pairs.model_a;
      body["models"]["b"] = data.pairs.model_b;
      emit("agreement.json", std::move(body));
    }

    const bool needs_vectors = stages.contrast || stages.retrieve || stages.probe;
    if (!needs_vectors) {
      write_text_file(topic_dir / "summary.md", render_topic_markdown(topic_dir.string()));
      result.written_files.push_back((topic_dir / "summary.md").string());
      continue;
    }

    if ((stages.retrieve || stages.probe) && config.scope == VectorizerScope::PerSubset) {
      throw DomainError("scope per_subset fits independent vectorizers per disagreement side, "
                        "which only supports the contrast stage; run with --stages contrast or "
                        "choose full_corpus / combined_disagreement");
    }
    if ((stages.contrast || stages.probe) &&
        (data.a_ids.empty() || data.b_ids.empty())) {
      throw DomainError("topic \"" + topic + "\" has an empty disagreement side (a_only=" +
                        std::to_string(data.a_ids.size()) + ", b_only=" +
                        std::to_string(data.b_ids.size()) +
                        "); contrast and probe stages need both");
    }

    TfidfConfig tfidf_config;
    tfidf_config.min_df = config.min_df;
    tfidf_config.max_df = config.max_df;

    const auto a_texts = texts_of_ids(corpus, data.a_ids);
    const auto b_texts = texts_of_ids(corpus, data.b_ids);

    if (config.scope == VectorizerScope::PerSubset) {
      const VectorizerModel model_a = VectorizerModel::fit(a_texts, tfidf_config);
      const VectorizerModel model_b = VectorizerModel::fit(b_texts, tfidf_config);
      const auto va = model_a.transform_all(a_texts);
      const auto vb = model_b.transform_all(b_texts);
      const auto ma = mean_vector(va, model_a.vocabulary_size());
      const auto mb = mean_vector(vb, model_b.vocabulary_size());

      // lexicographic union of the two vocabularies
      std::map<std::string, std::pair<double, double>> union_means;
      for (std::size_t i = 0; i < ma.size(); ++i) {
        union_means[model_a.terms()[i]].first = ma[i];
      }
      for (std::size_t i = 0; i < mb.size(); ++i) {
        union_means[model_b.terms()[i]].second = mb[i];
      }

      std::vector<const std::pair<const std::string, std::pair<double, double>>*> ranked;
      ranked.reserve(union_means.size());
      for (const auto& entry : union_means) ranked.push_back(&entry);
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto* lhs, const auto* rhs) {
        const double dl = std::abs(lhs->second.second - lhs->second.first);
        const double dr = std::abs(rhs->second.second - rhs->second.first);
        if (dl != dr) return dl > dr;
        return lhs->first < rhs->first;
      });

      std::vector<double> mean_a_union;
      std::vector<double> mean_b_union;
      mean_a_union.reserve(union_means.size());
      mean_b_union.reserve(union_means.size());
      for (const auto& [term, means] : union_means) {
        mean_a_union.push_back(means.first);
        mean_b_union.push_back(means.second);
      }

      ordered_json body;
      body["n_a"] = data.a_ids.size();
      body["n_b"] = data.b_ids.size();
      body["permutation"] =
          "skipped: per_subset scope fits independent vectorizers, so group labels are not "
          "exchangeable across spaces";
      auto& terms = body["terms"] = ordered_json::array();
      const std::size_t limit = std::min(config.top_n, ranked.size());
      for (std::size_t i = 0; i < limit; ++i) {
        ordered_json t;
        t["term"] = ranked[i]->first;
        t["mean_a"] = ranked[i]->second.first;
        t["mean_b"] = ranked[i]->second.second;
        t["delta"] = ranked[i]->second.second - ranked[i]->second.first;
        t["p"] = nullptr;
        t["p_adjusted"] = nullptr;
        t["rejected"] = false;
        terms.push_back(std::move(t));
      }
      body["kl"]["a_to_b"] = kl_divergence(mean_a_union, mean_b_union, config.epsilon);
      body["kl"]["b_to_a"] = kl_divergence(mean_b_union, mean_a_union, config.epsilon);
      body["kl"]["epsilon"] = config.epsilon;
      emit("contrast.json", std::move(body));

      write_text_file(topic_dir / "summary.md", render_topic_markdown(topic_dir.string()));
      result.written_files.push_back((topic_dir / "summary.md").string());
      continue;
    }

    const auto slice_texts = texts_of(data.slice);
    const VectorizerModel model =
        config.scope == VectorizerScope::FullCorpus
            ? VectorizerModel::fit(slice_texts, tfidf_config)
            : [&] {
                std::vector<std::string> combined = a_texts;
                combined.insert(combined.end(), b_texts.begin(), b_texts.end());
                return VectorizerModel::fit(combined, tfidf_config);
              }();
    const auto va = model.transform_all(a_texts);
    const auto vb = model.transform_all(b_texts);

    if (stages.contrast) {
      ContrastOptions options;
      options.top_n = config.top_n;
      options.n_perm = config.n_perm;
      options.alpha = config.alpha;
      options.seed = derive_stream(topic_seed, kContrastStream);
      options.p_mode = config.literal_p ? PValueMode::Literal : PValueMode::AddOne;
      options.n_threads = config.threads;
      const ContrastResult contrast = run_contrast(model, va, vb, options);

      const auto mean_a = mean_vector(va, model.vocabulary_size());
      const auto mean_b = mean_vector(vb, model.vocabulary_size());

      ordered_json body;
      body["stage_seed"] = options.seed;
      body["n_a"] = data.a_ids.size();
      body["n_b"] = data.b_ids.size();
      body["n_perm"] = config.n_perm;
      body["alpha"] = config.alpha;
      auto& terms = body["terms"] = ordered_json::array();
      for (const auto& record : contrast.terms) {
        ordered_json t;
        t["term"] = record.term;
        t["mean_a"] = record.mean_a;
        t["mean_b"] = record.mean_b;
        t["delta"] = record.delta;
        t["p"] = record.p_value;
        t["p_adjusted"] = record.p_adjusted;
        t["rejected"] = record.rejected;
        terms.push_back(std::move(t));
      }
      body["kl"]["a_to_b"] = kl_divergence(mean_a, mean_b, config.epsilon);
      body["kl"]["b_to_a"] = kl_divergence(mean_b, mean_a, config.epsilon);
      body["kl"]["epsilon"] = config.epsilon;
      emit("contrast.json", std::move(body));
    }

    if (stages.retrieve) {
      if (data.a_ids.empty() && data.b_ids.empty()) {
        throw DomainError("topic \"" + topic + "\" has no disagreement documents to rank");
      }
      std::vector<std::string> pool_ids = data.a_ids;
      pool_ids.insert(pool_ids.end(), data.b_ids.begin(), data.b_ids.end());
      std::sort(pool_ids.begin(), pool_ids.end());
      const auto pool_texts = texts_of_ids(corpus, pool_ids);
      const auto pool_vectors = model.transform_all(pool_texts);
      const std::set<std::string> keys_a(data.a_ids.begin(), data.a_ids.end());
      const std::set<std::string> keys_b(data.b_ids.begin(), data.b_ids.end());

      const auto slice_vectors = model.transform_all(slice_texts);

      const QueryVector centroid =
          config.centroid_source == CentroidSource::FullCorpus
              ? centroid_query(slice_vectors, model.vocabulary_size())
              : centroid_query(pool_vectors, model.vocabulary_size());
      const auto ranked_centroid = cosine_rank(centroid, pool_vectors, pool_ids);
      {
        const auto topk_a = filtered_topk(ranked_centroid, keys_a, config.k);
        const auto topk_b = filtered_topk(ranked_centroid, keys_b, config.k);
        ordered_json body;
        body["centroid_source"] = std::string(centroid_source_name(config.centroid_source));
        body["pool_size"] = pool_ids.size();
        body["overlap"] = overlap_json(overlap_report(topk_a, topk_b, "centroid", config.k));
        emit("retrieval_centroid.json", std::move(body));
      }

      const QueryVector rep = representative_query(model, slice_vectors, config.n_terms);
      if (rep.warning) {
        result.warnings.push_back("topic \"" + topic + "\": " + *rep.warning);
      }
      const auto ranked_query = cosine_rank(rep, pool_vectors, pool_ids);
      {
        const auto topk_a = filtered_topk(ranked_query, keys_a, config.k);
        const auto topk_b = filtered_topk(ranked_query, keys_b, config.k);
        ordered_json body;
        body["query_terms"] = rep.terms;
        body["pool_size"] = pool_ids.size();
        body["overlap"] = overlap_json(overlap_report(topk_a, topk_b, "query", config.k));
        emit("retrieval_query.json", std::move(body));
      }
    }

    if (stages.probe) {
      const std::uint64_t sample_seed = derive_stream(topic_seed, kProbeSampleStream);
      const std::uint64_t cv_seed = derive_stream(topic_seed, kCvStream);
      const ProbeDataset dataset = build_probe_dataset(va, data.a_ids, vb, data.b_ids,
                                                       model.vocabulary_size(), sample_seed);
      TrainOptions train;
      train.lambda = config.lambda;
      train.tolerance = config.tolerance;
      train.max_iters = config.max_iters;
      const CvReport cv = cross_validate(dataset, config.k_folds, cv_seed, train);

      ordered_json body;
      body["sample_seed"] = sample_seed;
      body["cv_seed"] = cv_seed;
      body["n_a"] = data.a_ids.size();
      body["n_b"] = data.b_ids.size();
      body["cv"]["k"] = cv.k;
      body["cv"]["seed"] = cv.seed;
      body["cv"]["fold_aucs"] = cv.fold_aucs;
      body["cv"]["mean"] = cv.mean;
      body["cv"]["std"] = cv.std_dev;
      body["cv"]["n_examples"] = cv.n_examples;
      body["cv"]["n_features"] = cv.n_features;
      body["cv"]["lambda"] = cv.lambda;
      emit("probe.json", std::move(body));
    }

    write_text_file(topic_dir / "summary.md", render_topic_markdown(topic_dir.string()));
    result.written_files.push_back((topic_dir / "summary.md").string());
  }

  return result;
}

std::string render_topic_markdown(const std::string& topic_dir) {
  namespace fs = std::filesystem;
  auto load = [&](const char* name) -> std::optional<json> {
    const fs::path path = fs::path(topic_dir) / name;
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw IoError("invalid JSON in " + path.string());
    return j;
  };

  std::string topic = fs::path(topic_dir).filename().string();
  std::string md;
  const auto agreement = load("agreement.json");
  const auto contrast = load("contrast.json");
  const auto centroid = load("retrieval_centroid.json");
  const auto query = load("retrieval_query.json");
  const auto probe = load("probe.json");
  for (const auto& j : {agreement, contrast, centroid, query, probe}) {
    if (j && j->contains("topic")) {
      topic = (*j)["topic"].get<std::string>();
      break;
    }
  }

  md += "# Diagnostics for topic " + topic + "\n";

  if (agreement) {
    const auto& a = (*agreement)["agreement"];
    md += "\n## Label agreement\n\n";
    md += "| Measure | Value |\n|---|---|\n";
    md += "| Pairs | " + std::to_string(a["n_pairs"].get<std::int64_t>()) + " |\n";
    md += "| Raw agreement | " + fmt(a["raw_agreement"].get<double>()) + " |\n";
    md += std::string("| Cohen's kappa | ") +
          (a["kappa"].is_null() ? std::string("undefined (constant raters)")
                                : fmt(a["kappa"].get<double>())) +
          " |\n";
    md += "| Both relevant | " + fmt(a["fractions"]["both_relevant"].get<double>() * 100.0) +
          "% |\n";
    md += "| Both non-relevant | " +
          fmt(a["fractions"]["both_nonrelevant"].get<double>() * 100.0) + "% |\n";
    md += "| A-only relevant | " + fmt(a["fractions"]["a_only"].get<double>() * 100.0) + "% |\n";
    md += "| B-only relevant | " + fmt(a["fractions"]["b_only"].get<double>() * 100.0) + "% |\n";
  }

  if (contrast) {
    md += "\n## Contrastive terms\n\n";
    md += "Disagreement sides: a_only=" +
          std::to_string((*contrast)["n_a"].get<std::int64_t>()) +
          ", b_only=" + std::to_string((*contrast)["n_b"].get<std::int64_t>()) + "\n\n";
    md += "| Term | Mean A | Mean B | Delta | p | p (adj) | Rejected |\n";
    md += "|---|---|---|---|---|---|---|\n";
    const auto& terms = (*contrast)["terms"];
    const std::size_t limit = std::min<std::size_t>(terms.size(), 15);
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& t = terms[i];
      md += "| " + t["term"].get<std::string>() + " | " + fmt(t["mean_a"].get<double>()) +
            " | " + fmt(t["mean_b"].get<double>()) + " | " + fmt(t["delta"].get<double>()) +
            " | " + (t["p"].is_null() ? std::string("-") : fmt(t["p"].get<double>(), "%.4g")) +
            " | " +
            (t["p_adjusted"].is_null() ? std::string("-")
                                       : fmt(t["p_adjusted"].get<double>(), "%.4g")) +
            " | " + (t["rejected"].get<bool>() ? "yes" : "no") + " |\n";
    }
    std::size_t rejected = 0;
    for (const auto& t : terms) {
      if (t["rejected"].get<bool>()) ++rejected;
    }
    md += "\nRejected terms (FDR): " + std::to_string(rejected) + " of " +
          std::to_string(terms.size()) + " tested\n";
    md += "\nKL divergence (nats): a to b = " + fmt((*contrast)["kl"]["a_to_b"].get<double>()) +
          ", b to a = " + fmt((*contrast)["kl"]["b_to_a"].get<double>()) + "\n";
  }

  if (centroid || query) {
    md += "\n## Retrieval overlap\n\n";
    md += "| Method | k | A only | B only | Both |\n|---|---|---|---|---|\n";
    for (const auto& j : {centroid, query}) {
      if (!j) continue;
      const auto& o = (*j)["overlap"];
      md += "| " + o["method"].get<std::string>() + " | " +
            std::to_string(o["k"].get<std::size_t>()) + " | " +
            std::to_string(o["a_only"].get<std::size_t>()) + " | " +
            std::to_string(o["b_only"].get<std::size_t>()) + " | " +
            std::to_string(o["both"].get<std::size_t>()) + " |\n";
    }
    if (query) {
      md += "\nQuery terms:";
      for (const auto& term : (*query)["query_terms"]) {
        md += " " + term.get<std::string>();
      }
      md += "\n";
    }
  }

  if (probe) {
    const auto& cv = (*probe)["cv"];
    md += "\n## Disagreement probe\n\n";
    md += "Mean ROC-AUC: " + fmt(cv["mean"].get<double>()) + " +/- " +
          fmt(cv["std"].get<double>()) + " over " + std::to_string(cv["k"].get<std::size_t>()) +
          " stratified folds\n\nFold AUCs:";
    for (const auto& auc : cv["fold_aucs"]) md += " " + fmt(auc.get<double>());
    md += "\n\nExamples: " + std::to_string(cv["n_examples"].get<std::size_t>()) +
          " (balanced), features: " + std::to_string(cv["n_features"].get<std::size_t>()) +
          ", lambda: " + fmt(cv["lambda"].get<double>()) + "\n";
  }

  return md;
}

}  // namespace reldiag

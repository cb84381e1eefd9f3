#include <doctest.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "reldiag/corpus.hpp"
#include "reldiag/errors.hpp"
#include "reldiag/labels.hpp"
#include "reldiag/pipeline.hpp"
#include "synthetic.hpp"

using namespace reldiag;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("reldiag_pipeline_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string dir(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "missing file: ", p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const std::filesystem::path& p) { return json::parse(slurp(p)); }

synth::Options small_options() {
  synth::Options opt;
  opt.n_docs = 240;
  opt.base_vocab = 100;
  opt.base_tokens = 25;
  opt.planted_vocab = 6;
  opt.planted_tokens = 5;
  opt.seed = 424242;
  return opt;
}

RunConfig small_config() {
  RunConfig config;
  config.corpus_path = "synthetic.jsonl";
  config.min_df = 3;
  config.n_perm = 499;
  config.top_n = 50;
  config.k = 10;
  config.n_terms = 5;
  config.seed = 777;
  return config;
}

const char* const kStageFiles[] = {"agreement.json", "contrast.json", "retrieval_centroid.json",
                                   "retrieval_query.json", "probe.json"};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("a full run writes every stage report plus a summary") {
  const synth::Dataset data = synth::make(small_options());
  const RunConfig config = small_config();
  TempDir tmp;
  const std::string out = tmp.dir("out");

  const DiagnoseResult result = run_diagnose(data.corpus, data.paired, config, out);
  CHECK(result.written_files.size() == 6);

  const std::filesystem::path topic_dir = std::filesystem::path(out) / "t1";
  for (const char* name : kStageFiles) CHECK(std::filesystem::exists(topic_dir / name));
  CHECK(std::filesystem::exists(topic_dir / "summary.md"));

  const json agreement = load_json(topic_dir / "agreement.json");
  CHECK(agreement["topic"] == "t1");
  CHECK(agreement["seed"] == 777);
  CHECK_FALSE(agreement["config"].contains("threads"));
  CHECK(agreement["config"]["vectorizer"]["min_df"] == 3);
  CHECK(agreement["config"]["contrast"]["n_perm"] == 499);
  const auto& a = agreement["agreement"];
  CHECK(a["n_pairs"] == 240);
  const double raw = a["raw_agreement"].get<double>();
  CHECK(raw > 0.5);
  CHECK(raw <= 1.0);
  CHECK(a["kappa_defined"] == true);
  const std::size_t quadrant_total = a["counts"]["both_relevant"].get<std::size_t>() +
                                     a["counts"]["a_only_relevant"].get<std::size_t>() +
                                     a["counts"]["b_only_relevant"].get<std::size_t>() +
                                     a["counts"]["both_nonrelevant"].get<std::size_t>();
  CHECK(quadrant_total == 240);
  CHECK(agreement["models"]["a"] == "rater-a");

  const json contrast = load_json(topic_dir / "contrast.json");
  CHECK(contrast["n_perm"] == 499);
  CHECK(contrast["alpha"] == 0.05);
  REQUIRE(contrast["terms"].size() > 0);
  CHECK(contrast["terms"].size() <= 50);
  for (const auto& t : contrast["terms"]) {
    CHECK(t.contains("term"));
    CHECK(t.contains("delta"));
    const double p = t["p"].get<double>();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(contrast["kl"]["a_to_b"].get<double>() >= 0.0);
  CHECK(contrast["kl"]["b_to_a"].get<double>() >= 0.0);

  // planted vocabularies dominate the contrast ranking even on this small corpus
  std::size_t planted_in_top = 0;
  for (std::size_t i = 0; i < 12 && i < contrast["terms"].size(); ++i) {
    const std::string term = contrast["terms"][i]["term"].get<std::string>();
    if (term.starts_with("alphaterm") || term.starts_with("betaterm")) ++planted_in_top;
  }
  CHECK(planted_in_top == 12);

  for (const char* name : {"retrieval_centroid.json", "retrieval_query.json"}) {
    const json retrieval = load_json(topic_dir / name);
    const auto& overlap = retrieval["overlap"];
    CHECK(overlap["k"] == 10);
    const std::size_t a_only = overlap["a_only"].get<std::size_t>();
    const std::size_t both = overlap["both"].get<std::size_t>();
    CHECK(a_only + both <= 10);
    CHECK(retrieval["pool_size"].get<std::size_t>() > 0);
  }
  const json query = load_json(topic_dir / "retrieval_query.json");
  CHECK(query["query_terms"].size() == 5);

  const json probe = load_json(topic_dir / "probe.json");
  CHECK(probe["cv"]["k"] == 5);
  CHECK(probe["cv"]["fold_aucs"].size() == 5);
  const double mean = probe["cv"]["mean"].get<double>();
  CHECK(mean >= 0.0);
  CHECK(mean <= 1.0);
  CHECK(probe["cv"]["n_examples"].get<std::size_t>() % 2 == 0);

  const std::string summary = slurp(topic_dir / "summary.md");
  CHECK(summary.find("# Diagnostics for topic t1") != std::string::npos);
  CHECK(summary.find("Label agreement") != std::string::npos);
  CHECK(summary.find("Contrastive terms") != std::string::npos);
  CHECK(summary.find("Retrieval overlap") != std::string::npos);
  CHECK(summary.find("Disagreement probe") != std::string::npos);
}

TEST_CASE("reruns are byte-identical, including across thread counts") {
  const synth::Dataset data = synth::make(small_options());
  RunConfig config = small_config();
  TempDir tmp;

  run_diagnose(data.corpus, data.paired, config, tmp.dir("one"));
  run_diagnose(data.corpus, data.paired, config, tmp.dir("two"));
  config.threads = 3;
  run_diagnose(data.corpus, data.paired, config, tmp.dir("three"));

  for (const char* name : kStageFiles) {
    const std::string base = slurp(std::filesystem::path(tmp.dir("one")) / "t1" / name);
    CHECK(slurp(std::filesystem::path(tmp.dir("two")) / "t1" / name) == base);
    CHECK(slurp(std::filesystem::path(tmp.dir("three")) / "t1" / name) == base);
  }

  RunConfig reseeded = small_config();
  reseeded.seed = 778;
  run_diagnose(data.corpus, data.paired, reseeded, tmp.dir("four"));
  CHECK(slurp(std::filesystem::path(tmp.dir("four")) / "t1" / "probe.json") !=
        slurp(std::filesystem::path(tmp.dir("one")) / "t1" / "probe.json"));
}

TEST_CASE("stage selection limits which reports are written") {
  const synth::Dataset data = synth::make(small_options());
  const RunConfig config = small_config();
  TempDir tmp;

  const DiagnoseResult agree_only = run_diagnose(data.corpus, data.paired, config,
                                                 tmp.dir("agree"), stages_from_string("agree"));
  const std::filesystem::path agree_dir = std::filesystem::path(tmp.dir("agree")) / "t1";
  CHECK(agree_only.written_files.size() == 2);
  CHECK(std::filesystem::exists(agree_dir / "agreement.json"));
  CHECK(std::filesystem::exists(agree_dir / "summary.md"));
  CHECK_FALSE(std::filesystem::exists(agree_dir / "contrast.json"));
  CHECK_FALSE(std::filesystem::exists(agree_dir / "probe.json"));

  run_diagnose(data.corpus, data.paired, config, tmp.dir("contrast"),
               stages_from_string("contrast"));
  const std::filesystem::path contrast_dir = std::filesystem::path(tmp.dir("contrast")) / "t1";
  CHECK(std::filesystem::exists(contrast_dir / "contrast.json"));
  CHECK_FALSE(std::filesystem::exists(contrast_dir / "agreement.json"));
  CHECK_FALSE(std::filesystem::exists(contrast_dir / "retrieval_centroid.json"));

  // a selected stage writes the same bytes as the full run
  run_diagnose(data.corpus, data.paired, config, tmp.dir("full"));
  CHECK(slurp(contrast_dir / "contrast.json") ==
        slurp(std::filesystem::path(tmp.dir("full")) / "t1" / "contrast.json"));
}

TEST_CASE("stage strings parse subsets and reject junk") {
  const StageSelection all = stages_from_string("");
  CHECK(all.agree);
  CHECK(all.probe);

  const StageSelection two = stages_from_string(" agree , probe ");
  CHECK(two.agree);
  CHECK_FALSE(two.contrast);
  CHECK_FALSE(two.retrieve);
  CHECK(two.probe);

  const StageSelection one = stages_from_string("retrieve");
  CHECK_FALSE(one.agree);
  CHECK(one.retrieve);

  CHECK_THROWS_WITH_AS(stages_from_string("agree,bogus"), doctest::Contains("bogus"),
                       DomainError);
  CHECK_THROWS_AS(stages_from_string(","), DomainError);
}

TEST_CASE("scope and centroid-source names round-trip") {
  for (const auto scope : {VectorizerScope::FullCorpus, VectorizerScope::CombinedDisagreement,
                           VectorizerScope::PerSubset}) {
    CHECK(scope_from_name(scope_name(scope)) == scope);
  }
  for (const auto source : {CentroidSource::FullCorpus, CentroidSource::DisagreementPool}) {
    CHECK(centroid_source_from_name(centroid_source_name(source)) == source);
  }
  CHECK_THROWS_AS(scope_from_name("global"), DomainError);
  CHECK_THROWS_AS(centroid_source_from_name("pool"), DomainError);
}

TEST_CASE("per-subset scope supports contrast only") {
  const synth::Dataset data = synth::make(small_options());
  RunConfig config = small_config();
  config.scope = VectorizerScope::PerSubset;
  config.min_df = 1;
  TempDir tmp;

  const DiagnoseResult result = run_diagnose(data.corpus, data.paired, config,
                                             tmp.dir("contrast"),
                                             stages_from_string("agree,contrast"));
  CHECK(result.written_files.size() == 3);
  const json contrast =
      load_json(std::filesystem::path(tmp.dir("contrast")) / "t1" / "contrast.json");
  CHECK(contrast["permutation"].get<std::string>().find("skipped") != std::string::npos);
  REQUIRE(contrast["terms"].size() > 0);
  double last_abs_delta = std::numeric_limits<double>::infinity();
  for (const auto& t : contrast["terms"]) {
    CHECK(t["p"].is_null());
    CHECK(t["p_adjusted"].is_null());
    CHECK(t["rejected"] == false);
    const double abs_delta = std::abs(t["delta"].get<double>());
    CHECK(abs_delta <= last_abs_delta);
    last_abs_delta = abs_delta;
  }

  CHECK_THROWS_WITH_AS(run_diagnose(data.corpus, data.paired, config, tmp.dir("retrieve"),
                                    stages_from_string("retrieve")),
                       doctest::Contains("per_subset"), DomainError);
  CHECK_THROWS_WITH_AS(run_diagnose(data.corpus, data.paired, config, tmp.dir("probe"),
                                    stages_from_string("probe")),
                       doctest::Contains("per_subset"), DomainError);
}

TEST_CASE("input validation names the offending topic or document") {
  const synth::Dataset data = synth::make(small_options());
  TempDir tmp;

  RunConfig config = small_config();
  config.topics = {"nope"};
  CHECK_THROWS_WITH_AS(run_diagnose(data.corpus, data.paired, config, tmp.dir("a")),
                       doctest::Contains("nope"), DomainError);

  PairedLabelSet broken = data.paired;
  LabeledPair ghost;
  ghost.doc_id = "ghost99";
  ghost.topic = "t1";
  ghost.label_a = Label::Relevant;
  ghost.label_b = Label::NonRelevant;
  broken.pairs.push_back(ghost);
  CHECK_THROWS_WITH_AS(run_diagnose(data.corpus, broken, small_config(), tmp.dir("b")),
                       doctest::Contains("ghost99"), DomainError);

  PairedLabelSet empty;
  empty.model_a = "rater-a";
  empty.model_b = "rater-b";
  CHECK_THROWS_AS(run_diagnose(data.corpus, empty, small_config(), tmp.dir("c")), DomainError);
}

TEST_CASE("an empty disagreement side blocks contrast and probe but not agreement") {
  Corpus corpus;
  PairedLabelSet paired;
  paired.model_a = "rater-a";
  paired.model_b = "rater-b";
  for (int i = 0; i < 8; ++i) {
    Document doc;
    doc.doc_id = "d" + std::to_string(10 + i);
    doc.abstract_text = "battery storage cell tests unit " + std::to_string(i);
    doc.topics = {"t1"};
    corpus.add(std::move(doc));
    LabeledPair pair;
    pair.doc_id = "d" + std::to_string(10 + i);
    pair.topic = "t1";
    pair.label_a = i % 2 ? Label::Relevant : Label::NonRelevant;
    pair.label_b = pair.label_a;  // full agreement, no disagreement pool
    paired.pairs.push_back(std::move(pair));
  }

  TempDir tmp;
  RunConfig config = small_config();
  config.min_df = 1;
  CHECK_THROWS_WITH_AS(run_diagnose(corpus, paired, config, tmp.dir("x")),
                       doctest::Contains("disagreement"), DomainError);

  const DiagnoseResult result =
      run_diagnose(corpus, paired, config, tmp.dir("y"), stages_from_string("agree"));
  CHECK(result.written_files.size() == 2);
  const json agreement = load_json(std::filesystem::path(tmp.dir("y")) / "t1" / "agreement.json");
  CHECK(agreement["agreement"]["raw_agreement"] == 1.0);
}

TEST_CASE("agreement stage reproduces hand-computed statistics") {
  Corpus corpus;
  PairedLabelSet paired;
  paired.model_a = "rater-a";
  paired.model_b = "rater-b";
  const std::vector<std::pair<Label, Label>> grid = {
      {Label::Relevant, Label::Relevant},       {Label::Relevant, Label::Relevant},
      {Label::Relevant, Label::Relevant},       {Label::Relevant, Label::NonRelevant},
      {Label::Relevant, Label::NonRelevant},    {Label::NonRelevant, Label::Relevant},
      {Label::NonRelevant, Label::NonRelevant}, {Label::NonRelevant, Label::NonRelevant}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Document doc;
    doc.doc_id = "d" + std::to_string(20 + i);
    doc.abstract_text = "abstract text " + std::to_string(i);
    doc.topics = {"t1"};
    corpus.add(std::move(doc));
    LabeledPair pair;
    pair.doc_id = "d" + std::to_string(20 + i);
    pair.topic = "t1";
    pair.label_a = grid[i].first;
    pair.label_b = grid[i].second;
    paired.pairs.push_back(std::move(pair));
  }

  TempDir tmp;
  run_diagnose(corpus, paired, small_config(), tmp.dir("out"), stages_from_string("agree"));
  const json agreement =
      load_json(std::filesystem::path(tmp.dir("out")) / "t1" / "agreement.json");
  const auto& a = agreement["agreement"];
  CHECK(a["counts"]["both_relevant"] == 3);
  CHECK(a["counts"]["a_only_relevant"] == 2);
  CHECK(a["counts"]["b_only_relevant"] == 1);
  CHECK(a["counts"]["both_nonrelevant"] == 2);
  CHECK(a["raw_agreement"].get<double>() == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(a["kappa"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(a["fractions"]["both_relevant"].get<double>() == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(a["fractions"]["a_only"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("summary regeneration reproduces the written file") {
  const synth::Dataset data = synth::make(small_options());
  TempDir tmp;
  run_diagnose(data.corpus, data.paired, small_config(), tmp.dir("out"));
  const std::filesystem::path topic_dir = std::filesystem::path(tmp.dir("out")) / "t1";
  const std::string original = slurp(topic_dir / "summary.md");
  CHECK(render_topic_markdown(topic_dir.string()) == original);
}

TEST_CASE("combined-disagreement scope runs all stages over a tighter vocabulary") {
  synth::Dataset data = synth::make(small_options());
  // concordant filler pairs stay out of the disagreement pool, so the term
  // "glimmerfill" (df 3) can only enter the full-slice vocabulary
  for (int i = 0; i < 3; ++i) {
    Document doc;
    doc.doc_id = "filler" + std::to_string(i);
    doc.abstract_text = "glimmerfill capacity report " + std::to_string(i);
    doc.topics = {"t1"};
    data.corpus.add(std::move(doc));
    LabeledPair pair;
    pair.doc_id = "filler" + std::to_string(i);
    pair.topic = "t1";
    pair.label_a = Label::Relevant;
    pair.label_b = Label::Relevant;
    data.paired.pairs.push_back(std::move(pair));
  }
  RunConfig config = small_config();
  config.scope = VectorizerScope::CombinedDisagreement;
  config.min_df = 2;
  TempDir tmp;

  run_diagnose(data.corpus, data.paired, config, tmp.dir("out"));
  const std::filesystem::path topic_dir = std::filesystem::path(tmp.dir("out")) / "t1";
  const json contrast = load_json(topic_dir / "contrast.json");
  CHECK(contrast["terms"].size() > 0);
  const json probe = load_json(topic_dir / "probe.json");

  RunConfig full = small_config();
  run_diagnose(data.corpus, data.paired, full, tmp.dir("full"));
  const json probe_full =
      load_json(std::filesystem::path(tmp.dir("full")) / "t1" / "probe.json");
  // the disagreement-only vocabulary is smaller than the full-slice vocabulary
  CHECK(probe["cv"]["n_features"].get<std::size_t>() <
        probe_full["cv"]["n_features"].get<std::size_t>());
}

TEST_CASE("topic directories are sanitized") {
  synth::Options opt = small_options();
  opt.n_docs = 60;
  opt.topic = "t1/extra space";
  const synth::Dataset data = synth::make(opt);
  RunConfig config = small_config();
  config.min_df = 1;
  config.k = 3;
  TempDir tmp;
  run_diagnose(data.corpus, data.paired, config, tmp.dir("out"), stages_from_string("agree"));
  const std::filesystem::path topic_dir =
      std::filesystem::path(tmp.dir("out")) / "t1_extra_space";
  CHECK(std::filesystem::exists(topic_dir / "agreement.json"));
  const json agreement = load_json(topic_dir / "agreement.json");
  CHECK(agreement["topic"] == "t1/extra space");
}

TEST_CASE("run config serialization excludes execution details") {
  RunConfig config = small_config();
  config.threads = 7;
  BackendConfig backend;
  backend.name = "a";
  backend.base_url = "http://localhost:8000";
  backend.model = "rater-a";
  backend.auth_token_env = "RATER_A_TOKEN";
  config.backends.push_back(backend);

  const json j = json::parse(run_config_to_json(config));
  CHECK_FALSE(j.contains("threads"));
  CHECK(j["seed"] == 777);
  CHECK(j["vectorizer"]["scope"] == "full_corpus");
  CHECK(j["retrieval"]["centroid_source"] == "full_corpus");
  CHECK(j["backends"][0]["auth_token_env"] == "RATER_A_TOKEN");
  CHECK(j["probe"]["k_folds"] == 5);
}

}  // TEST_SUITE

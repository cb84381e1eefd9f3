#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "reldiag/errors.hpp"
#include "reldiag/rng.hpp"
#include "reldiag/stopwords.hpp"
#include "reldiag/tfidf.hpp"

using namespace reldiag;

namespace {

const std::vector<std::string> kFixtureDocs = {
    "solar energy energy", "solar power", "wind power energy", "solar wind", "carbon capture",
};

VectorizerModel fixture_model() {
  TfidfConfig config;
  config.min_df = 1;
  config.max_df = 1.0;
  config.stopwords = StopwordSet::None;
  return VectorizerModel::fit(kFixtureDocs, config);
}

std::string random_doc(Rng& rng) {
  static const char* words[] = {"solar", "energy", "wind", "power", "carbon",
                                "capture", "grid",  "model", "data", "x"};
  std::string text;
  const std::size_t len = rng.bounded(12);
  for (std::size_t i = 0; i < len; ++i) {
    if (!text.empty()) text += ' ';
    text += words[rng.bounded(10)];
  }
  return text;
}

}  // namespace

TEST_SUITE("tfidf") {

TEST_CASE("tokenize lowercases and keeps maximal alphanumeric runs of length 2+") {
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("CO2 capture, CO2!") == std::vector<std::string>{"co2", "capture", "co2"});
  CHECK(tokenize("a I x") == std::vector<std::string>{});
  CHECK(tokenize("state-of-the-art") == std::vector<std::string>{"state", "of", "the", "art"});
  CHECK(tokenize("naïve café") == std::vector<std::string>{"na", "ve", "caf"});
}

TEST_CASE("five document fixture reproduces hand-computed vocabulary, idf, and weights") {
  const VectorizerModel model = fixture_model();
  const std::vector<std::string> expected_terms = {"capture", "carbon", "energy",
                                                   "power",   "solar",  "wind"};
  CHECK(model.terms() == expected_terms);

  const double idf_rare = 2.09861228866811;       // df=1 of 5
  const double idf_mid = 1.6931471805599454;      // df=2 of 5
  const double idf_common = 1.4054651081081644;   // df=3 of 5
  const std::vector<double> expected_idf = {idf_rare, idf_rare,   idf_mid,
                                            idf_mid,  idf_common, idf_mid};
  REQUIRE(model.idf().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(model.idf()[i] == doctest::Approx(expected_idf[i]).epsilon(1e-9));
  }

  const auto vectors = model.transform_all(kFixtureDocs);
  const auto dense0 = oracles::densify(vectors[0], 6);
  CHECK(dense0[4] == doctest::Approx(0.38333893017399634).epsilon(1e-9));
  CHECK(dense0[2] == doctest::Approx(0.9236077439113727).epsilon(1e-9));

  const auto dense1 = oracles::densify(vectors[1], 6);
  CHECK(dense1[4] == doctest::Approx(0.6387105775654869).epsilon(1e-9));
  CHECK(dense1[3] == doctest::Approx(0.7694470729725092).epsilon(1e-9));

  const auto dense2 = oracles::densify(vectors[2], 6);
  for (const std::size_t i : {2, 3, 5}) {
    CHECK(dense2[i] == doctest::Approx(0.5773502691896257).epsilon(1e-9));
  }

  const auto dense3 = oracles::densify(vectors[3], 6);
  CHECK(dense3[4] == doctest::Approx(0.6387105775654869).epsilon(1e-9));
  CHECK(dense3[5] == doctest::Approx(0.7694470729725092).epsilon(1e-9));

  const auto dense4 = oracles::densify(vectors[4], 6);
  CHECK(dense4[0] == doctest::Approx(0.7071067811865475).epsilon(1e-9));
  CHECK(dense4[1] == doctest::Approx(0.7071067811865475).epsilon(1e-9));
}

TEST_CASE("idf is exactly 1 when a term appears in every document") {
  TfidfConfig config;
  config.min_df = 1;
  config.max_df = 1.0;
  config.stopwords = StopwordSet::None;
  const std::vector<std::string> docs = {"energy one", "energy two", "energy three"};
  const auto model = VectorizerModel::fit(docs, config);
  const int idx = model.term_index("energy");
  REQUIRE(idx >= 0);
  CHECK(model.idf()[static_cast<std::size_t>(idx)] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("min_df and max_df prune the vocabulary") {
  std::vector<std::string> docs;
  for (int i = 0; i < 10; ++i) {
    std::string text = i < 5 ? "shared common" : "shared keeper";
    if (i == 0) text += " rare";
    docs.push_back(text);
  }
  TfidfConfig config;
  config.min_df = 2;
  config.max_df = 0.95;
  config.stopwords = StopwordSet::None;
  const auto model = VectorizerModel::fit(docs, config);
  CHECK(model.term_index("rare") == -1);    // df 1 < min_df
  CHECK(model.term_index("shared") == -1);  // df 10 > floor(0.95 * 10)
  CHECK(model.terms() == std::vector<std::string>{"common", "keeper"});
}

TEST_CASE("stopwords are excluded from the vocabulary") {
  TfidfConfig config;
  config.min_df = 1;
  const std::vector<std::string> docs = {"the solar and energy", "the wind and energy"};
  const auto model = VectorizerModel::fit(docs, config);
  CHECK(model.term_index("the") == -1);
  CHECK(model.term_index("and") == -1);
  CHECK(model.term_index("solar") >= 0);
  CHECK(is_english_stopword("the"));
  CHECK(!is_english_stopword("solar"));
}

TEST_CASE("fit rejects empty input and empty effective vocabulary") {
  TfidfConfig config;
  const std::vector<std::string> none;
  CHECK_THROWS_AS(VectorizerModel::fit(none, config), DomainError);
  // every token is a stopword, so nothing survives
  const std::vector<std::string> noise = {"the and of", "and the"};
  CHECK_THROWS_AS(VectorizerModel::fit(noise, config), DomainError);
}

TEST_CASE("transform ignores out-of-vocabulary terms and flags empty vectors") {
  const VectorizerModel model = fixture_model();
  const SparseVector empty = model.transform("quantum flux");
  CHECK(empty.empty());
  CHECK(empty.l2_norm() == 0.0);

  const SparseVector mixed = model.transform("solar quantum");
  REQUIRE(mixed.nnz() == 1);
  CHECK(mixed.values[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every non-empty transform is unit norm across 10000 random documents") {
  const VectorizerModel model = fixture_model();
  Rng rng(417);
  std::size_t non_empty = 0;
  for (int i = 0; i < 10000; ++i) {
    const SparseVector v = model.transform(random_doc(rng));
    if (v.empty()) continue;
    ++non_empty;
    CHECK(v.l2_norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 1; j < v.indices.size(); ++j) {
      CHECK(v.indices[j] > v.indices[j - 1]);  // strictly increasing indices
    }
  }
  CHECK(non_empty > 8000);
}

TEST_CASE("mean_vector matches a dense brute-force mean") {
  const VectorizerModel model = fixture_model();
  const auto vectors = model.transform_all(kFixtureDocs);
  const auto mean = mean_vector(vectors, model.vocabulary_size());
  const auto expected = oracles::dense_mean(vectors, model.vocabulary_size());
  REQUIRE(mean.size() == expected.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    CHECK(mean[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
  const std::vector<SparseVector> no_vectors;
  CHECK_THROWS_AS(mean_vector(no_vectors, 6), DomainError);

  // single vector mean is the vector itself
  const std::vector<SparseVector> one = {vectors[1]};
  const auto single = mean_vector(one, model.vocabulary_size());
  const auto dense1 = oracles::densify(vectors[1], 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(single[i] == doctest::Approx(dense1[i]));
}

}  // TEST_SUITE

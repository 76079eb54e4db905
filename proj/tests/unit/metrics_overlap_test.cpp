#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "json.hpp"
#include "seqeval/metrics.hpp"
#include "test_corpus.hpp"

using namespace seqeval;
using namespace seqeval::metrics;
using seqeval::testing::word_refs;
using seqeval::testing::words;

namespace {

nlohmann::json cider_fixture() {
  std::ifstream in(std::string(SEQEVAL_FIXTURE_DIR) + "/offline_oracles.json");
  return nlohmann::json::parse(in)["cider"];
}

}  // namespace

TEST(Rouge, UnigramHandCase) {
  // P = 2/3, R = 2/3.
  EXPECT_NEAR(rouge_n(words("a b x"), word_refs({"a b y"}), 1), 200.0 / 3.0, 1e-12);
  EXPECT_EQ(rouge_n(words("a"), word_refs({"a"}), 2), 0.0);
}

TEST(Rouge, LcsHandCase) {
  // LCS("a b c d", "a c d") = 3; P = 3/4, R = 1.
  EXPECT_EQ(lcs_length(words("a b c d"), words("a c d")), 3u);
  const double p = 0.75, r = 1.0, b2 = 1.44;
  EXPECT_NEAR(rouge_l(words("a b c d"), word_refs({"a c d"})), 100 * (1 + b2) * p * r / (r + b2 * p), 1e-12);
  EXPECT_NEAR(rouge_l(words("a b c d"), word_refs({"a c d"})), 87.98, 0.01);
}

TEST(Rouge, BestReferenceAndBounds) {
  EXPECT_DOUBLE_EQ(rouge_l(words("a b"), word_refs({"x", "a b"})), 100.0);
  std::mt19937 rng(2);
  const auto c = seqeval::testing::synthetic_corpus(200, 8, 2, 30);
  for (std::size_t i = 0; i < c.hypotheses.size(); ++i) {
    const auto h = words(c.hypotheses[i]);
    const auto r = word_refs(c.references[i]);
    for (double s : {rouge_n(h, r, 1), rouge_n(h, r, 2), rouge_l(h, r)}) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 100.0 + 1e-9);
    }
    EXPECT_LE(rouge_n(h, r, 2), rouge_n(h, r, 1) + 1e-9);
  }
}

TEST(Cider, OfflineOracle) {
  const auto o = cider_fixture();
  std::vector<std::string> hyps = o["hypotheses"];
  PerExampleReferences refs = o["references"];
  const auto registry = builtin_scorers();
  const auto report = calculate_score(registry, "cider", hyps, refs);
  EXPECT_NEAR(report.corpus_score, o["corpus"].get<double>(), 1e-9);
  const std::vector<double> expected = o["sentences"];
  ASSERT_EQ(report.sentence_scores.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(report.sentence_scores[i], expected[i], 1e-9);
}

TEST(Cider, RequiresIdfTable) {
  EXPECT_THROW(cider(words("a"), word_refs({"a"}), nullptr), ContractViolation);
}

TEST(Cider, IdfDefinition) {
  const std::vector<std::vector<std::vector<std::string>>> docs{word_refs({"a b", "a c"}), word_refs({"b d"})};
  const IdfTable t = build_idf(docs);
  EXPECT_EQ(t.document_count(), 2u);
  EXPECT_EQ(t.document_frequency("a"), 1u);
  EXPECT_EQ(t.document_frequency("b"), 2u);
  EXPECT_DOUBLE_EQ(t.idf("b"), 0.0);
  EXPECT_DOUBLE_EQ(t.idf("a"), std::log(2.0));
  EXPECT_DOUBLE_EQ(t.idf("zzz"), std::log(2.0));
}

TEST(Cider, IdentityScoresTen) {
  // Distinct vocabulary per example keeps every IDF weight positive.
  std::vector<std::string> hyps;
  PerExampleReferences refs;
  for (int i = 0; i < 5; ++i) {
    std::string s;
    for (int k = 0; k < 6; ++k) s += "w" + std::to_string(i) + "_" + std::to_string(k) + " ";
    hyps.push_back(s);
    refs.push_back({s});
  }
  const auto registry = builtin_scorers();
  const auto r = calculate_score(registry, "cider", hyps, refs);
  EXPECT_NEAR(r.corpus_score, 10.0, 1e-9);
}

TEST(Cider, IdfIsComputedOverWholeCorpus) {
  // Scoring a subset in isolation differs from the full-corpus sentence score.
  const auto o = cider_fixture();
  std::vector<std::string> hyps = o["hypotheses"];
  PerExampleReferences refs = o["references"];
  const auto registry = builtin_scorers();
  const auto full = calculate_score(registry, "cider", hyps, refs);
  const auto alone = calculate_score(registry, "cider", std::vector<std::string>{hyps[0]}, PerExampleReferences{refs[0]});
  EXPECT_NE(full.sentence_scores[0], alone.sentence_scores[0]);
}

TEST(Cider, ShortIdentityUsesAvailableOrders) {
  const std::vector<std::string> hyps = {"red fox", "a big dog", "cats nap on mats", "one"};
  PerExampleReferences refs;
  for (const auto& h : hyps) refs.push_back({h});
  const auto registry = builtin_scorers();
  const auto r = calculate_score(registry, "cider", hyps, refs);
  for (double s : r.sentence_scores) EXPECT_NEAR(s, 10.0, 1e-9);
}

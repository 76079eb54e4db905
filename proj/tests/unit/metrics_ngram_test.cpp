#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "json.hpp"
#include "seqeval/metrics.hpp"
#include "test_corpus.hpp"

using namespace seqeval;
using namespace seqeval::metrics;
using seqeval::testing::word_refs;
using seqeval::testing::words;

namespace {

const std::string kFixtures = SEQEVAL_FIXTURE_DIR;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

// Straightforward BLEU over std::map n-gram counts, used as a reference
// implementation for the optimized statistics path.
using Gram = std::vector<std::string>;

std::map<Gram, int> naive_grams(const std::vector<std::string>& w, std::size_t n) {
  std::map<Gram, int> m;
  for (std::size_t i = 0; i + n <= w.size(); ++i) ++m[Gram(w.begin() + i, w.begin() + i + n)];
  return m;
}

double naive_corpus_bleu(const std::vector<std::string>& hyps, const PerExampleReferences& refs) {
  double match[4] = {}, total[4] = {}, c = 0, r = 0;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto h = words(hyps[k]);
    const auto rs = word_refs(refs[k]);
    c += static_cast<double>(h.size());
    std::size_t best = 0, diff = SIZE_MAX;
    for (const auto& ref : rs) {
      const std::size_t d = ref.size() > h.size() ? ref.size() - h.size() : h.size() - ref.size();
      if (d < diff || (d == diff && ref.size() < best)) {
        diff = d;
        best = ref.size();
      }
    }
    r += static_cast<double>(best);
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<Gram, int> ceiling;
      for (const auto& ref : rs) {
        for (const auto& [g, cnt] : naive_grams(ref, n)) ceiling[g] = std::max(ceiling[g], cnt);
      }
      for (const auto& [g, cnt] : naive_grams(h, n)) {
        match[n - 1] += std::min(cnt, ceiling[g]);
        total[n - 1] += cnt;
      }
    }
  }
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) {
    if (match[n] == 0) return 0.0;
    log_sum += std::log(match[n] / total[n]);
  }
  const double bp = c < r ? std::exp(1 - r / c) : 1.0;
  return 100 * bp * std::exp(log_sum / 4);
}

struct ExternalCorpus {
  std::vector<std::string> hyps;
  PerExampleReferences two_refs, ref0;
  nlohmann::json expected;
};

const ExternalCorpus& external() {
  static const ExternalCorpus c = [] {
    ExternalCorpus e;
    const std::string dir = kFixtures + "/external_oracle/";
    e.hyps = seqeval::testing::read_lines(dir + "hypothesis.txt");
    const auto r0 = seqeval::testing::read_lines(dir + "reference_0.txt");
    const auto r1 = seqeval::testing::read_lines(dir + "reference_1.txt");
    for (std::size_t i = 0; i < e.hyps.size(); ++i) {
      e.two_refs.push_back({r0[i], r1[i]});
      e.ref0.push_back({r0[i]});
    }
    e.expected = load_json(dir + "expected.json")["values"];
    return e;
  }();
  return c;
}

double corpus(const std::string& id, const std::vector<std::string>& hyps, const PerExampleReferences& refs,
              std::size_t workers = 1) {
  static const auto registry = builtin_scorers();
  RunOptions opt;
  opt.workers = workers;
  return calculate_score(registry, id, hyps, refs, opt).corpus_score;
}

}  // namespace

TEST(Bleu, IdentityIsPerfect) {
  const auto h = words("the cat sat on the mat");
  const std::vector<std::vector<std::string>> refs{h};
  EXPECT_DOUBLE_EQ(sentence_bleu(bleu_stats(h, refs)), 100.0);
  EXPECT_DOUBLE_EQ(corpus_bleu(bleu_stats(h, refs)), 100.0);
}

TEST(Bleu, NoUnigramOverlapIsZero) {
  const auto refs = word_refs({"x y z w"});
  EXPECT_EQ(sentence_bleu(bleu_stats(words("a b c d"), refs)), 0.0);
  EXPECT_EQ(corpus_bleu(bleu_stats(words("a b c d"), refs)), 0.0);
}

TEST(Bleu, BrevityPenaltyAndClosestLength) {
  EXPECT_DOUBLE_EQ(brevity_penalty(5, 5), 1.0);
  EXPECT_DOUBLE_EQ(brevity_penalty(6, 5), 1.0);
  EXPECT_NEAR(brevity_penalty(4, 6), std::exp(-0.5), 1e-15);
  EXPECT_EQ(closest_ref_length(5, word_refs({"a b c d", "a b c d e f"})), 4u);
  EXPECT_EQ(closest_ref_length(5, word_refs({"a b c d e f g", "a b c d e f"})), 6u);
}

TEST(Bleu, HandComputedSentence) {
  // hyp "a b c d" vs ref "a b c e": p1 = 3/4, p2 = 2/3, p3 = 1/2, p4 = 0/1.
  const BleuStats s = bleu_stats(words("a b c d"), word_refs({"a b c e"}));
  EXPECT_EQ(s.matches, (std::array<double, 4>{3, 2, 1, 0}));
  EXPECT_EQ(s.totals, (std::array<double, 4>{4, 3, 2, 1}));
  EXPECT_EQ(corpus_bleu(s), 0.0);
  const double smoothed = 100 * std::exp((std::log(0.75) + std::log(3.0 / 4) + std::log(2.0 / 3) + std::log(0.5)) / 4);
  EXPECT_NEAR(sentence_bleu(s), smoothed, 1e-12);
}

TEST(Bleu, ShortHypothesisUsesEffectiveOrders) {
  // Only unigrams and bigrams exist.
  const BleuStats s = bleu_stats(words("a b"), word_refs({"a b"}));
  EXPECT_DOUBLE_EQ(corpus_bleu(s), 100.0);
}

TEST(Bleu, MatchesNaiveImplementationOnRandomCorpora) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = seqeval::testing::synthetic_corpus(200, seed, 1 + seed % 3, 40);
    EXPECT_NEAR(corpus("bleu", c.hypotheses, c.references), naive_corpus_bleu(c.hypotheses, c.references), 1e-9);
  }
}

TEST(Bleu, ExternalOracle) {
  const auto& e = external();
  EXPECT_NEAR(corpus("bleu", e.hyps, e.two_refs), e.expected["bleu_two_refs"].get<double>(), 1e-6);
  EXPECT_NEAR(corpus("bleu", e.hyps, e.ref0), e.expected["bleu_ref0"].get<double>(), 1e-6);
}

TEST(Bleu, SentenceScoresBounded) {
  const auto registry = builtin_scorers();
  const auto c = seqeval::testing::synthetic_corpus(300, 77, 2, 30);
  const auto r = calculate_score(registry, "bleu", c.hypotheses, c.references);
  for (double s : r.sentence_scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 100.0);
  }
}

TEST(Gleu, HandCase) {
  const auto o = load_json(kFixtures + "/offline_oracles.json")["gleu"];
  const auto refs = word_refs({o["reference"].get<std::string>()});
  EXPECT_NEAR(gleu(words(o["hypothesis"].get<std::string>()), refs), o["sentence"].get<double>(), 1e-12);
}

TEST(Gleu, IdentityAndDisjoint) {
  EXPECT_DOUBLE_EQ(gleu(words("a b c"), word_refs({"a b c"})), 100.0);
  EXPECT_EQ(gleu(words("a b c"), word_refs({"d e f"})), 0.0);
}

TEST(Gleu, SymmetricInSingleReference) {
  std::mt19937 rng(5);
  for (int t = 0; t < 50; ++t) {
    std::string a, b;
    for (int k = 0; k < 6; ++k) a += std::string(1, static_cast<char>('a' + rng() % 4)) + " ";
    for (int k = 0; k < 4; ++k) b += std::string(1, static_cast<char>('a' + rng() % 4)) + " ";
    EXPECT_DOUBLE_EQ(gleu(words(a), word_refs({b})), gleu(words(b), word_refs({a})));
  }
}

TEST(Nist, OfflineOracle) {
  const auto o = load_json(kFixtures + "/offline_oracles.json")["nist"];
  std::vector<std::string> hyps = o["hypotheses"];
  PerExampleReferences refs;
  for (const auto& r : o["references"]) refs.push_back({r.get<std::string>()});
  EXPECT_NEAR(corpus("nist", hyps, refs), o["corpus"].get<double>(), 1e-9);
}

TEST(Nist, LengthPenalty) {
  EXPECT_DOUBLE_EQ(nist_length_penalty(10, 10), 1.0);
  EXPECT_DOUBLE_EQ(nist_length_penalty(12, 10), 1.0);
  EXPECT_NEAR(nist_length_penalty(2, 3), 0.5, 1e-12);
}

TEST(Nist, DisjointIsZeroAndNonNegative) {
  EXPECT_EQ(corpus("nist", {"p q r"}, {{"a b c"}}), 0.0);
  const auto c = seqeval::testing::synthetic_corpus(100, 3);
  EXPECT_GE(corpus("nist", c.hypotheses, c.references), 0.0);
}

TEST(Chrf, HandCases) {
  EXPECT_NEAR(chrf("abc", std::vector<std::string>{"abd"}), 38.888888888888886, 1e-9);
  EXPECT_DOUBLE_EQ(chrf("a b", std::vector<std::string>{"ab"}), 100.0);
  EXPECT_DOUBLE_EQ(chrf("same text", std::vector<std::string>{"same text"}), 100.0);
  EXPECT_EQ(chrf("xyz", std::vector<std::string>{"abc"}), 0.0);
}

TEST(Chrf, ExternalOracle) {
  const auto& e = external();
  EXPECT_NEAR(corpus("chrf", e.hyps, e.two_refs), e.expected["chrf_two_refs"].get<double>(), 1e-6);
  EXPECT_NEAR(corpus("chrf", e.hyps, e.ref0), e.expected["chrf_ref0"].get<double>(), 1e-6);
}

TEST(Ribes, HandCases) {
  EXPECT_NEAR(ribes(words("c a b"), word_refs({"a b c"})), 100.0 / 3.0, 1e-9);
  EXPECT_EQ(ribes(words("d c b a"), word_refs({"a b c d"})), 0.0);
  EXPECT_DOUBLE_EQ(ribes(words("a b c d"), word_refs({"a b c d"})), 100.0);
  EXPECT_DOUBLE_EQ(ribes(words("a a a"), word_refs({"a a a"})), 100.0);
  EXPECT_EQ(ribes(words("x y"), word_refs({"a b"})), 0.0);
}

TEST(Ribes, KendallTau) {
  EXPECT_DOUBLE_EQ(normalized_kendall_tau(std::vector<std::size_t>{0, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(normalized_kendall_tau(std::vector<std::size_t>{2, 1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(normalized_kendall_tau(std::vector<std::size_t>{2, 0, 1}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(normalized_kendall_tau(std::vector<std::size_t>{4}), 1.0);
}

TEST(Ribes, AlignmentUsesContextForRepeatedWords) {
  // "the" occurs twice; bigram context disambiguates.
  EXPECT_EQ(ribes_alignment(words("the cat saw the dog"), words("the dog saw the cat")),
            (std::vector<std::size_t>{3, 4, 2, 0, 1}));
}

TEST(NgramMetrics, IdentityGivesMaximum) {
  const auto registry = builtin_scorers();
  const auto c = seqeval::testing::synthetic_corpus(80, 21, 1, 500, 5, 20);
  PerExampleReferences self;
  for (const auto& h : c.hypotheses) self.push_back({h});
  for (const char* id : {"bleu", "chrf", "gleu", "ribes", "rouge_1", "rouge_2", "rouge_l"}) {
    const auto r = calculate_score(registry, id, c.hypotheses, self);
    EXPECT_NEAR(r.corpus_score, 100.0, 1e-9) << id;
  }
}

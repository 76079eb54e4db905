#pragma once

// ROUGE-1/2/L and CIDEr-D.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/text.hpp"

namespace seqeval::metrics {

using WordSpan = std::span<const std::string>;

/// ROUGE-N F1 against the best reference.
inline double rouge_n(WordSpan hyp, std::span<const std::vector<std::string>> refs, std::size_t n) {
  const NGramProfile h = word_ngrams(hyp, n);
  double best = 0.0;
  if (h.empty()) return best;
  for (const auto& r : refs) {
    const NGramProfile rp = word_ngrams(r, n);
    if (rp.empty()) continue;
    const double matches = static_cast<double>(clipped_matches(h, rp));
    if (matches == 0) continue;
    const double p = matches / static_cast<double>(h.total());
    const double rec = matches / static_cast<double>(rp.total());
    best = std::max(best, 100.0 * 2 * p * rec / (p + rec));
  }
  return best;
}

inline std::size_t lcs_length(WordSpan a, WordSpan b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline constexpr double kRougeLBeta = 1.2;

/// Sentence-level ROUGE-L: LCS F-measure with recall weight beta = 1.2,
/// best reference.
inline double rouge_l(WordSpan hyp, std::span<const std::vector<std::string>> refs) {
  double best = 0.0;
  if (hyp.empty()) return best;
  for (const auto& r : refs) {
    if (r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(hyp, r));
    if (lcs == 0) continue;
    const double p = lcs / static_cast<double>(hyp.size());
    const double rec = lcs / static_cast<double>(r.size());
    const double b2 = kRougeLBeta * kRougeLBeta;
    best = std::max(best, 100.0 * (1 + b2) * p * rec / (rec + b2 * p));
  }
  return best;
}

inline constexpr std::size_t kCiderOrder = 4;
inline constexpr double kCiderSigma = 6.0;

/// Document frequencies of 1..4-grams, where a document is the reference
/// set of one example.
class IdfTable final : public CorpusContext {
 public:
  IdfTable() = default;

  std::size_t document_count() const noexcept { return documents_; }

  std::size_t document_frequency(const std::string& ngram) const {
    auto it = df_.find(ngram);
    return it == df_.end() ? 0 : it->second;
  }

  /// ln(N / max(1, df)); n-grams never seen in a reference get the largest weight.
  double idf(const std::string& ngram) const {
    if (documents_ == 0) return 0.0;
    return log_documents_ - std::log(static_cast<double>(std::max<std::size_t>(1, document_frequency(ngram))));
  }

  friend IdfTable build_idf(std::span<const std::vector<std::vector<std::string>>> example_refs);

 private:
  std::size_t documents_ = 0;
  double log_documents_ = 0.0;
  std::unordered_map<std::string, std::size_t> df_;
};

inline IdfTable build_idf(std::span<const std::vector<std::vector<std::string>>> example_refs) {
  IdfTable t;
  t.documents_ = example_refs.size();
  t.log_documents_ = t.documents_ ? std::log(static_cast<double>(t.documents_)) : 0.0;
  std::unordered_set<std::string> seen;
  for (const auto& refs : example_refs) {
    seen.clear();
    for (const auto& r : refs) {
      for (std::size_t n = 1; n <= kCiderOrder; ++n) {
        for (const auto& [g, _] : word_ngrams(r, n).counts()) seen.insert(g);
      }
    }
    for (const auto& g : seen) ++t.df_[g];
  }
  return t;
}

namespace detail {

struct TfIdfVector {
  std::array<std::unordered_map<std::string, double>, kCiderOrder> weights;
  std::array<double, kCiderOrder> norms{};
  std::size_t length = 0;
};

inline TfIdfVector tfidf(WordSpan tokens, const IdfTable& idf) {
  TfIdfVector v;
  v.length = tokens.size();
  for (std::size_t n = 1; n <= kCiderOrder; ++n) {
    double sq = 0;
    for (const auto& [g, tf] : word_ngrams(tokens, n).counts()) {
      const double w = tf * idf.idf(g);
      v.weights[n - 1].emplace(g, w);
      sq += w * w;
    }
    v.norms[n - 1] = std::sqrt(sq);
  }
  return v;
}

// Per-order clipped cosine similarity times the Gaussian length penalty.
inline std::array<double, kCiderOrder> cider_similarity(const TfIdfVector& hyp, const TfIdfVector& ref) {
  std::array<double, kCiderOrder> val{};
  const double delta = static_cast<double>(hyp.length) - static_cast<double>(ref.length);
  const double penalty = std::exp(-(delta * delta) / (2 * kCiderSigma * kCiderSigma));
  for (std::size_t n = 0; n < kCiderOrder; ++n) {
    if (hyp.norms[n] == 0 || ref.norms[n] == 0) continue;
    double dot = 0;
    for (const auto& [g, wh] : hyp.weights[n]) {
      auto it = ref.weights[n].find(g);
      if (it != ref.weights[n].end()) dot += std::min(wh, it->second) * it->second;
    }
    val[n] = dot / (hyp.norms[n] * ref.norms[n]) * penalty;
  }
  return val;
}

}  // namespace detail

/// CIDEr-D on the 0..10 scale: mean over orders 1..4 of the clipped TF-IDF
/// cosine, averaged over references, with a Gaussian length penalty.
/// Orders longer than the hypothesis are left out of the mean, so a
/// three-token exact match still scores 10.
inline double cider(WordSpan hyp, std::span<const std::vector<std::string>> refs, const IdfTable* idf) {
  if (idf == nullptr) throw ContractViolation("cider requires an IDF table built from the corpus references");
  if (refs.empty()) return 0.0;
  const detail::TfIdfVector h = detail::tfidf(hyp, *idf);
  std::array<double, kCiderOrder> sum{};
  for (const auto& r : refs) {
    const auto sim = detail::cider_similarity(h, detail::tfidf(r, *idf));
    for (std::size_t n = 0; n < kCiderOrder; ++n) sum[n] += sim[n];
  }
  const std::size_t orders = std::min(kCiderOrder, hyp.size());
  if (orders == 0) return 0.0;
  double mean = 0;
  for (std::size_t n = 0; n < orders; ++n) mean += sum[n];
  mean /= static_cast<double>(orders);
  return 10.0 * mean / static_cast<double>(refs.size());
}

template <std::size_t N>
class RougeNScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const double s = rouge_n(ex.hypothesis, ex.references, N);
    out[0] = s;
    out[1] = 1.0;
    return s;
  }

  double reduce(std::span<const double> m) const override { return m[1] > 0 ? m[0] / m[1] : 0.0; }
};

class RougeLScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const double s = rouge_l(ex.hypothesis, ex.references);
    out[0] = s;
    out[1] = 1.0;
    return s;
  }

  double reduce(std::span<const double> m) const override { return m[1] > 0 ? m[0] / m[1] : 0.0; }
};

class CiderScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {true, 0.0, 10.0, true}; }
  std::size_t stats_width() const override { return 2; }

  std::unique_ptr<const CorpusContext> prepare(std::span<const TokenizedExample> corpus) const override {
    std::vector<std::vector<std::vector<std::string>>> refs;
    refs.reserve(corpus.size());
    for (const auto& ex : corpus) refs.push_back(ex.references);
    return std::make_unique<IdfTable>(build_idf(refs));
  }

  double score_example(const TokenizedExample& ex, const CorpusContext* ctx, std::span<double> out) const override {
    const double s = cider(ex.hypothesis, ex.references, static_cast<const IdfTable*>(ctx));
    out[0] = s;
    out[1] = 1.0;
    return s;
  }

  double reduce(std::span<const double> m) const override { return m[1] > 0 ? m[0] / m[1] : 0.0; }
};

}  // namespace seqeval::metrics

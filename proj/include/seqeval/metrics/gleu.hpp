#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/text.hpp"

namespace seqeval::metrics {

inline constexpr std::size_t kGleuMaxOrder = 4;

struct GleuCounts {
  double matches = 0;
  double denominator = 0;  ///< max(hypothesis n-grams, reference n-grams), orders 1..4 pooled
};

/// Pooled 1..4-gram counts against the reference maximizing min(P, R).
inline GleuCounts gleu_counts(std::span<const std::string> hyp, std::span<const std::vector<std::string>> refs) {
  std::vector<NGramProfile> hyp_profiles;
  for (std::size_t n = 1; n <= kGleuMaxOrder; ++n) hyp_profiles.push_back(word_ngrams(hyp, n));
  GleuCounts best;
  double best_ratio = -1.0;
  for (const auto& r : refs) {
    double matches = 0, hyp_total = 0, ref_total = 0;
    for (std::size_t n = 1; n <= kGleuMaxOrder; ++n) {
      const NGramProfile rp = word_ngrams(r, n);
      matches += static_cast<double>(clipped_matches(hyp_profiles[n - 1], rp));
      hyp_total += static_cast<double>(hyp_profiles[n - 1].total());
      ref_total += static_cast<double>(rp.total());
    }
    const double denom = std::max(hyp_total, ref_total);
    const double ratio = denom > 0 ? matches / denom : 0.0;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = {matches, denom};
    }
  }
  return best;
}

inline double gleu_from_counts(double matches, double denominator) {
  return denominator > 0 ? 100.0 * matches / denominator : 0.0;
}

/// Sentence GLEU: 100 * min(precision, recall) over pooled 1..4-grams.
inline double gleu(std::span<const std::string> hyp, std::span<const std::vector<std::string>> refs) {
  const GleuCounts c = gleu_counts(hyp, refs);
  return gleu_from_counts(c.matches, c.denominator);
}

class GleuScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const GleuCounts c = gleu_counts(ex.hypothesis, ex.references);
    out[0] = c.matches;
    out[1] = c.denominator;
    return gleu_from_counts(c.matches, c.denominator);
  }

  double reduce(std::span<const double> merged) const override { return gleu_from_counts(merged[0], merged[1]); }
};

}  // namespace seqeval::metrics

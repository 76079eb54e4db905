#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/text.hpp"

namespace seqeval::metrics {

inline constexpr std::size_t kChrfOrder = 6;
inline constexpr double kChrfBeta = 2.0;

/// Per character order: hypothesis n-grams, reference n-grams, matches.
using ChrfStats = std::array<double, 3 * kChrfOrder>;

/// chrF from (possibly merged) statistics. Precision and recall are averaged
/// over the orders where both sides have n-grams, then combined as F-beta.
inline double chrf_from_stats(std::span<const double> s) {
  double avg_p = 0, avg_r = 0;
  std::size_t effective = 0;
  for (std::size_t n = 0; n < kChrfOrder; ++n) {
    const double hyp = s[3 * n], ref = s[3 * n + 1], match = s[3 * n + 2];
    if (hyp > 0 && ref > 0) {
      avg_p += match / hyp;
      avg_r += match / ref;
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avg_p /= static_cast<double>(effective);
  avg_r /= static_cast<double>(effective);
  if (avg_p + avg_r <= 0) return 0.0;
  const double b2 = kChrfBeta * kChrfBeta;
  return 100.0 * (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r);
}

/// Statistics against the reference with the highest sentence chrF (first wins ties).
inline ChrfStats chrf_stats(std::string_view hyp, std::span<const std::string> refs, bool strip_whitespace = true) {
  std::array<NGramProfile, kChrfOrder> hyp_profiles;
  for (std::size_t n = 1; n <= kChrfOrder; ++n) hyp_profiles[n - 1] = char_ngrams(hyp, n, strip_whitespace);
  ChrfStats best{};
  double best_f = -1.0;
  for (const auto& r : refs) {
    ChrfStats s{};
    for (std::size_t n = 1; n <= kChrfOrder; ++n) {
      const NGramProfile rp = char_ngrams(r, n, strip_whitespace);
      s[3 * (n - 1)] = static_cast<double>(hyp_profiles[n - 1].total());
      s[3 * (n - 1) + 1] = static_cast<double>(rp.total());
      s[3 * (n - 1) + 2] = static_cast<double>(clipped_matches(hyp_profiles[n - 1], rp));
    }
    const double f = chrf_from_stats(s);
    if (f > best_f) {
      best_f = f;
      best = s;
    }
  }
  return best;
}

inline double chrf(std::string_view hyp, std::span<const std::string> refs) { return chrf_from_stats(chrf_stats(hyp, refs)); }

class ChrfScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return 3 * kChrfOrder; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    // Tokens carry the configured normalization (NFC, case); whitespace is stripped anyway.
    const std::string hyp = join_tokens(ex.hypothesis);
    std::vector<std::string> refs;
    refs.reserve(ex.references.size());
    for (const auto& r : ex.references) refs.push_back(join_tokens(r));
    const ChrfStats s = chrf_stats(hyp, refs);
    std::copy(s.begin(), s.end(), out.begin());
    return chrf_from_stats(s);
  }

  double reduce(std::span<const double> merged) const override { return chrf_from_stats(merged); }
};

}  // namespace seqeval::metrics

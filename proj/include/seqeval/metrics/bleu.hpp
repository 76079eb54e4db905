#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/text.hpp"

namespace seqeval::metrics {

inline constexpr std::size_t kBleuOrder = 4;

/// Sufficient statistics of BLEU for one example or a merged corpus.
struct BleuStats {
  std::array<double, kBleuOrder> matches{};
  std::array<double, kBleuOrder> totals{};
  double hyp_len = 0;
  double ref_len = 0;

  static constexpr std::size_t width = 2 * kBleuOrder + 2;

  void write(std::span<double> out) const {
    for (std::size_t n = 0; n < kBleuOrder; ++n) {
      out[n] = matches[n];
      out[kBleuOrder + n] = totals[n];
    }
    out[2 * kBleuOrder] = hyp_len;
    out[2 * kBleuOrder + 1] = ref_len;
  }

  static BleuStats read(std::span<const double> in) {
    BleuStats s;
    for (std::size_t n = 0; n < kBleuOrder; ++n) {
      s.matches[n] = in[n];
      s.totals[n] = in[kBleuOrder + n];
    }
    s.hyp_len = in[2 * kBleuOrder];
    s.ref_len = in[2 * kBleuOrder + 1];
    return s;
  }

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < kBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

/// Reference length closest to the hypothesis length; ties go to the shorter one.
inline std::size_t closest_ref_length(std::size_t hyp_len, std::span<const std::vector<std::string>> refs) {
  std::size_t best = 0;
  std::size_t best_diff = static_cast<std::size_t>(-1);
  for (const auto& r : refs) {
    const std::size_t len = r.size();
    const std::size_t diff = len > hyp_len ? len - hyp_len : hyp_len - len;
    if (diff < best_diff || (diff == best_diff && len < best)) {
      best = len;
      best_diff = diff;
    }
  }
  return best;
}

inline BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::vector<std::string>> refs) {
  BleuStats s;
  s.hyp_len = static_cast<double>(hyp.size());
  s.ref_len = static_cast<double>(closest_ref_length(hyp.size(), refs));
  std::vector<NGramProfile> ref_profiles;
  ref_profiles.reserve(refs.size());
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    const NGramProfile h = word_ngrams(hyp, n);
    ref_profiles.clear();
    for (const auto& r : refs) ref_profiles.push_back(word_ngrams(r, n));
    s.matches[n - 1] = static_cast<double>(clipped_matches(h, ref_profiles));
    s.totals[n - 1] = static_cast<double>(h.total());
  }
  return s;
}

inline double brevity_penalty(double hyp_len, double ref_len) {
  if (hyp_len <= 0) return 0.0;
  return hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
}

/// Sentence BLEU with add-one smoothing of numerator and denominator for
/// orders >= 2. Unigram precision is unsmoothed, so no unigram match gives 0.
inline double sentence_bleu(const BleuStats& s) {
  if (s.hyp_len <= 0 || s.matches[0] <= 0) return 0.0;
  double log_sum = std::log(s.matches[0] / s.totals[0]);
  for (std::size_t n = 1; n < kBleuOrder; ++n) {
    log_sum += std::log((s.matches[n] + 1.0) / (s.totals[n] + 1.0));
  }
  return 100.0 * brevity_penalty(s.hyp_len, s.ref_len) * std::exp(log_sum / kBleuOrder);
}

/// Corpus BLEU from merged statistics. Orders with no hypothesis n-grams at
/// all are left out of the geometric mean; a zero match count at any other
/// order yields 0.
inline double corpus_bleu(const BleuStats& s) {
  if (s.hyp_len <= 0) return 0.0;
  double log_sum = 0.0;
  std::size_t effective = 0;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    if (s.totals[n] <= 0) continue;
    if (s.matches[n] <= 0) return 0.0;
    log_sum += std::log(s.matches[n] / s.totals[n]);
    ++effective;
  }
  if (effective == 0) return 0.0;
  return 100.0 * brevity_penalty(s.hyp_len, s.ref_len) * std::exp(log_sum / static_cast<double>(effective));
}

class BleuScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return BleuStats::width; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const BleuStats s = bleu_stats(ex.hypothesis, ex.references);
    s.write(out);
    return sentence_bleu(s);
  }

  double reduce(std::span<const double> merged) const override { return corpus_bleu(BleuStats::read(merged)); }
};

}  // namespace seqeval::metrics

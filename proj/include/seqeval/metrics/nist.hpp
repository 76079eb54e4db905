#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/text.hpp"

namespace seqeval::metrics {

inline constexpr std::size_t kNistOrder = 5;

/// Information weights info(w1..wn) = log2(count(w1..wn-1) / count(w1..wn)),
/// counted over every reference of the evaluation corpus. For unigrams the
/// prefix count is the total number of reference words.
class NistInfo final : public CorpusContext {
 public:
  static NistInfo build(std::span<const std::vector<std::vector<std::string>>> example_refs) {
    NistInfo info;
    std::unordered_map<std::string, double> counts;
    double total_words = 0;
    for (const auto& refs : example_refs) {
      for (const auto& r : refs) {
        total_words += static_cast<double>(r.size());
        for (std::size_t n = 1; n <= kNistOrder; ++n) {
          for (const auto& [g, c] : word_ngrams(r, n).counts()) counts[g] += c;
        }
      }
    }
    for (const auto& [g, c] : counts) {
      const auto space = g.rfind(' ');
      double prefix = total_words;
      if (space != std::string::npos) prefix = counts.at(g.substr(0, space));
      info.weights_[g] = std::log2(prefix / c);
    }
    return info;
  }

  double weight(const std::string& ngram) const {
    auto it = weights_.find(ngram);
    return it == weights_.end() ? 0.0 : it->second;
  }

 private:
  std::unordered_map<std::string, double> weights_;
};

/// Per order: information-weighted matches and hypothesis n-gram count;
/// then hypothesis length and average reference length.
struct NistStats {
  std::array<double, kNistOrder> info{};
  std::array<double, kNistOrder> counts{};
  double hyp_len = 0;
  double ref_len = 0;

  static constexpr std::size_t width = 2 * kNistOrder + 2;

  void write(std::span<double> out) const {
    for (std::size_t n = 0; n < kNistOrder; ++n) {
      out[n] = info[n];
      out[kNistOrder + n] = counts[n];
    }
    out[2 * kNistOrder] = hyp_len;
    out[2 * kNistOrder + 1] = ref_len;
  }

  static NistStats read(std::span<const double> in) {
    NistStats s;
    for (std::size_t n = 0; n < kNistOrder; ++n) {
      s.info[n] = in[n];
      s.counts[n] = in[kNistOrder + n];
    }
    s.hyp_len = in[2 * kNistOrder];
    s.ref_len = in[2 * kNistOrder + 1];
    return s;
  }
};

inline NistStats nist_stats(std::span<const std::string> hyp, std::span<const std::vector<std::string>> refs,
                            const NistInfo& info) {
  NistStats s;
  s.hyp_len = static_cast<double>(hyp.size());
  double ref_words = 0;
  for (const auto& r : refs) ref_words += static_cast<double>(r.size());
  s.ref_len = refs.empty() ? 0.0 : ref_words / static_cast<double>(refs.size());

  std::vector<NGramProfile> ref_profiles;
  for (std::size_t n = 1; n <= kNistOrder; ++n) {
    const NGramProfile h = word_ngrams(hyp, n);
    ref_profiles.clear();
    for (const auto& r : refs) ref_profiles.push_back(word_ngrams(r, n));
    const NGramProfile ceiling = max_counts(ref_profiles);
    double weighted = 0;
    for (const auto& [g, c] : h.counts()) {
      const std::uint32_t clip = std::min(c, ceiling.count(g));
      if (clip > 0) weighted += clip * info.weight(g);
    }
    s.info[n - 1] = weighted;
    s.counts[n - 1] = static_cast<double>(h.total());
  }
  return s;
}

/// exp(beta * ln^2(min(ratio, 1))) with beta chosen so a 2/3 length ratio scores 0.5.
inline double nist_length_penalty(double hyp_len, double ref_len) {
  if (ref_len <= 0) return hyp_len > 0 ? 1.0 : 0.0;
  const double ratio = hyp_len / ref_len;
  if (ratio <= 0) return 0.0;
  if (ratio >= 1) return 1.0;
  const double beta = std::log(0.5) / std::pow(std::log(1.5), 2);
  return std::exp(beta * std::pow(std::log(ratio), 2));
}

inline double nist_score(const NistStats& s) {
  double sum = 0;
  for (std::size_t n = 0; n < kNistOrder; ++n) {
    if (s.counts[n] > 0) sum += s.info[n] / s.counts[n];
  }
  return sum * nist_length_penalty(s.hyp_len, s.ref_len);
}

class NistScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {true, 0.0, 15.0, false}; }
  std::size_t stats_width() const override { return NistStats::width; }

  std::unique_ptr<const CorpusContext> prepare(std::span<const TokenizedExample> corpus) const override {
    std::vector<std::vector<std::vector<std::string>>> refs;
    refs.reserve(corpus.size());
    for (const auto& ex : corpus) refs.push_back(ex.references);
    return std::make_unique<NistInfo>(NistInfo::build(refs));
  }

  double score_example(const TokenizedExample& ex, const CorpusContext* ctx, std::span<double> out) const override {
    const NistStats s = nist_stats(ex.hypothesis, ex.references, static_cast<const NistInfo&>(*ctx));
    s.write(out);
    return nist_score(s);
  }

  double reduce(std::span<const double> merged) const override { return nist_score(NistStats::read(merged)); }
};

}  // namespace seqeval::metrics

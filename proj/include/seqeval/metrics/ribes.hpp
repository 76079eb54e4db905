#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqeval/engine.hpp"

namespace seqeval::metrics {

inline constexpr double kRibesAlpha = 0.25;
inline constexpr double kRibesBeta = 0.10;

namespace detail {

using Words = std::span<const std::string>;

inline std::size_t count_occurrences(Words seq, Words pattern) {
  if (pattern.empty() || pattern.size() > seq.size()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + pattern.size() <= seq.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), seq.begin() + static_cast<std::ptrdiff_t>(i))) ++count;
  }
  return count;
}

inline std::size_t first_occurrence(Words seq, Words pattern) {
  for (std::size_t i = 0; i + pattern.size() <= seq.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), seq.begin() + static_cast<std::ptrdiff_t>(i))) return i;
  }
  return seq.size();
}

}  // namespace detail

/// One-to-one word alignment: for each hypothesis word, the reference
/// position it aligns to (in hypothesis order). Words that occur exactly
/// once on both sides align directly; otherwise the context window around
/// the word grows (right context first, then left) until the n-gram is
/// unique on both sides. Unresolvable words are dropped.
inline std::vector<std::size_t> ribes_alignment(std::span<const std::string> hyp, std::span<const std::string> ref) {
  using detail::count_occurrences;
  using detail::first_occurrence;
  std::vector<std::size_t> order;
  const std::size_t n = hyp.size();
  for (std::size_t i = 0; i < n; ++i) {
    const detail::Words word = hyp.subspan(i, 1);
    const std::size_t in_ref = count_occurrences(ref, word);
    if (in_ref == 0) continue;
    if (in_ref == 1 && count_occurrences(hyp, word) == 1) {
      order.push_back(first_occurrence(ref, word));
      continue;
    }
    const std::size_t max_window = std::max(i, n - i + 1);
    for (std::size_t window = 1; window < max_window; ++window) {
      if (i + window < n) {
        const detail::Words right = hyp.subspan(i, window + 1);
        if (count_occurrences(ref, right) == 1 && count_occurrences(hyp, right) == 1) {
          order.push_back(first_occurrence(ref, right));
          break;
        }
      }
      if (window <= i) {
        const detail::Words left = hyp.subspan(i - window, window + 1);
        if (count_occurrences(ref, left) == 1 && count_occurrences(hyp, left) == 1) {
          order.push_back(first_occurrence(ref, left) + window);
          break;
        }
      }
    }
  }
  return order;
}

/// Normalized Kendall's tau, (tau + 1) / 2, of an alignment: the fraction of
/// position pairs in increasing order. One aligned word counts as ordered;
/// no aligned word gives 0.
inline double normalized_kendall_tau(std::span<const std::size_t> order) {
  const std::size_t n = order.size();
  if (n == 0) return 0.0;
  if (n == 1) return 1.0;
  double ascending = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (order[i] < order[j]) ascending += 1;
    }
  }
  return ascending / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

inline double ribes_single(std::span<const std::string> hyp, std::span<const std::string> ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  // The context search drops words of highly repetitive sentences ("a a a"),
  // even against an identical reference.
  if (std::equal(hyp.begin(), hyp.end(), ref.begin(), ref.end())) return 100.0;
  const auto order = ribes_alignment(hyp, ref);
  const double nkt = normalized_kendall_tau(order);
  const double precision = static_cast<double>(order.size()) / static_cast<double>(hyp.size());
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size())));
  return 100.0 * nkt * std::pow(precision, kRibesAlpha) * std::pow(bp, kRibesBeta);
}

/// Best RIBES over the references.
inline double ribes(std::span<const std::string> hyp, std::span<const std::vector<std::string>> refs) {
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, ribes_single(hyp, r));
  return best;
}

class RibesScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {}; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const double s = ribes(ex.hypothesis, ex.references);
    out[0] = s;
    out[1] = 1.0;
    return s;
  }

  double reduce(std::span<const double> merged) const override { return merged[1] > 0 ? merged[0] / merged[1] : 0.0; }
};

}  // namespace seqeval::metrics

#pragma once

// Word error rate and translation edit rate.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/errors.hpp"

namespace seqeval::metrics {

struct EditSummary {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;  ///< hypothesis words with no reference counterpart
  std::size_t deletions = 0;   ///< reference words missing from the hypothesis
  std::size_t shifts = 0;      ///< block moves (TER only)
  std::size_t ref_len = 0;

  std::size_t edits() const { return substitutions + insertions + deletions + shifts; }
  bool operator==(const EditSummary&) const = default;
};

struct EditResult {
  double score = 0.0;  ///< percent of reference length; may exceed 100
  EditSummary summary;
};

enum class EditOp : std::uint8_t { Match, Substitute, Insert, Delete };

using WordSpan = std::span<const std::string>;

/// Unit-cost Levenshtein distance between two token sequences.
inline std::size_t levenshtein(WordSpan a, WordSpan b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t diag = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Minimum-cost edit script turning `hyp` into `ref`, in sequence order.
/// Backtrace prefers match/substitution, then deletion, then insertion.
inline std::vector<EditOp> edit_alignment(WordSpan hyp, WordSpan ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = hyp[i - 1] == ref[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        ops.push_back(same ? EditOp::Match : EditOp::Substitute);
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ops.push_back(EditOp::Delete);
      --j;
    } else {
      ops.push_back(EditOp::Insert);
      --i;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

inline EditSummary summarize(std::span<const EditOp> ops, std::size_t ref_len) {
  EditSummary s;
  s.ref_len = ref_len;
  for (EditOp op : ops) {
    switch (op) {
      case EditOp::Match: break;
      case EditOp::Substitute: ++s.substitutions; break;
      case EditOp::Insert: ++s.insertions; break;
      case EditOp::Delete: ++s.deletions; break;
    }
  }
  return s;
}

inline EditSummary word_edits(WordSpan hyp, WordSpan ref) { return summarize(edit_alignment(hyp, ref), ref.size()); }

inline constexpr std::size_t kTerMaxShiftSpan = 10;
inline constexpr std::size_t kTerMaxShifts = 50;

namespace detail {

// Moves hyp[begin, begin+len) so that it starts before original index `dest`.
inline std::vector<std::string> apply_shift(WordSpan hyp, std::size_t begin, std::size_t len, std::size_t dest) {
  std::vector<std::string> out;
  out.reserve(hyp.size());
  std::vector<std::string> rest;
  rest.reserve(hyp.size() - len);
  for (std::size_t k = 0; k < hyp.size(); ++k) {
    if (k < begin || k >= begin + len) rest.push_back(hyp[k]);
  }
  const std::size_t at = dest > begin ? dest - len : dest;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    if (k == at) out.insert(out.end(), hyp.begin() + begin, hyp.begin() + begin + len);
    out.push_back(rest[k]);
  }
  if (at == rest.size()) out.insert(out.end(), hyp.begin() + begin, hyp.begin() + begin + len);
  return out;
}

}  // namespace detail

/// TER against one reference: greedy best-improvement block shifts, each
/// accepted only when it lowers edits + shifts, then the remaining
/// Levenshtein edits.
inline EditSummary ter_edits(WordSpan hyp, WordSpan ref) {
  std::vector<std::string> cur(hyp.begin(), hyp.end());
  std::vector<EditOp> ops = edit_alignment(cur, ref);
  std::size_t cost = 0;
  for (EditOp op : ops) cost += op != EditOp::Match;
  std::size_t shifts = 0;

  while (shifts < kTerMaxShifts && cost > 1) {
    // Hypothesis slot of each reference position under the current alignment,
    // and which hypothesis words are already exact matches.
    std::vector<std::size_t> slot(ref.size(), cur.size());
    std::vector<bool> matched(cur.size(), false);
    {
      std::size_t h = 0, r = 0;
      for (EditOp op : ops) {
        switch (op) {
          case EditOp::Match:
            matched[h] = true;
            [[fallthrough]];
          case EditOp::Substitute:
            slot[r++] = h++;
            break;
          case EditOp::Delete: slot[r++] = h; break;
          case EditOp::Insert: ++h; break;
        }
      }
    }

    std::size_t best_cost = cost - 1;  // a shift must beat this strictly
    std::vector<std::string> best;
    const WordSpan view(cur);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      bool all_matched = true;
      for (std::size_t len = 1; len <= kTerMaxShiftSpan && i + len <= cur.size(); ++len) {
        all_matched = all_matched && matched[i + len - 1];
        const WordSpan span = view.subspan(i, len);
        bool occurs = false;
        for (std::size_t j = 0; j + len <= ref.size(); ++j) {
          if (!std::equal(span.begin(), span.end(), ref.begin() + static_cast<std::ptrdiff_t>(j))) continue;
          occurs = true;
          if (all_matched) continue;
          const std::size_t dest = slot[j];
          if (dest >= i && dest <= i + len) continue;
          auto moved = detail::apply_shift(view, i, len, dest);
          const std::size_t c = levenshtein(moved, ref);
          if (c < best_cost) {
            best_cost = c;
            best = std::move(moved);
          }
        }
        if (!occurs) break;  // longer spans from i cannot occur either
      }
    }
    if (best.empty()) break;
    cur = std::move(best);
    ops = edit_alignment(cur, ref);
    cost = best_cost;
    ++shifts;
  }

  EditSummary s = summarize(ops, ref.size());
  s.shifts = shifts;
  return s;
}

namespace detail {

template <class EditFn>
EditResult min_rate(WordSpan hyp, std::span<const std::vector<std::string>> refs, EditFn&& edits) {
  bool found = false;
  EditResult best;
  for (const auto& r : refs) {
    if (r.empty()) continue;
    EditSummary s = edits(hyp, WordSpan(r));
    const double rate = 100.0 * static_cast<double>(s.edits()) / static_cast<double>(s.ref_len);
    if (!found || rate < best.score) {
      best = {rate, s};
      found = true;
    }
  }
  if (!found) throw UndefinedReferenceError("every reference is empty after tokenization");
  return best;
}

}  // namespace detail

/// Word error rate against the reference with the lowest rate.
inline EditResult wer(WordSpan hyp, std::span<const std::vector<std::string>> refs) {
  return detail::min_rate(hyp, refs, [](WordSpan h, WordSpan r) { return word_edits(h, r); });
}

/// Translation edit rate against the reference with the lowest rate.
inline EditResult ter(WordSpan hyp, std::span<const std::vector<std::string>> refs) {
  return detail::min_rate(hyp, refs, [](WordSpan h, WordSpan r) { return ter_edits(h, r); });
}

template <bool Shifts>
class EditRateScorer final : public StatsScorer {
 public:
  ScorerTraits traits() const override { return {false, 0.0, 100.0, false}; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> out) const override {
    const EditResult r = Shifts ? ter(ex.hypothesis, ex.references) : wer(ex.hypothesis, ex.references);
    out[0] = static_cast<double>(r.summary.edits());
    out[1] = static_cast<double>(r.summary.ref_len);
    return r.score;
  }

  double reduce(std::span<const double> merged) const override {
    return merged[1] > 0 ? 100.0 * merged[0] / merged[1] : 0.0;
  }
};

using WerScorer = EditRateScorer<false>;
using TerScorer = EditRateScorer<true>;

}  // namespace seqeval::metrics

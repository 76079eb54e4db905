#pragma once

// Dataset statistics, n-gram tables, match highlighting, score
// distributions, tag-group score tables and CSV/LaTeX export.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "seqeval/corpus.hpp"
#include "seqeval/engine.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/text.hpp"
#include "seqeval/unicode.hpp"

namespace seqeval {

// ---------------------------------------------------------------- histograms

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

/// Sturges' rule, clamped to [10, 50] bins.
inline std::size_t sturges_bins(std::size_t n) {
  const double raw = n > 0 ? std::ceil(std::log2(static_cast<double>(n))) + 1.0 : 1.0;
  return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 10, 50);
}

/// Equal-width bins over [lo, hi]; the last bin is closed on the right.
inline std::vector<HistogramBin> histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ContractViolation("histogram needs at least one bin");
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

// ---------------------------------------------------------------- dataset stats

struct StreamStats {
  std::string stream;
  std::string kind;  ///< "source" or "reference"
  std::size_t sentence_count = 0;
  std::size_t token_count = 0;
  std::size_t char_count = 0;  ///< non-whitespace code points
  std::vector<HistogramBin> length_histogram;
  std::vector<std::pair<std::string, std::size_t>> token_frequency;

  bool operator==(const StreamStats&) const = default;
};

struct DatasetStats {
  std::vector<StreamStats> streams;

  bool operator==(const DatasetStats&) const = default;
};

inline std::size_t non_space_chars(std::string_view s) {
  std::size_t n = 0;
  unicode::for_each_code_point(s, [&](unicode::CodePoint c, std::size_t, std::size_t) { n += !unicode::is_space(c); });
  return n;
}

/// Sorts by count descending, then token ascending.
inline std::vector<std::pair<std::string, std::size_t>> rank_counts(
    const std::unordered_map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

inline StreamStats stream_stats(std::string name, std::string kind, std::span<const std::string> sentences,
                                const TokenizerConfig& tokenizer = {}) {
  StreamStats s;
  s.stream = std::move(name);
  s.kind = std::move(kind);
  std::unordered_map<std::string, std::size_t> freq;
  std::vector<double> lengths;
  for (const auto& sentence : sentences) {
    const auto tokens = tokenize_words(sentence, tokenizer);
    ++s.sentence_count;
    s.token_count += tokens.size();
    s.char_count += non_space_chars(sentence);
    lengths.push_back(static_cast<double>(tokens.size()));
    for (const auto& t : tokens) ++freq[t];
  }
  if (!lengths.empty()) {
    const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
    s.length_histogram = histogram(lengths, *lo, *hi, sturges_bins(lengths.size()));
  }
  s.token_frequency = rank_counts(freq);
  return s;
}

/// Statistics for every text source stream and every reference stream
/// (present entries only).
inline DatasetStats compute_stats(const EvalSet& set, const TokenizerConfig& tokenizer = {}) {
  DatasetStats out;
  for (const auto& src : set.sources) {
    if (src.modality != Modality::Text) continue;
    out.streams.push_back(stream_stats(src.name, "source", src.items, tokenizer));
  }
  for (const auto& ref : set.references) {
    std::vector<std::string> present;
    for (const auto& item : ref.items) {
      if (item) present.push_back(*item);
    }
    out.streams.push_back(stream_stats(ref.name, "reference", present, tokenizer));
  }
  return out;
}

// ---------------------------------------------------------------- n-gram tables

struct NGramEntry {
  std::string ngram;
  std::size_t count = 0;
  std::vector<std::size_t> examples;  ///< sorted, unique

  bool operator==(const NGramEntry&) const = default;
};

struct NGramTable {
  std::size_t n = 1;
  std::vector<NGramEntry> entries;

  bool operator==(const NGramTable&) const = default;
};

/// Text the n-gram table is computed over: the first text source, or the
/// present references when the set has no text source. Pairs are
/// (example index, sentence).
inline std::vector<std::pair<std::size_t, std::string>> ngram_corpus(const EvalSet& set) {
  std::vector<std::pair<std::size_t, std::string>> out;
  if (const SourceStream* src = set.primary_text_source()) {
    for (std::size_t i = 0; i < src->items.size(); ++i) out.emplace_back(i, src->items[i]);
    return out;
  }
  for (std::size_t i = 0; i < set.example_count; ++i) {
    for (const auto& r : references_for(set, i)) out.emplace_back(i, r);
  }
  return out;
}

inline NGramTable top_ngrams(const EvalSet& set, std::size_t n, std::size_t k, const TokenizerConfig& tokenizer = {}) {
  if (n < 1 || n > 4) throw ContractViolation("n must be between 1 and 4");
  struct Acc {
    std::size_t count = 0;
    std::vector<std::size_t> examples;
  };
  std::unordered_map<std::string, Acc> acc;
  for (const auto& [index, sentence] : ngram_corpus(set)) {
    for (const auto& [g, c] : word_ngrams(tokenize_words(sentence, tokenizer), n).counts()) {
      Acc& a = acc[g];
      a.count += c;
      if (a.examples.empty() || a.examples.back() != index) a.examples.push_back(index);
    }
  }
  NGramTable table{n, {}};
  for (auto& [g, a] : acc) table.entries.push_back({g, a.count, std::move(a.examples)});
  std::sort(table.entries.begin(), table.entries.end(), [](const NGramEntry& a, const NGramEntry& b) {
    return a.count != b.count ? a.count > b.count : a.ngram < b.ngram;
  });
  if (table.entries.size() > k) table.entries.resize(k);
  return table;
}

// ---------------------------------------------------------------- highlighting

struct HighlightSpan {
  std::size_t begin = 0;  ///< token indices, half-open
  std::size_t end = 0;
  bool matched = false;

  bool operator==(const HighlightSpan&) const = default;
};

/// Greedy left-to-right longest match: at each position take the longest
/// prediction n-gram (n <= max_n) found in any reference, otherwise mark the
/// token unmatched. Adjacent spans with the same flag are merged.
inline std::vector<HighlightSpan> highlight(std::span<const std::string> prediction,
                                            std::span<const std::vector<std::string>> references,
                                            std::size_t max_n = 4) {
  if (max_n == 0) throw ContractViolation("max_n must be >= 1");
  std::vector<std::unordered_set<std::string>> grams(max_n);
  for (const auto& r : references) {
    for (std::size_t n = 1; n <= max_n; ++n) {
      for (auto& [g, _] : word_ngrams(r, n).counts()) grams[n - 1].insert(g);
    }
  }
  std::vector<HighlightSpan> spans;
  auto emit = [&](std::size_t b, std::size_t e, bool matched) {
    if (!spans.empty() && spans.back().matched == matched && spans.back().end == b) {
      spans.back().end = e;
    } else {
      spans.push_back({b, e, matched});
    }
  };
  std::size_t i = 0;
  while (i < prediction.size()) {
    std::size_t taken = 0;
    for (std::size_t len = std::min(max_n, prediction.size() - i); len >= 1; --len) {
      if (grams[len - 1].contains(join_tokens(prediction.subspan(i, len)))) {
        taken = len;
        break;
      }
    }
    if (taken > 0) {
      emit(i, i + taken, true);
      i += taken;
    } else {
      emit(i, i + 1, false);
      ++i;
    }
  }
  return spans;
}

// ---------------------------------------------------------------- score distribution

struct ScoreHistogram {
  std::string scorer;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<HistogramBin> bins;

  bool operator==(const ScoreHistogram&) const = default;
};

/// Equal-width bins over the metric's scale; unbounded metrics extend the
/// upper edge to the largest observed score. bins = 0 picks Sturges' rule.
inline ScoreHistogram score_distribution(const ScoreReport& report, const ScorerTraits& traits, std::size_t bins = 0) {
  if (report.sentence_scores.empty()) throw ContractViolation("score report has no sentence scores");
  double lo = traits.scale_min, hi = traits.scale_max;
  for (double s : report.sentence_scores) {
    lo = std::min(lo, s);
    if (!traits.bounded) hi = std::max(hi, s);
  }
  if (bins == 0) bins = sturges_bins(report.sentence_scores.size());
  return {report.scorer, lo, hi, histogram(report.sentence_scores, lo, hi, bins)};
}

// ---------------------------------------------------------------- tag distribution

inline std::vector<std::pair<std::string, std::size_t>> tag_distribution(const EvalSet& set) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : set.tags) counts[t.qualified_name()] += t.members.size();
  auto out = rank_counts(counts);
  std::erase_if(out, [](const auto& p) { return p.second == 0; });
  return out;
}

// ---------------------------------------------------------------- group scores

inline constexpr std::string_view kAllGroup = "ALL";

struct GroupRow {
  std::string group;
  std::size_t example_count = 0;
  std::string metric;
  std::vector<double> scores;  ///< one per model, in GroupScores::models order
  std::vector<bool> best;
  std::vector<bool> worst;

  bool operator==(const GroupRow&) const = default;
};

struct GroupScores {
  std::vector<std::string> models;
  std::vector<std::string> metrics;
  std::vector<GroupRow> rows;
  std::vector<std::string> notes;

  bool operator==(const GroupScores&) const = default;
};

struct GroupScoresRequest {
  std::vector<std::string> metrics;
  std::vector<std::string> models;  ///< empty = every model of the set
  std::vector<std::string> tags;    ///< qualified tag names
  bool all_tags = false;            ///< group by every tag of the set
};

/// Supplies the full-corpus scoring of (metric, model), typically through the cache.
using ScoredLookup = std::function<ScoredCorpus(const std::string& metric, const std::string& model)>;

/// Best/worst flags for one row. All-equal rows (including a single model)
/// mark every entry best and none worst.
inline void mark_extremes(GroupRow& row, bool higher_is_better) {
  const std::size_t n = row.scores.size();
  row.best.assign(n, false);
  row.worst.assign(n, false);
  if (n == 0) return;
  const auto [lo_it, hi_it] = std::minmax_element(row.scores.begin(), row.scores.end());
  const double lo = *lo_it, hi = *hi_it;
  const double top = higher_is_better ? hi : lo;
  const double bottom = higher_is_better ? lo : hi;
  for (std::size_t k = 0; k < n; ++k) {
    row.best[k] = row.scores[k] == top;
    row.worst[k] = lo != hi && row.scores[k] == bottom;
  }
}

inline GroupScores group_scores(const EvalSet& set, const ScorerRegistry& registry, const GroupScoresRequest& request,
                                const ScoredLookup& lookup, const RunOptions& options = {}) {
  GroupScores out;
  out.metrics = request.metrics;
  out.models = request.models.empty() ? set.model_names() : request.models;
  for (const auto& m : out.metrics) registry.get(m);
  for (const auto& m : out.models) {
    if (set.model(m) == nullptr) throw LookupError("unknown model '" + m + "'");
  }

  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::vector<std::size_t> everything(set.example_count);
  for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i;
  groups.emplace_back(std::string(kAllGroup), everything);
  std::vector<std::string> tag_names = request.tags;
  if (request.all_tags) {
    tag_names.clear();
    for (const auto& t : set.tags) tag_names.push_back(t.qualified_name());
    std::sort(tag_names.begin(), tag_names.end());
    tag_names.erase(std::unique(tag_names.begin(), tag_names.end()), tag_names.end());
  }
  for (const auto& name : tag_names) {
    const TagSet* t = set.tag(name);
    if (t == nullptr) throw LookupError("unknown tag '" + name + "'");
    if (t->members.empty()) {
      out.notes.push_back("tag '" + name + "' has no examples and is omitted");
      continue;
    }
    groups.emplace_back(name, t->members);
  }

  const PerExampleReferences refs = all_references(set);
  std::map<std::pair<std::string, std::string>, ScoredCorpus> scored;
  for (const auto& metric : out.metrics) {
    for (const auto& model : out.models) scored.emplace(std::pair{metric, model}, lookup(metric, model));
  }

  for (const auto& [group, members] : groups) {
    for (const auto& metric : out.metrics) {
      const Scorer& scorer = registry.get(metric);
      GroupRow row{group, members.size(), metric, {}, {}, {}};
      for (const auto& model : out.models) {
        const ScoredCorpus& sc = scored.at({metric, model});
        if (group == kAllGroup) {
          row.scores.push_back(sc.report.corpus_score);
        } else {
          row.scores.push_back(scorer.subset_score(sc, members, set.model(model)->items, refs, options));
        }
      }
      mark_extremes(row, scorer.traits().higher_is_better);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------- export

enum class ExportFormat { Csv, Latex };

inline ExportFormat parse_export_format(std::string_view s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "latex") return ExportFormat::Latex;
  throw ConfigError("unknown export format '" + std::string(s) + "' (expected csv or latex)");
}

inline std::string_view file_extension(ExportFormat f) { return f == ExportFormat::Csv ? "csv" : "tex"; }

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string latex_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': case '%': case '$': case '#': case '_': case '{': case '}':
        out += '\\';
        out += c;
        break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '\\': out += "\\textbackslash{}"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

inline std::string join_csv(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_field(fields[i]);
  return line + "\n";
}

inline std::string latex_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                               std::size_t text_columns) {
  std::string spec;
  for (std::size_t i = 0; i < header.size(); ++i) spec += i < text_columns ? 'l' : 'r';
  std::string out = "\\begin{tabular}{" + spec + "}\n\\hline\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? " & " : "") + cells[i];
    out += " \\\\\n";
  };
  std::vector<std::string> escaped;
  for (const auto& h : header) escaped.push_back(latex_escape(h));
  line(escaped);
  out += "\\hline\n";
  for (const auto& r : rows) line(r);
  out += "\\hline\n\\end{tabular}\n";
  return out;
}

}  // namespace detail

/// Group score table. The group column is dropped when only the ALL row
/// exists.
inline std::string export_table(const GroupScores& table, ExportFormat format) {
  const bool grouped = std::any_of(table.rows.begin(), table.rows.end(),
                                   [](const GroupRow& r) { return r.group != kAllGroup; });
  std::vector<std::string> header;
  if (grouped) header.push_back("group");
  header.push_back("metric");
  header.insert(header.end(), table.models.begin(), table.models.end());

  if (format == ExportFormat::Csv) {
    std::string out = detail::join_csv(header);
    for (const auto& row : table.rows) {
      std::vector<std::string> fields;
      if (grouped) fields.push_back(row.group);
      fields.push_back(row.metric);
      for (double s : row.scores) fields.push_back(format_number(s));
      out += detail::join_csv(fields);
    }
    return out;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    if (grouped) cells.push_back(latex_escape(row.group));
    cells.push_back(latex_escape(row.metric));
    for (std::size_t k = 0; k < row.scores.size(); ++k) {
      std::string v = format_number(row.scores[k]);
      if (row.best[k]) v = "\\textbf{" + v + "}";
      if (row.worst[k]) v = "\\textit{" + v + "}";
      cells.push_back(v);
    }
    rows.push_back(std::move(cells));
  }
  return detail::latex_table(header, rows, grouped ? 2 : 1);
}

/// Per-stream count table.
inline std::string export_table(const DatasetStats& stats, ExportFormat format) {
  const std::vector<std::string> header{"stream", "kind", "sentence_count", "token_count", "char_count"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : stats.streams) {
    rows.push_back({s.stream, s.kind, std::to_string(s.sentence_count), std::to_string(s.token_count),
                    std::to_string(s.char_count)});
  }
  if (format == ExportFormat::Csv) {
    std::string out = detail::join_csv(header);
    for (const auto& r : rows) out += detail::join_csv(r);
    return out;
  }
  for (auto& r : rows) {
    r[0] = latex_escape(r[0]);
    r[1] = latex_escape(r[1]);
  }
  return detail::latex_table(header, rows, 2);
}

}  // namespace seqeval

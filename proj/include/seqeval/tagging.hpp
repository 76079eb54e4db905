#pragma once

// Machine-generated tags: long sentences, rare words, writing script and
// code-switching. Taggers read the first text source stream only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqeval/corpus.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/parallel.hpp"
#include "seqeval/text.hpp"
#include "seqeval/unicode.hpp"

namespace seqeval {

struct TaggerConfig {
  double long_sentence_percentile = 90.0;
  std::size_t rare_word_max_count = 1;
  double script_min_fraction = 0.8;
  std::set<std::string> enabled_taggers{"long", "rare_words", "scripts"};
  TokenizerConfig tokenizer;
  std::size_t workers = 1;

  void validate() const {
    if (!(long_sentence_percentile > 50.0 && long_sentence_percentile < 100.0)) {
      throw ConfigError("long_sentence_percentile must lie in (50, 100)");
    }
    if (rare_word_max_count < 1) throw ConfigError("rare_word_max_count must be at least 1");
    if (!(script_min_fraction > 0.5 && script_min_fraction <= 1.0)) {
      throw ConfigError("script_min_fraction must lie in (0.5, 1]");
    }
    if (workers == 0) throw ConfigError("workers must be at least 1");
  }
};

/// Linear-interpolation percentile (the "linear" method of common numeric
/// libraries) of an unsorted sample.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace detail {

inline std::vector<std::vector<std::string>> tokenized_source(const EvalSet& set, const TaggerConfig& cfg) {
  std::vector<std::vector<std::string>> out;
  const SourceStream* src = set.primary_text_source();
  if (src == nullptr) return out;
  out.resize(src->items.size());
  parallel_chunks(out.size(), cfg.workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) out[i] = tokenize_words(src->items[i], cfg.tokenizer);
  });
  return out;
}

inline TagSet machine_tag(std::string name) { return {std::move(name), TagOrigin::Machine, {}}; }

}  // namespace detail

/// Examples whose source token length exceeds the configured percentile.
inline TagSet tag_long_sentences(const EvalSet& set, const TaggerConfig& cfg) {
  TagSet tag = detail::machine_tag("long");
  const auto tokens = detail::tokenized_source(set, cfg);
  std::vector<double> lengths;
  for (const auto& t : tokens) lengths.push_back(static_cast<double>(t.size()));
  const double threshold = percentile(lengths, cfg.long_sentence_percentile);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] > threshold) tag.members.push_back(i);
  }
  return tag;
}

/// Examples containing a token whose corpus frequency is at most the threshold.
inline TagSet tag_rare_words(const EvalSet& set, const TaggerConfig& cfg) {
  TagSet tag = detail::machine_tag("rare_words");
  const auto tokens = detail::tokenized_source(set, cfg);
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& sentence : tokens) {
    for (const auto& t : sentence) ++freq[t];
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (std::any_of(tokens[i].begin(), tokens[i].end(),
                    [&](const std::string& t) { return freq[t] <= cfg.rare_word_max_count; })) {
      tag.members.push_back(i);
    }
  }
  return tag;
}

/// Script histogram of the letters in `sentence`, keyed by lowercase script
/// name. Common and inherited characters are not counted.
inline std::map<std::string, std::size_t> script_histogram(std::string_view sentence) {
  std::map<UScriptCode, std::size_t> codes;
  unicode::for_each_code_point(sentence, [&](unicode::CodePoint c, std::size_t, std::size_t) {
    if (!unicode::is_letter(c)) return;
    const UScriptCode s = unicode::script_of(c);
    if (s == USCRIPT_COMMON || s == USCRIPT_INHERITED || s == USCRIPT_INVALID_CODE || s == USCRIPT_UNKNOWN) return;
    ++codes[s];
  });
  std::map<std::string, std::size_t> out;
  for (const auto& [code, count] : codes) out[unicode::script_name(code)] += count;
  return out;
}

/// "lang:<script>" when one script dominates, plus "code_switching" when at
/// least two scripts each exceed the complementary share.
inline std::vector<TagSet> tag_scripts(const EvalSet& set, const TaggerConfig& cfg) {
  const SourceStream* src = set.primary_text_source();
  if (src == nullptr) return {};
  std::vector<std::vector<std::string>> labels(src->items.size());
  parallel_chunks(labels.size(), cfg.workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const auto hist = script_histogram(src->items[i]);
      std::size_t total = 0;
      for (const auto& [_, c] : hist) total += c;
      if (total == 0) continue;
      std::size_t significant = 0;
      for (const auto& [name, c] : hist) {
        const double share = static_cast<double>(c) / static_cast<double>(total);
        if (share >= cfg.script_min_fraction) labels[i].push_back("lang:" + name);
        if (share > 1.0 - cfg.script_min_fraction) ++significant;
      }
      if (significant >= 2) labels[i].push_back("code_switching");
    }
  });
  std::map<std::string, TagSet> by_name;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (const auto& l : labels[i]) {
      auto [it, _] = by_name.try_emplace(l, detail::machine_tag(l));
      it->second.members.push_back(i);
    }
  }
  std::vector<TagSet> out;
  for (auto& [_, t] : by_name) out.push_back(std::move(t));
  return out;
}

using Tagger = std::function<std::vector<TagSet>(const EvalSet&, const TaggerConfig&)>;

inline const std::map<std::string, Tagger>& builtin_taggers() {
  static const std::map<std::string, Tagger> taggers{
      {"long", [](const EvalSet& s, const TaggerConfig& c) { return std::vector<TagSet>{tag_long_sentences(s, c)}; }},
      {"rare_words", [](const EvalSet& s, const TaggerConfig& c) { return std::vector<TagSet>{tag_rare_words(s, c)}; }},
      {"scripts", [](const EvalSet& s, const TaggerConfig& c) { return tag_scripts(s, c); }},
  };
  return taggers;
}

/// Runs every enabled tagger; result is keyed by tagger name and holds only
/// non-empty tags.
inline std::map<std::string, std::vector<TagSet>> machine_tags(const EvalSet& set, const TaggerConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<TagSet>> out;
  for (const auto& name : cfg.enabled_taggers) {
    auto it = builtin_taggers().find(name);
    if (it == builtin_taggers().end()) throw ConfigError("unknown tagger '" + name + "'");
    auto tags = it->second(set, cfg);
    std::erase_if(tags, [](const TagSet& t) { return t.members.empty(); });
    out[name] = std::move(tags);
  }
  return out;
}

}  // namespace seqeval

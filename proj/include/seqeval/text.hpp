#pragma once

// Tokenization and n-gram counting shared by every metric and statistic.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqeval/errors.hpp"
#include "seqeval/unicode.hpp"

namespace seqeval {

enum class TokenScheme {
  Whitespace,  ///< split on Unicode whitespace
  PunctSplit,  ///< whitespace split, then every punctuation character is its own token
  Char,        ///< one token per non-whitespace character
};

struct TokenizerConfig {
  TokenScheme scheme = TokenScheme::Whitespace;
  bool lowercase = false;

  bool operator==(const TokenizerConfig&) const = default;

  /// Canonical text form: "whitespace" | "punct" | "char", with an optional
  /// "+lower" suffix. This string is part of every cache key.
  std::string to_string() const {
    std::string out;
    switch (scheme) {
      case TokenScheme::Whitespace: out = "whitespace"; break;
      case TokenScheme::PunctSplit: out = "punct"; break;
      case TokenScheme::Char: out = "char"; break;
    }
    if (lowercase) out += "+lower";
    return out;
  }

  static TokenizerConfig parse(std::string_view text) {
    TokenizerConfig cfg;
    std::string_view scheme = text;
    if (auto plus = text.find('+'); plus != std::string_view::npos) {
      scheme = text.substr(0, plus);
      if (text.substr(plus + 1) != "lower") {
        throw ConfigError("unknown tokenizer option '" + std::string(text.substr(plus + 1)) + "'");
      }
      cfg.lowercase = true;
    }
    if (scheme == "whitespace") {
      cfg.scheme = TokenScheme::Whitespace;
    } else if (scheme == "punct") {
      cfg.scheme = TokenScheme::PunctSplit;
    } else if (scheme == "char") {
      cfg.scheme = TokenScheme::Char;
    } else {
      throw ConfigError("unknown tokenizer scheme '" + std::string(scheme) +
                        "' (expected whitespace, punct or char)");
    }
    return cfg;
  }
};

struct Token {
  std::string text;
  std::size_t begin = 0;  ///< byte offsets into the original sentence
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

// Emits (text, begin, end) triples. Each whitespace-delimited word is NFC
// normalized as a unit; when normalization rewrites the word, the pieces it
// splits into all carry the whole word's byte span.
template <class Sink>
void tokenize_into(std::string_view sentence, const TokenizerConfig& cfg, Sink&& sink) {
  auto emit_word = [&](std::size_t wb, std::size_t we) {
    const std::string_view word = sentence.substr(wb, we - wb);
    std::string normalized = unicode::nfc(word);
    const bool exact = normalized == word;
    auto piece = [&](std::size_t pb, std::size_t pe) {
      std::string text = normalized.substr(pb, pe - pb);
      if (cfg.lowercase) text = unicode::lowercase(text);
      if (exact) {
        sink(std::move(text), wb + pb, wb + pe);
      } else {
        sink(std::move(text), wb, we);
      }
    };
    switch (cfg.scheme) {
      case TokenScheme::Whitespace:
        piece(0, normalized.size());
        break;
      case TokenScheme::Char:
        unicode::for_each_code_point(normalized, [&](unicode::CodePoint, std::size_t b, std::size_t e) { piece(b, e); });
        break;
      case TokenScheme::PunctSplit: {
        std::size_t run = std::string::npos;
        unicode::for_each_code_point(normalized, [&](unicode::CodePoint c, std::size_t b, std::size_t e) {
          if (unicode::is_punct(c)) {
            if (run != std::string::npos) piece(run, b);
            run = std::string::npos;
            piece(b, e);
          } else if (run == std::string::npos) {
            run = b;
          }
        });
        if (run != std::string::npos) piece(run, normalized.size());
        break;
      }
    }
  };

  std::size_t word_begin = std::string::npos;
  unicode::for_each_code_point(sentence, [&](unicode::CodePoint c, std::size_t b, std::size_t) {
    if (unicode::is_space(c)) {
      if (word_begin != std::string::npos) emit_word(word_begin, b);
      word_begin = std::string::npos;
    } else if (word_begin == std::string::npos) {
      word_begin = b;
    }
  });
  if (word_begin != std::string::npos) emit_word(word_begin, sentence.size());
}

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view sentence, const TokenizerConfig& cfg = {}) {
  std::vector<Token> out;
  detail::tokenize_into(sentence, cfg, [&](std::string text, std::size_t b, std::size_t e) {
    out.push_back(Token{std::move(text), b, e});
  });
  return out;
}

/// Token texts only; the hot path for scoring.
inline std::vector<std::string> tokenize_words(std::string_view sentence, const TokenizerConfig& cfg = {}) {
  std::vector<std::string> out;
  detail::tokenize_into(sentence, cfg, [&](std::string text, std::size_t, std::size_t) {
    out.push_back(std::move(text));
  });
  return out;
}

/// Tokens re-joined with single spaces.
inline std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

/// Multiset of n-grams of one order. Word n-grams are keyed by their tokens
/// joined with a single space (tokens never contain whitespace); character
/// n-grams by their UTF-8 bytes.
class NGramProfile {
 public:
  using Map = std::unordered_map<std::string, std::uint32_t>;

  explicit NGramProfile(std::size_t order = 1) : order_(order) {}

  std::size_t order() const noexcept { return order_; }
  const Map& counts() const& noexcept { return counts_; }
  Map counts() && noexcept { return std::move(counts_); }
  std::size_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }
  std::size_t distinct() const noexcept { return counts_.size(); }

  void add(std::string key, std::uint32_t n = 1) {
    counts_[std::move(key)] += n;
    total_ += n;
  }

  std::uint32_t count(const std::string& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

  bool operator==(const NGramProfile&) const = default;

 private:
  std::size_t order_;
  Map counts_;
  std::size_t total_ = 0;
};

inline NGramProfile word_ngrams(std::span<const std::string> tokens, std::size_t n) {
  if (n == 0) throw ContractViolation("n-gram order must be >= 1");
  NGramProfile profile(n);
  if (tokens.size() < n) return profile;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key += ' ';
      key += tokens[i + k];
    }
    profile.add(key);
  }
  return profile;
}

inline NGramProfile word_ngrams(std::span<const Token> tokens, std::size_t n) {
  std::vector<std::string> texts;
  texts.reserve(tokens.size());
  for (const auto& t : tokens) texts.push_back(t.text);
  return word_ngrams(std::span<const std::string>(texts), n);
}

/// Character n-grams over Unicode scalar values.
inline NGramProfile char_ngrams(std::string_view sentence, std::size_t n, bool strip_whitespace = true) {
  if (n == 0) throw ContractViolation("n-gram order must be >= 1");
  std::string text;
  std::vector<std::size_t> starts;
  text.reserve(sentence.size());
  unicode::for_each_code_point(sentence, [&](unicode::CodePoint c, std::size_t b, std::size_t e) {
    if (strip_whitespace && unicode::is_space(c)) return;
    starts.push_back(text.size());
    text.append(sentence.substr(b, e - b));
  });
  starts.push_back(text.size());
  NGramProfile profile(n);
  const std::size_t chars = starts.size() - 1;
  for (std::size_t i = 0; i + n <= chars; ++i) {
    profile.add(text.substr(starts[i], starts[i + n] - starts[i]));
  }
  return profile;
}

/// Per n-gram maximum count over several reference profiles.
inline NGramProfile max_counts(std::span<const NGramProfile> refs) {
  NGramProfile out(refs.empty() ? 1 : refs.front().order());
  NGramProfile::Map merged;
  for (const auto& r : refs) {
    if (r.order() != out.order()) throw ContractViolation("reference profiles have different orders");
    for (const auto& [g, c] : r.counts()) {
      auto& slot = merged[g];
      slot = std::max(slot, c);
    }
  }
  for (auto& [g, c] : merged) out.add(g, c);
  return out;
}

/// Sum over hypothesis n-grams of min(hyp count, max reference count).
inline std::size_t clipped_matches(const NGramProfile& hyp, std::span<const NGramProfile> refs) {
  for (const auto& r : refs) {
    if (r.order() != hyp.order()) {
      throw ContractViolation("clipped_matches: order mismatch (" + std::to_string(hyp.order()) + " vs " +
                              std::to_string(r.order()) + ")");
    }
  }
  std::size_t matches = 0;
  for (const auto& [g, c] : hyp.counts()) {
    std::uint32_t best = 0;
    for (const auto& r : refs) best = std::max(best, r.count(g));
    matches += std::min(c, best);
  }
  return matches;
}

inline std::size_t clipped_matches(const NGramProfile& hyp, const NGramProfile& ref) {
  return clipped_matches(hyp, std::span<const NGramProfile>(&ref, 1));
}

}  // namespace seqeval

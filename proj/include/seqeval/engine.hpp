#pragma once

// Scorer registry and chunked parallel execution.
//
// Every built-in metric is a StatsScorer: each example yields a sentence
// score plus a fixed-width vector of additive sufficient statistics, and the
// corpus score is a function of the element-wise sum of those vectors. The
// engine splits the corpus into `workers` contiguous chunks, scores chunks
// concurrently, then sums the statistics in example order on the calling
// thread. Results are therefore bit-identical for every worker count.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqeval/errors.hpp"
#include "seqeval/parallel.hpp"
#include "seqeval/text.hpp"

namespace seqeval {

/// Canonical reference shape: one non-empty list of references per example.
using PerExampleReferences = std::vector<std::vector<std::string>>;

/// Stream-oriented reference shape, one inner list per reference stream
/// (i.e. per `reference_*.txt`). An empty string marks an absent reference.
struct ReferenceStreams {
  std::vector<std::vector<std::string>> streams;
};

inline PerExampleReferences to_per_example(const ReferenceStreams& refs) {
  if (refs.streams.empty()) throw ContractViolation("no reference streams");
  const std::size_t n = refs.streams.front().size();
  for (std::size_t s = 0; s < refs.streams.size(); ++s) {
    if (refs.streams[s].size() != n) {
      throw ContractViolation("reference stream " + std::to_string(s) + " has " +
                              std::to_string(refs.streams[s].size()) + " entries, expected " + std::to_string(n));
    }
  }
  PerExampleReferences out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& stream : refs.streams) {
      if (!stream[i].empty()) out[i].push_back(stream[i]);
    }
    if (out[i].empty()) throw ContractViolation("example " + std::to_string(i) + " has no reference");
  }
  return out;
}

struct ScoreReport {
  std::string scorer;
  double corpus_score = 0.0;
  std::vector<double> sentence_scores;

  bool operator==(const ScoreReport&) const = default;
};

struct ScorerTraits {
  bool higher_is_better = true;
  double scale_min = 0.0;
  double scale_max = 100.0;  ///< nominal top of the scale
  bool bounded = true;       ///< false when values may exceed scale_max (WER, TER, NIST)
};

/// A scored corpus plus the per-example statistics needed to re-aggregate
/// any subset without rescoring.
struct ScoredCorpus {
  ScoreReport report;
  std::size_t stats_width = 0;  ///< 0 when the scorer has no mergeable statistics
  std::vector<double> stats;    ///< example-major, stats_width values per example

  std::span<const double> example_stats(std::size_t i) const {
    return std::span<const double>(stats).subspan(i * stats_width, stats_width);
  }

  bool operator==(const ScoredCorpus&) const = default;
};

struct TokenizedExample {
  std::vector<std::string> hypothesis;
  std::vector<std::vector<std::string>> references;
};

struct RunOptions {
  std::size_t workers = 1;
  bool verbose = false;
  TokenizerConfig tokenizer{};
  std::ostream* progress = nullptr;  ///< verbose sink; std::clog when null
};

namespace instrumentation {
/// Number of metric runs performed by the engine (one per scorer per call).
inline std::atomic<std::uint64_t> metric_computations{0};
}  // namespace instrumentation

inline std::uint64_t metric_computation_count() { return instrumentation::metric_computations.load(); }

class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual ScorerTraits traits() const = 0;

  virtual ScoredCorpus score_corpus(std::span<const std::string> hypotheses, const PerExampleReferences& references,
                                    const RunOptions& options) const = 0;

  /// Corpus-level score over `indices` of a corpus previously scored by this
  /// scorer. Hypotheses/references are the full corpus.
  virtual double subset_score(const ScoredCorpus& scored, std::span<const std::size_t> indices,
                              std::span<const std::string> hypotheses, const PerExampleReferences& references,
                              const RunOptions& options) const = 0;
};

class CorpusContext {
 public:
  virtual ~CorpusContext() = default;
};

class StatsScorer : public Scorer {
 public:
  virtual std::size_t stats_width() const = 0;

  /// Whole-corpus precomputation (IDF tables, information weights). Runs
  /// once, single-threaded, before scoring.
  virtual std::unique_ptr<const CorpusContext> prepare(std::span<const TokenizedExample>) const { return nullptr; }

  /// Writes the example's statistics into `stats` and returns its sentence score.
  virtual double score_example(const TokenizedExample& example, const CorpusContext* context,
                               std::span<double> stats) const = 0;

  virtual double reduce(std::span<const double> merged) const = 0;

  ScoredCorpus score_corpus(std::span<const std::string> hypotheses, const PerExampleReferences& references,
                            const RunOptions& options) const final {
    const std::size_t n = hypotheses.size();
    const std::size_t width = stats_width();
    std::vector<TokenizedExample> tokenized(n);
    parallel_chunks(n, options.workers, [&](std::size_t b, std::size_t e, std::size_t) {
      for (std::size_t i = b; i < e; ++i) {
        tokenized[i].hypothesis = tokenize_words(hypotheses[i], options.tokenizer);
        tokenized[i].references.reserve(references[i].size());
        for (const auto& r : references[i]) tokenized[i].references.push_back(tokenize_words(r, options.tokenizer));
      }
    });
    const auto context = prepare(tokenized);

    ScoredCorpus out;
    out.stats_width = width;
    out.stats.assign(n * width, 0.0);
    out.report.sentence_scores.assign(n, 0.0);
    std::mutex log_mutex;
    const std::size_t chunks = std::max<std::size_t>(1, std::min(options.workers, n));
    parallel_chunks(n, options.workers, [&](std::size_t b, std::size_t e, std::size_t k) {
      for (std::size_t i = b; i < e; ++i) {
        std::span<double> slot(out.stats.data() + i * width, width);
        out.report.sentence_scores[i] = score_example(tokenized[i], context.get(), slot);
      }
      if (options.verbose) {
        std::lock_guard lock(log_mutex);
        std::ostream& log = options.progress ? *options.progress : std::clog;
        log << "chunk " << (k + 1) << "/" << chunks << " done (examples " << b << ".." << e << ")\n";
      }
    });

    std::vector<double> merged(width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < width; ++k) merged[k] += out.stats[i * width + k];
    }
    out.report.corpus_score = reduce(merged);
    return out;
  }

  double subset_score(const ScoredCorpus& scored, std::span<const std::size_t> indices, std::span<const std::string>,
                      const PerExampleReferences&, const RunOptions&) const final {
    if (scored.stats_width != stats_width()) throw ContractViolation("statistics width mismatch");
    std::vector<double> merged(scored.stats_width, 0.0);
    for (std::size_t i : indices) {
      auto s = scored.example_stats(i);
      for (std::size_t k = 0; k < s.size(); ++k) merged[k] += s[k];
    }
    return reduce(merged);
  }
};

/// Whole-corpus user metric: receives every hypothesis and the per-example
/// references, returns (corpus score, sentence scores).
using CorpusFunction = std::function<std::pair<double, std::vector<double>>(
    std::span<const std::string> hypotheses, const PerExampleReferences& references, std::size_t workers,
    bool verbose)>;

class FunctionScorer final : public Scorer {
 public:
  FunctionScorer(CorpusFunction fn, ScorerTraits traits) : fn_(std::move(fn)), traits_(traits) {}

  ScorerTraits traits() const override { return traits_; }

  ScoredCorpus score_corpus(std::span<const std::string> hypotheses, const PerExampleReferences& references,
                            const RunOptions& options) const override {
    auto [corpus, sentences] = fn_(hypotheses, references, options.workers, options.verbose);
    ScoredCorpus out;
    out.report.corpus_score = corpus;
    out.report.sentence_scores = std::move(sentences);
    return out;
  }

  double subset_score(const ScoredCorpus&, std::span<const std::size_t> indices,
                      std::span<const std::string> hypotheses, const PerExampleReferences& references,
                      const RunOptions& options) const override {
    std::vector<std::string> hyps;
    PerExampleReferences refs;
    for (std::size_t i : indices) {
      hyps.push_back(hypotheses[i]);
      refs.push_back(references[i]);
    }
    return fn_(hyps, refs, options.workers, options.verbose).first;
  }

 private:
  CorpusFunction fn_;
  ScorerTraits traits_;
};

/// Per-sentence user metric; the corpus score is the mean sentence score.
using SentenceFunction =
    std::function<double(std::span<const std::string> hypothesis, const std::vector<std::vector<std::string>>& references)>;

class SentenceFunctionScorer final : public StatsScorer {
 public:
  SentenceFunctionScorer(SentenceFunction fn, ScorerTraits traits) : fn_(std::move(fn)), traits_(traits) {}

  ScorerTraits traits() const override { return traits_; }
  std::size_t stats_width() const override { return 2; }

  double score_example(const TokenizedExample& ex, const CorpusContext*, std::span<double> stats) const override {
    const double s = fn_(ex.hypothesis, ex.references);
    stats[0] = s;
    stats[1] = 1.0;
    return s;
  }

  double reduce(std::span<const double> merged) const override {
    return merged[1] > 0 ? merged[0] / merged[1] : 0.0;
  }

 private:
  SentenceFunction fn_;
  ScorerTraits traits_;
};

inline bool is_valid_scorer_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-')) return false;
  }
  return true;
}

class ScorerRegistry {
 public:
  void add(std::string id, std::shared_ptr<const Scorer> scorer) {
    if (!is_valid_scorer_id(id)) {
      throw RegistrationError("invalid scorer id '" + id + "' (lowercase letters, digits, '_' and '-' only)");
    }
    if (!scorer) throw RegistrationError("scorer '" + id + "' is null");
    if (scorers_.contains(id)) throw RegistrationError("scorer '" + id + "' is already registered");
    scorers_.emplace(std::move(id), std::move(scorer));
  }

  void add_function(std::string id, CorpusFunction fn, ScorerTraits traits = {}) {
    add(std::move(id), std::make_shared<FunctionScorer>(std::move(fn), traits));
  }

  void add_sentence_function(std::string id, SentenceFunction fn, ScorerTraits traits = {}) {
    add(std::move(id), std::make_shared<SentenceFunctionScorer>(std::move(fn), traits));
  }

  bool contains(std::string_view id) const { return scorers_.find(std::string(id)) != scorers_.end(); }

  const Scorer& get(std::string_view id) const {
    auto it = scorers_.find(std::string(id));
    if (it == scorers_.end()) throw LookupError("unknown scorer '" + std::string(id) + "'");
    return *it->second;
  }

  /// Registered ids in lexicographic order.
  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : scorers_) out.push_back(id);
    return out;
  }

 private:
  std::map<std::string, std::shared_ptr<const Scorer>, std::less<>> scorers_;
};

namespace detail {

inline void check_inputs(std::span<const std::string> hypotheses, const PerExampleReferences& references,
                         const RunOptions& options) {
  if (hypotheses.empty()) throw ContractViolation("no hypotheses to score");
  if (hypotheses.size() != references.size()) {
    throw ContractViolation("hypothesis count " + std::to_string(hypotheses.size()) +
                            " differs from reference count " + std::to_string(references.size()));
  }
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i].empty()) throw ContractViolation("example " + std::to_string(i) + " has no reference");
  }
  if (options.workers == 0) throw ContractViolation("workers must be >= 1");
}

inline void check_report(const ScoreReport& report, std::size_t n) {
  if (report.sentence_scores.size() != n) {
    throw ContractViolation("scorer '" + report.scorer + "' returned " + std::to_string(report.sentence_scores.size()) +
                            " sentence scores for " + std::to_string(n) + " hypotheses");
  }
  if (!std::isfinite(report.corpus_score)) throw ContractViolation("scorer '" + report.scorer + "' returned a non-finite corpus score");
  for (double s : report.sentence_scores) {
    if (!std::isfinite(s)) throw ContractViolation("scorer '" + report.scorer + "' returned a non-finite sentence score");
  }
}

}  // namespace detail

/// Scores a corpus and keeps the per-example statistics.
inline ScoredCorpus score_corpus(const ScorerRegistry& registry, std::string_view id,
                                 std::span<const std::string> hypotheses, const PerExampleReferences& references,
                                 const RunOptions& options = {}) {
  const Scorer& scorer = registry.get(id);
  detail::check_inputs(hypotheses, references, options);
  ++instrumentation::metric_computations;
  ScoredCorpus scored = scorer.score_corpus(hypotheses, references, options);
  scored.report.scorer = std::string(id);
  detail::check_report(scored.report, hypotheses.size());
  return scored;
}

inline ScoreReport calculate_score(const ScorerRegistry& registry, std::string_view id,
                                   std::span<const std::string> hypotheses, const PerExampleReferences& references,
                                   const RunOptions& options = {}) {
  return score_corpus(registry, id, hypotheses, references, options).report;
}

inline ScoreReport calculate_score(const ScorerRegistry& registry, std::string_view id,
                                   std::span<const std::string> hypotheses, const ReferenceStreams& references,
                                   const RunOptions& options = {}) {
  return calculate_score(registry, id, hypotheses, to_per_example(references), options);
}

/// Scores several metrics. Fails before any work if an id is unknown.
inline std::map<std::string, ScoreReport> calculate_all(const ScorerRegistry& registry,
                                                        std::span<const std::string> ids,
                                                        std::span<const std::string> hypotheses,
                                                        const PerExampleReferences& references,
                                                        const RunOptions& options = {}) {
  for (const auto& id : ids) {
    if (!registry.contains(id)) throw LookupError("unknown scorer '" + id + "'");
  }
  std::map<std::string, ScoreReport> out;
  for (const auto& id : ids) out.emplace(id, calculate_score(registry, id, hypotheses, references, options));
  return out;
}

}  // namespace seqeval

#pragma once

// JSON wire form (snake_case keys) of the library's payload types.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seqeval/analytics.hpp"
#include "seqeval/corpus.hpp"
#include "seqeval/engine.hpp"
#include "seqeval/store/ingest.hpp"
#include "seqeval/store/layout.hpp"

namespace seqeval {

using nlohmann::json;

inline json ranked_pairs(const std::vector<std::pair<std::string, std::size_t>>& pairs, const char* key) {
  json out = json::array();
  for (const auto& [name, count] : pairs) out.push_back({{key, name}, {"count", count}});
  return out;
}

inline void to_json(json& j, const ScoreReport& r) {
  j = {{"scorer", r.scorer}, {"corpus_score", r.corpus_score}, {"sentence_scores", r.sentence_scores}};
}

inline void from_json(const json& j, ScoreReport& r) {
  j.at("scorer").get_to(r.scorer);
  j.at("corpus_score").get_to(r.corpus_score);
  j.at("sentence_scores").get_to(r.sentence_scores);
}

inline void to_json(json& j, const ScoredCorpus& s) {
  j = {{"report", s.report}, {"stats_width", s.stats_width}, {"stats", s.stats}};
}

inline void from_json(const json& j, ScoredCorpus& s) {
  j.at("report").get_to(s.report);
  j.at("stats_width").get_to(s.stats_width);
  j.at("stats").get_to(s.stats);
}

inline void to_json(json& j, const HistogramBin& b) { j = {{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}}; }

inline void to_json(json& j, const StreamStats& s) {
  j = {{"stream", s.stream},
       {"kind", s.kind},
       {"sentence_count", s.sentence_count},
       {"token_count", s.token_count},
       {"char_count", s.char_count},
       {"length_histogram", s.length_histogram},
       {"token_frequency", ranked_pairs(s.token_frequency, "token")}};
}

inline void to_json(json& j, const DatasetStats& s) { j = {{"streams", s.streams}}; }

inline void to_json(json& j, const NGramEntry& e) {
  j = {{"ngram", e.ngram}, {"count", e.count}, {"examples", e.examples}};
}

inline void from_json(const json& j, NGramEntry& e) {
  j.at("ngram").get_to(e.ngram);
  j.at("count").get_to(e.count);
  j.at("examples").get_to(e.examples);
}

inline void to_json(json& j, const NGramTable& t) { j = {{"n", t.n}, {"entries", t.entries}}; }

inline void from_json(const json& j, NGramTable& t) {
  j.at("n").get_to(t.n);
  j.at("entries").get_to(t.entries);
}

inline void to_json(json& j, const HighlightSpan& s) { j = {{"begin", s.begin}, {"end", s.end}, {"matched", s.matched}}; }

inline void to_json(json& j, const ScoreHistogram& h) {
  j = {{"scorer", h.scorer}, {"lo", h.lo}, {"hi", h.hi}, {"bins", h.bins}};
}

inline void to_json(json& j, const GroupRow& r) {
  j = {{"group", r.group}, {"example_count", r.example_count}, {"metric", r.metric},
       {"scores", r.scores}, {"best", r.best},                  {"worst", r.worst}};
}

inline void to_json(json& j, const GroupScores& g) {
  j = {{"models", g.models}, {"metrics", g.metrics}, {"rows", g.rows}, {"notes", g.notes}};
}

inline void to_json(json& j, const Violation& v) { j = {{"subject", v.subject}, {"message", v.message}}; }

namespace store {

inline void to_json(json& j, const EvalSetSummary& s) {
  j = {{"task", s.task},     {"name", s.name},         {"valid", s.valid},
       {"example_count", s.example_count}, {"models", s.models}, {"errors", s.errors},
       {"warnings", s.warnings}};
}

inline void to_json(json& j, const IngestReport& r) {
  j = {{"task", r.task},
       {"set", r.set},
       {"files", r.files},
       {"example_count", r.example_count},
       {"sources", r.sources},
       {"references", r.references},
       {"models", r.models},
       {"tags", r.tags}};
}

}  // namespace store

}  // namespace seqeval

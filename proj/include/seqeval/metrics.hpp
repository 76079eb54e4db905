#pragma once

#include <memory>

#include "seqeval/engine.hpp"
#include "seqeval/metrics/bleu.hpp"
#include "seqeval/metrics/chrf.hpp"
#include "seqeval/metrics/edit.hpp"
#include "seqeval/metrics/gleu.hpp"
#include "seqeval/metrics/nist.hpp"
#include "seqeval/metrics/overlap.hpp"
#include "seqeval/metrics/ribes.hpp"

namespace seqeval {

/// Adds the built-in n-gram and edit-distance metrics to `registry`.
inline void register_builtin_scorers(ScorerRegistry& registry) {
  using namespace metrics;
  registry.add("bleu", std::make_shared<BleuScorer>());
  registry.add("chrf", std::make_shared<ChrfScorer>());
  registry.add("cider", std::make_shared<CiderScorer>());
  registry.add("gleu", std::make_shared<GleuScorer>());
  registry.add("nist", std::make_shared<NistScorer>());
  registry.add("ribes", std::make_shared<RibesScorer>());
  registry.add("rouge_1", std::make_shared<RougeNScorer<1>>());
  registry.add("rouge_2", std::make_shared<RougeNScorer<2>>());
  registry.add("rouge_l", std::make_shared<RougeLScorer>());
  registry.add("ter", std::make_shared<TerScorer>());
  registry.add("wer", std::make_shared<WerScorer>());
}

inline ScorerRegistry builtin_scorers() {
  ScorerRegistry registry;
  register_builtin_scorers(registry);
  return registry;
}

}  // namespace seqeval

// Registers two user metrics next to the built-ins and scores a tiny corpus
// with them.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "seqeval/metrics.hpp"

int main() {
  using namespace seqeval;

  ScorerRegistry registry = builtin_scorers();

  // Sentence-level: exact match against any reference, 0 or 100.
  registry.add_sentence_function("exact_match", [](std::span<const std::string> hyp,
                                                   const std::vector<std::vector<std::string>>& refs) {
    const bool hit = std::any_of(refs.begin(), refs.end(), [&](const auto& r) {
      return std::equal(hyp.begin(), hyp.end(), r.begin(), r.end());
    });
    return hit ? 100.0 : 0.0;
  });

  // Corpus-level: hypothesis/reference length ratio over the whole corpus.
  ScorerTraits ratio_traits;
  ratio_traits.bounded = false;
  registry.add_function(
      "length_ratio",
      [](std::span<const std::string> hyps, const PerExampleReferences& refs, std::size_t, bool) {
        double hyp_total = 0, ref_total = 0;
        std::vector<double> sentences;
        for (std::size_t i = 0; i < hyps.size(); ++i) {
          const double h = static_cast<double>(tokenize_words(hyps[i]).size());
          const double r = static_cast<double>(tokenize_words(refs[i].front()).size());
          hyp_total += h;
          ref_total += r;
          sentences.push_back(r > 0 ? h / r : 0.0);
        }
        return std::pair{ref_total > 0 ? hyp_total / ref_total : 0.0, sentences};
      },
      ratio_traits);

  const std::vector<std::string> hyps = {"the cat sat on the mat", "a dog barked", "it rained all day"};
  const PerExampleReferences refs = {{"the cat sat on the mat"}, {"the dog barked loudly"}, {"it rained all day long"}};

  for (const std::string id : {"bleu", "exact_match", "length_ratio"}) {
    const ScoreReport r = calculate_score(registry, id, hyps, refs);
    std::printf("%-13s corpus %8.3f  sentences", id.c_str(), r.corpus_score);
    for (double s : r.sentence_scores) std::printf(" %8.3f", s);
    std::printf("\n");
  }
  return 0;
}

// Lays out an eval set on disk, then queries it the way the server does:
// scores grouped by tag, a page of examples, and a CSV export.

#include <cstdio>
#include <filesystem>

#include "seqeval/workspace.hpp"

namespace fs = std::filesystem;

int main() {
  using namespace seqeval;

  const fs::path root = fs::temp_directory_path() / "seqeval-sample-root";
  fs::remove_all(root);

  EvalSet set;
  set.task = "caption";
  set.name = "dev";
  set.example_count = 3;
  set.sources.push_back({"source_0", Modality::Text, {"photo 1", "photo 2", "photo 3"}});
  set.references.push_back({"reference_0", {"a dog runs on grass", "two cats sleep", "a red car"}});
  set.models.push_back({"baseline", {"a dog on grass", "a cat sleeps", "a car"}});
  set.models.push_back({"tuned", {"a dog runs on the grass", "two cats sleep", "a red truck"}});
  set.tags.push_back({"animals", TagOrigin::User, {0, 1}});

  store::EvalSetConfig cfg;
  cfg.default_metrics = {"bleu", "rouge_l"};
  store::write_eval_set(root / set.task / set.name, set, cfg);

  WorkspaceOptions opts;
  opts.root = root;
  Workspace ws(opts);

  GroupScoresRequest request;
  request.metrics = {"bleu", "wer"};
  request.tags = {"animals"};
  for (const auto& row : ws.scores("caption", "dev", request).rows) {
    std::printf("%-8s %-5s baseline %7.3f  tuned %7.3f\n", row.group.c_str(), row.metric.c_str(), row.scores[0],
                row.scores[1]);
  }

  ExampleQuery q;
  q.sort_by = "bleu";
  q.models = {"tuned"};
  for (const auto& ex : ws.examples("caption", "dev", q).items) {
    std::printf("#%zu %s\n", ex.index, ex.models[0].prediction.c_str());
  }

  std::printf("%s", ws.export_table("caption", "dev", "scores", "csv", request).body.c_str());
  fs::remove_all(root);
  return 0;
}

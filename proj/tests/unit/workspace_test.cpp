#include "seqeval/workspace.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_store.hpp"

using namespace seqeval;
using seqeval::testing::TempDir;
namespace fs = std::filesystem;

namespace {

EvalSet keyword_set() {
  auto s = seqeval::testing::make_eval_set(
      {"alpha one", "beta two", "gamma three", "delta four"},
      {{"alpha one", "beta two", "gamma three", "delta four"}},
      {{"good", {"alpha one", "beta two", "gamma x", "delta four"}}, {"bad", {"x", "beta", "gamma three", "y"}}});
  s.tags.push_back({"t1", TagOrigin::User, {0, 1, 2}});
  s.tags.push_back({"t2", TagOrigin::User, {1, 2, 3}});
  return s;
}

class WorkspaceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    seqeval::testing::write_set(root_.path(), keyword_set());
    WorkspaceOptions o;
    o.root = root_.path();
    ws_ = std::make_unique<Workspace>(o);
  }

  TempDir root_;
  std::unique_ptr<Workspace> ws_;
};

}  // namespace

TEST(ExampleQueryParse, Defaults) {
  const auto q = parse_example_query({});
  EXPECT_EQ(q.page, 1u);
  EXPECT_EQ(q.page_size, 10u);
  EXPECT_EQ(q.sort_by, "index");
  EXPECT_FALSE(q.descending);
}

TEST(ExampleQueryParse, InvalidFieldsNameTheField) {
  auto field_of = [](std::map<std::string, std::string> p) {
    try {
      parse_example_query(p);
    } catch (const InvalidRequest& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of({{"page_size", "7"}}), "page_size");
  EXPECT_EQ(field_of({{"page", "0"}}), "page");
  EXPECT_EQ(field_of({{"page", "abc"}}), "page");
  EXPECT_EQ(field_of({{"sort_order", "up"}}), "sort_order");
  EXPECT_EQ(field_of({{"colour", "red"}}), "colour");
  EXPECT_EQ(field_of({{"tags", "a,b"}, {"models", "m"}}), "<none>");
}

TEST(Media, UrlAndContentType) {
  EXPECT_EQ(media_url("t", "s 1", "source_0.zip/1.jpg"), "/media/t/s%201/source_0.zip/1.jpg");
  EXPECT_EQ(content_type_for("a/b.JPG"), "image/jpeg");
  EXPECT_EQ(content_type_for("x.wav"), "audio/wav");
  EXPECT_EQ(content_type_for("x.unknown"), "application/octet-stream");
}

TEST_F(WorkspaceTest, Listing) {
  EXPECT_EQ(ws_->task_names(), (std::vector<std::string>{"task"}));
  ASSERT_EQ(ws_->sets("task").size(), 1u);
  EXPECT_EQ(ws_->models("task", "set"), (std::vector<std::string>{"bad", "good"}));
  EXPECT_THROW(ws_->sets("nope"), LookupError);
  EXPECT_THROW(ws_->models("task", "nope"), LookupError);
  EXPECT_THROW(ws_->models("task", ".."), LookupError);
}

TEST_F(WorkspaceTest, KeywordMatchesExactlyOneExample) {
  ExampleQuery q;
  q.keyword = "GAMMA";
  const auto page = ws_->examples("task", "set", q);
  EXPECT_EQ(page.total, 1u);
  ASSERT_EQ(page.items.size(), 1u);
  EXPECT_EQ(page.items[0].index, 2u);
}

TEST_F(WorkspaceTest, TagFilterIsIntersection) {
  ExampleQuery q;
  q.tags = {"t1", "t2"};
  const auto page = ws_->examples("task", "set", q);
  std::vector<std::size_t> got;
  for (const auto& it : page.items) got.push_back(it.index);
  EXPECT_EQ(got, (std::vector<std::size_t>{1, 2}));
  q.tags = {"missing"};
  EXPECT_THROW(ws_->examples("task", "set", q), InvalidRequest);
}

TEST_F(WorkspaceTest, SortByMetricFollowsScores) {
  ExampleQuery q;
  q.sort_by = "bleu";
  q.descending = true;
  q.models = {"bad"};
  const auto page = ws_->examples("task", "set", q);
  const auto report = ws_->scored("task", "set", "bleu", "bad").report;
  ASSERT_EQ(page.items.size(), 4u);
  for (std::size_t k = 1; k < page.items.size(); ++k) {
    const double prev = report.sentence_scores[page.items[k - 1].index];
    const double cur = report.sentence_scores[page.items[k].index];
    EXPECT_TRUE(prev > cur || (prev == cur && page.items[k - 1].index < page.items[k].index));
  }
  EXPECT_EQ(page.items[0].index, 2u);
}

TEST_F(WorkspaceTest, UnknownSortKeyIsRejected) {
  ExampleQuery q;
  q.sort_by = "meteor";
  try {
    ws_->examples("task", "set", q);
    FAIL();
  } catch (const InvalidRequest& e) {
    EXPECT_EQ(e.field(), "sort_by");
  }
}

TEST_F(WorkspaceTest, MarkersAndHighlights) {
  ExampleQuery q;
  q.metrics = {"bleu", "wer"};
  const auto page = ws_->examples("task", "set", q);
  const auto& ex0 = page.items[0];  // good is exact, bad is "x"
  ASSERT_EQ(ex0.models.size(), 2u);
  const auto& bad = ex0.models[0];
  const auto& good = ex0.models[1];
  ASSERT_EQ(good.model, "good");
  EXPECT_TRUE(good.scores[0].best);   // bleu
  EXPECT_TRUE(bad.scores[0].worst);
  EXPECT_TRUE(good.scores[1].best);   // wer, lower is better
  EXPECT_TRUE(bad.scores[1].worst);
  ASSERT_EQ(good.spans.size(), 1u);
  EXPECT_TRUE(good.spans[0].matched);
  ASSERT_EQ(bad.spans.size(), 1u);
  EXPECT_FALSE(bad.spans[0].matched);
  EXPECT_EQ(ex0.sources[0].text, "alpha one");
  EXPECT_EQ(ex0.tags.front(), "t1");
  EXPECT_NE(std::find(ex0.tags.begin(), ex0.tags.end(), "auto:lang:latin"), ex0.tags.end());
  EXPECT_EQ(std::find(ex0.tags.begin(), ex0.tags.end(), "t2"), ex0.tags.end());
}

TEST_F(WorkspaceTest, PageBeyondLastIsEmpty) {
  ExampleQuery q;
  q.page = 5;
  const auto page = ws_->examples("task", "set", q);
  EXPECT_EQ(page.total, 4u);
  EXPECT_TRUE(page.items.empty());
}

TEST_F(WorkspaceTest, CachedScoresEqualFresh) {
  const auto set = keyword_set();
  for (const auto& metric : ws_->registry().ids()) {
    for (const auto& model : set.model_names()) {
      const auto first = ws_->scored("task", "set", metric, model);
      const auto before = metric_computation_count();
      const auto second = ws_->scored("task", "set", metric, model);
      EXPECT_EQ(metric_computation_count(), before) << metric;
      const auto fresh = score_corpus(ws_->registry(), metric, set.model(model)->items, all_references(set));
      EXPECT_EQ(second, fresh) << metric << " " << model;
      EXPECT_EQ(first, fresh) << metric << " " << model;
    }
  }
}

TEST_F(WorkspaceTest, ModifiedPredictionInvalidatesOnlyThatModel) {
  ws_->scored("task", "set", "bleu", "good");
  ws_->scored("task", "set", "bleu", "bad");
  seqeval::testing::write_file(root_.path() / "task" / "set" / "bad" / "prediction.txt", "a\nb\nc\nd\n");
  const auto before = metric_computation_count();
  ws_->scored("task", "set", "bleu", "good");
  EXPECT_EQ(metric_computation_count(), before);
  ws_->scored("task", "set", "bleu", "bad");
  EXPECT_EQ(metric_computation_count(), before + 1);
}

TEST_F(WorkspaceTest, GroupScoresUseDefaultMetrics) {
  const auto g = ws_->scores("task", "set", {});
  EXPECT_EQ(g.metrics, (std::vector<std::string>{"bleu"}));
  ASSERT_EQ(g.rows.size(), 1u);
  GroupScoresRequest r;
  r.metrics = {"nope"};
  EXPECT_THROW(ws_->scores("task", "set", r), InvalidRequest);
  r.metrics = {"bleu"};
  r.all_tags = true;
  std::size_t non_empty = 0;
  for (const auto& t : ws_->load("task", "set")->set.tags) non_empty += t.members.empty() ? 0 : 1;
  EXPECT_EQ(ws_->scores("task", "set", r).rows.size(), 1 + non_empty);
  r.all_tags = false;
  r.tags = {"t1", "t2"};
  const auto g2 = ws_->scores("task", "set", r);
  ASSERT_EQ(g2.rows.size(), 3u);
  EXPECT_EQ(g2.rows[1].group, "t1");
  EXPECT_EQ(g2.rows[1].example_count, 3u);
}

TEST_F(WorkspaceTest, ExportNamesAndFormats) {
  const auto csv = ws_->export_table("task", "set", "scores", "csv");
  EXPECT_EQ(csv.filename, "task_set_scores.csv");
  EXPECT_EQ(csv.body.substr(0, 16), "metric,bad,good\n");
  const auto tex = ws_->export_table("task", "set", "stats", "latex");
  EXPECT_EQ(tex.filename, "task_set_stats.tex");
  EXPECT_NE(tex.body.find("sentence\\_count"), std::string::npos);
  EXPECT_THROW(ws_->export_table("task", "set", "scores", "xlsx"), InvalidRequest);
  EXPECT_THROW(ws_->export_table("task", "set", "models", "csv"), InvalidRequest);
}

TEST_F(WorkspaceTest, NgramsAndDistributions) {
  const auto t = ws_->ngrams("task", "set", 1, 3);
  EXPECT_EQ(t, top_ngrams(keyword_set(), 1, 3));
  EXPECT_EQ(ws_->ngrams("task", "set", 1, 3), t);
  EXPECT_THROW(ws_->ngrams("task", "set", 5, 3), InvalidRequest);
  const auto d = ws_->score_dist("task", "set", "bleu", {}, 4);
  ASSERT_EQ(d.models.size(), 2u);
  std::size_t total = 0;
  for (const auto& b : d.models[0].second.bins) total += b.count;
  EXPECT_EQ(total, 4u);
}

TEST_F(WorkspaceTest, ReloadsAfterChange) {
  EXPECT_EQ(ws_->models("task", "set").size(), 2u);
  seqeval::testing::write_file(root_.path() / "task" / "set" / "third" / "prediction.txt", "a\nb\nc\nd\n");
  EXPECT_EQ(ws_->models("task", "set").size(), 3u);
  EXPECT_EQ(ws_->data_root().set("task", "set")->models.size(), 3u);
}

TEST_F(WorkspaceTest, MediaAllowList) {
  const auto dir = root_.path() / "task" / "media";
  store::ZipWriter w;
  w.add("1.png", "PNG1");
  w.add("2.png", "PNG2");
  seqeval::testing::write_file(dir / "source_0.zip", w.finish());
  seqeval::testing::write_file(dir / "source_1.txt", "audio/a.wav\naudio/b.wav\n");
  seqeval::testing::write_file(dir / "audio" / "a.wav", "RIFFa");
  seqeval::testing::write_file(dir / "audio" / "b.wav", "RIFFb");
  seqeval::testing::write_file(dir / "secret.txt", "no");
  seqeval::testing::write_file(dir / "reference_0.txt", "x\ny\n");
  store::EvalSetConfig cfg;
  cfg.source_modalities = {{"source_0", Modality::Image}, {"source_1", Modality::Audio}};
  store::write_config(dir, cfg);

  const auto img = ws_->media("task", "media", "source_0.zip/2.png");
  ASSERT_TRUE(img.has_value());
  EXPECT_EQ(img->bytes, "PNG2");
  EXPECT_EQ(img->content_type, "image/png");
  const auto wav = ws_->media("task", "media", "audio/b.wav");
  ASSERT_TRUE(wav.has_value());
  EXPECT_EQ(wav->content_type, "audio/wav");
  EXPECT_FALSE(ws_->media("task", "media", "secret.txt").has_value());
  EXPECT_FALSE(ws_->media("task", "media", "reference_0.txt").has_value());
  EXPECT_THROW(ws_->media("task", "media", "../set/good/prediction.txt"), SecurityError);

  ExampleQuery q;
  const auto page = ws_->examples("task", "media", q);
  EXPECT_EQ(page.items[1].sources[0].url, "/media/task/media/source_0.zip/2.png");
  EXPECT_EQ(page.items[1].sources[1].url, "/media/task/media/audio/b.wav");
}

TEST(WorkspacePagination, PagesPartitionFilteredSet) {
  TempDir root;
  auto set = seqeval::testing::synthetic_eval_set(230, 17);
  set.tags.push_back({"odd", TagOrigin::User, {}});
  for (std::size_t i = 1; i < 230; i += 2) set.tags.back().members.push_back(i);
  seqeval::testing::write_set(root.path(), set);
  WorkspaceOptions o;
  o.root = root.path();
  Workspace ws(o);
  std::mt19937_64 rng(5);
  const std::vector<std::string> sorts = {"index", "source_length", "bleu", "wer"};
  for (int trial = 0; trial < 6; ++trial) {
    ExampleQuery q;
    q.page_size = kPageSizes[rng() % 4];
    q.sort_by = sorts[rng() % sorts.size()];
    q.descending = rng() % 2;
    if (rng() % 2) q.tags = {"odd"};
    if (rng() % 2) q.keyword = "e";
    std::vector<std::size_t> seen;
    std::size_t total = 0;
    for (q.page = 1;; ++q.page) {
      const auto page = ws.examples("task", "set", q);
      total = page.total;
      if (page.items.empty()) break;
      EXPECT_LE(page.items.size(), q.page_size);
      for (const auto& it : page.items) seen.push_back(it.index);
    }
    EXPECT_EQ(seen.size(), total);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), seen.size());
  }
}

#include "seqeval/api/server.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "test_server.hpp"
#include "test_store.hpp"

using namespace seqeval;
using seqeval::testing::Running;
using seqeval::testing::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

EvalSet fixture_set() {
  auto s = seqeval::testing::make_eval_set(
      {"alpha one", "beta two", "gamma three", "delta_four"},
      {{"alpha one", "beta two", "gamma three", "delta_four"}},
      {{"oracle", {"alpha one", "beta two", "gamma three", "delta_four"}}, {"weak", {"x", "beta", "gamma", "y"}}});
  s.tags.push_back({"t1", TagOrigin::User, {0, 1, 2}});
  s.tags.push_back({"t2", TagOrigin::User, {1, 2, 3}});
  return s;
}

class ApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    seqeval::testing::write_set(root_.path(), fixture_set());
    server_ = std::make_unique<Running>(root_.path());
  }

  json get_json(const std::string& path, int expected_status = 200) {
    auto res = server_->client().Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expected_status) << path << "\n" << res->body;
    return json::parse(res->body);
  }

  TempDir root_;
  std::unique_ptr<Running> server_;
};

}  // namespace

TEST(ApiEmptyRoot, TasksIsEmptyList) {
  TempDir root;
  Running server(root.path());
  auto res = server.client().Get("/api/tasks");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "[]");
}

TEST_F(ApiTest, Listing) {
  EXPECT_EQ(get_json("/api/tasks"), json::array({"task"}));
  const auto sets = get_json("/api/tasks/task/sets");
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0]["name"], "set");
  EXPECT_EQ(sets[0]["valid"], true);
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/models"), json::array({"oracle", "weak"}));
  EXPECT_EQ(get_json("/api/metrics").size(), 11u);
}

TEST_F(ApiTest, UnknownPathsAre404) {
  EXPECT_TRUE(get_json("/api/tasks/nope/sets", 404).contains("error"));
  get_json("/api/tasks/task/sets/nope/models", 404);
  get_json("/api/tasks/task/sets/set/nothing", 404);
  get_json("/api/other", 404);
}

TEST_F(ApiTest, UnknownQueryFieldIs400WithFieldName) {
  const auto body = get_json("/api/tasks/task/sets/set/examples?colour=red", 400);
  EXPECT_EQ(body["field"], "colour");
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/examples?page_size=7", 400)["field"], "page_size");
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/examples?sort_by=meteor", 400)["field"], "sort_by");
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/stats?x=1", 400)["field"], "x");
}

TEST_F(ApiTest, ExamplesPayload) {
  const auto page = get_json("/api/tasks/task/sets/set/examples?keyword=GAMMA&metrics=bleu");
  EXPECT_EQ(page["total"], 1);
  ASSERT_EQ(page["items"].size(), 1u);
  const auto& item = page["items"][0];
  EXPECT_EQ(item["index"], 2);
  EXPECT_EQ(item["references"], json::array({"gamma three"}));
  EXPECT_EQ(item["sources"][0]["text"], "gamma three");
  EXPECT_EQ(item["models"][0]["model"], "oracle");
  EXPECT_EQ(item["models"][0]["scores"][0]["best"], true);
  EXPECT_EQ(item["models"][1]["scores"][0]["worst"], true);
  const auto tags = get_json("/api/tasks/task/sets/set/examples?tags=t1,t2");
  EXPECT_EQ(tags["total"], 2);
}

TEST_F(ApiTest, ExamplesSortedByMetric) {
  const auto page = get_json("/api/tasks/task/sets/set/examples?sort_by=bleu&sort_order=desc&models=weak");
  const auto report = server_->workspace().scored("task", "set", "bleu", "weak").report;
  double prev = 1e9;
  for (const auto& it : page["items"]) {
    const double s = report.sentence_scores[it["index"].get<std::size_t>()];
    EXPECT_LE(s, prev);
    prev = s;
  }
}

TEST_F(ApiTest, ScoresIdentityModelIsBest) {
  const auto g = get_json("/api/tasks/task/sets/set/scores?metrics=bleu");
  ASSERT_EQ(g["rows"].size(), 1u);
  EXPECT_EQ(g["rows"][0]["group"], "ALL");
  EXPECT_DOUBLE_EQ(g["rows"][0]["scores"][0].get<double>(), 100.0);
  EXPECT_EQ(g["rows"][0]["best"][0], true);
  EXPECT_EQ(g["rows"][0]["worst"][1], true);
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/scores?metrics=nope", 400)["field"], "metrics");
  const auto grouped = get_json("/api/tasks/task/sets/set/scores?metrics=bleu&group_by=tags&tags=t1,t2");
  EXPECT_EQ(grouped["rows"].size(), 3u);
}

TEST_F(ApiTest, AnalyticsEndpointsMatchLibrary) {
  auto& ws = server_->workspace();
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/stats"), json(ws.stats("task", "set")));
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/ngrams?n=2&k=3"), json(ws.ngrams("task", "set", 2, 3)));
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/ngrams?n=9", 400)["field"], "n");
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/score_dist?metric=bleu&bins=5"),
            json(ws.score_dist("task", "set", "bleu", {}, 5)));
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/score_dist", 400)["field"], "metric");
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/tags"), tag_distribution_json(ws.tags("task", "set")));
}

TEST_F(ApiTest, RepeatedRequestsAreIdentical) {
  auto c = server_->client();
  for (const std::string path : {"/api/tasks/task/sets/set/examples?page_size=25&sort_by=wer",
                                 "/api/tasks/task/sets/set/scores?metrics=bleu,ter&group_by=tags"}) {
    const auto a = c.Get(path);
    const auto b = c.Get(path);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->body, b->body);
  }
}

TEST_F(ApiTest, Export) {
  auto res = server_->client().Get("/api/tasks/task/sets/set/export?table=scores&format=csv&metrics=bleu,wer");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Disposition"), "attachment; filename=\"task_set_scores.csv\"");
  GroupScoresRequest r;
  r.metrics = {"bleu", "wer"};
  EXPECT_EQ(res->body, server_->workspace().export_table("task", "set", "scores", "csv", r).body);
  auto tex = server_->client().Get("/api/tasks/task/sets/set/export?table=stats&format=latex");
  ASSERT_TRUE(tex);
  EXPECT_NE(tex->body.find("reference\\_0"), std::string::npos);
  EXPECT_EQ(get_json("/api/tasks/task/sets/set/export?table=scores&format=xlsx", 400)["field"], "format");
}

TEST_F(ApiTest, UploadStatuses) {
  auto c = server_->client();
  TempDir src;
  auto other = fixture_set();
  store::write_eval_set(src.path(), other);
  const auto good = seqeval::testing::zip_directory(src.path(), "task/uploaded");

  httplib::MultipartFormDataItems items = {{"file", good, "set.zip", "application/zip"}};
  auto res = c.Post("/api/upload", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201) << res->body;
  const auto report = json::parse(res->body);
  EXPECT_EQ(report["set"], "uploaded");
  EXPECT_EQ(report["example_count"], 4);
  EXPECT_EQ(get_json("/api/tasks/task/sets").size(), 2u);

  store::ZipWriter evil;
  evil.add("../evil", "x");
  res = c.Post("/api/upload", evil.finish(), "application/zip");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  store::ZipWriter bad;
  bad.add("task/bad/source_0.txt", "a\nb\n");
  bad.add("task/bad/reference_0.txt", "a\n");
  res = c.Post("/api/upload", bad.finish(), "application/zip");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body)["violations"], json::array({"reference_0.txt: expected 2, found 1"}));

  res = c.Post("/api/upload", good, "application/zip");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(get_json("/api/tasks/task/sets").size(), 2u);
}

TEST(ApiUploadLimit, OversizedBodyIsRejected) {
  TempDir root;
  api::ServerOptions opts;
  opts.max_upload_bytes = 1024;
  Running server(root.path(), opts);
  auto res = server.client().Post("/api/upload", std::string(4096, 'x'), "application/zip");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 413);
}

TEST_F(ApiTest, Media) {
  const auto dir = root_.path() / "task" / "media";
  store::ZipWriter w;
  w.add("1.png", "PNG-ONE");
  w.add("2.png", std::string(1000, 'v'));
  seqeval::testing::write_file(dir / "source_0.zip", w.finish());
  seqeval::testing::write_file(dir / "reference_0.txt", "x\ny\n");
  store::EvalSetConfig cfg;
  cfg.source_modalities = {{"source_0", Modality::Video}};
  store::write_config(dir, cfg);

  auto c = server_->client();
  auto res = c.Get("/media/task/media/source_0.zip/1.png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body, "PNG-ONE");

  res = c.Get("/media/task/media/source_0.zip/2.png", {{"Range", "bytes=10-19"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 206);
  EXPECT_EQ(res->body, std::string(10, 'v'));

  res = c.Get("/media/task/media/reference_0.txt");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = c.Get("/media/task/media/../set/oracle/prediction.txt");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST(ApiTimeout, SlowComputationAnswers202ThenResult) {
  TempDir root;
  seqeval::testing::write_set(root.path(), seqeval::testing::synthetic_eval_set(50, 2));
  auto registry = std::make_shared<ScorerRegistry>(builtin_scorers());
  std::atomic<int> calls{0};
  registry->add_sentence_function("slow", [&](std::span<const std::string>, const std::vector<std::vector<std::string>>&) {
    if (calls++ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(600));
    return 1.0;
  });
  WorkspaceOptions o;
  o.root = root.path();
  Workspace ws(o, registry);
  api::ServerOptions opts;
  opts.request_timeout = std::chrono::milliseconds(100);
  api::Server server(ws, opts);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.serve(); });
  server.http().wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/api/tasks/task/sets/set/scores?metrics=slow&models=m1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  EXPECT_EQ(res->get_header_value("Retry-After"), "5");
  int status = 202;
  for (int i = 0; i < 100 && status == 202; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = c.Get("/api/tasks/task/sets/set/scores?metrics=slow&models=m1");
    ASSERT_TRUE(res);
    status = res->status;
  }
  EXPECT_EQ(status, 200);
  EXPECT_DOUBLE_EQ(json::parse(res->body)["rows"][0]["scores"][0].get<double>(), 1.0);
  server.stop();
  t.join();
}

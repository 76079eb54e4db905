// seqeval command-line interface: score, ingest, stats, export, serve.
//
// Exit codes: 0 ok, 1 internal error, 2 usage or data error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqeval/api/server.hpp"
#include "seqeval/metrics.hpp"
#include "seqeval/serialize.hpp"
#include "seqeval/store/layout.hpp"
#include "seqeval/workspace.hpp"

namespace {

using namespace seqeval;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

std::string fixed3(double v) { return format_number(v); }

struct ScoreArgs {
  std::string hypothesis;
  std::vector<std::string> references;
  std::string metrics = "bleu";
  std::size_t workers = 1;
  bool sentence_level = false;
  std::string tokenizer = "whitespace";
  bool json = false;
  bool verbose = false;
};

int run_score(const ScoreArgs& a) {
  const ScorerRegistry registry = builtin_scorers();
  const auto ids = split_list(a.metrics);
  if (ids.empty()) throw UsageError("--metrics is empty");
  for (const auto& id : ids) {
    if (!registry.contains(id)) {
      std::string available;
      for (const auto& known : registry.ids()) available += (available.empty() ? "" : ", ") + known;
      throw UsageError("unknown metric '" + id + "' (available: " + available + ")");
    }
  }
  if (a.workers == 0) throw UsageError("--workers must be at least 1");
  RunOptions options;
  options.workers = a.workers;
  options.verbose = a.verbose;
  options.tokenizer = TokenizerConfig::parse(a.tokenizer);

  const auto hyps = store::read_text_lines(a.hypothesis);
  std::vector<std::vector<std::string>> ref_streams;
  for (const auto& path : a.references) {
    auto lines = store::read_text_lines(path);
    if (lines.size() != hyps.size()) {
      throw UsageError(path + ": expected " + std::to_string(hyps.size()) + ", found " + std::to_string(lines.size()) +
                       " lines");
    }
    ref_streams.push_back(std::move(lines));
  }
  // Empty reference lines mean "no reference in this stream".
  PerExampleReferences refs(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (const auto& stream : ref_streams) {
      if (!stream[i].empty()) refs[i].push_back(stream[i]);
    }
  }

  const auto reports = calculate_all(registry, ids, hyps, refs, options);
  nlohmann::json doc = {{"hypothesis", a.hypothesis}, {"scores", nlohmann::json::object()}};
  for (const auto& id : ids) {
    const ScoreReport& r = reports.at(id);
    doc["scores"][id] = r.corpus_score;
    if (a.sentence_level) {
      const std::string out_path = a.hypothesis + "." + id + ".scores";
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      for (double s : r.sentence_scores) out << nlohmann::json(s).dump() << '\n';
      if (!out) throw Error("cannot write " + out_path);
      doc["sentence_level_files"][id] = out_path;
    }
    if (!a.json) std::cout << id << '\t' << fixed3(r.corpus_score) << '\n';
  }
  if (a.json) std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

struct RootArgs {
  std::string data_root;
  std::string fingerprint = "fast";
  bool verify = false;
  std::size_t workers = 1;

  WorkspaceOptions options() const {
    if (data_root.empty()) throw UsageError("--data-root is required (or set SEQEVAL_DATA_ROOT)");
    WorkspaceOptions o;
    o.root = data_root;
    o.fingerprint = verify ? store::FingerprintMode::Strict : store::parse_fingerprint_mode(fingerprint);
    o.workers = workers;
    return o;
  }
};

void add_root_options(CLI::App* cmd, RootArgs& r) {
  cmd->add_option("--data-root", r.data_root, "Data root directory")->envname("SEQEVAL_DATA_ROOT");
  cmd->add_option("--fingerprint", r.fingerprint, "Cache fingerprint mode: fast or strict");
  cmd->add_flag("--verify", r.verify, "Use strict (content hash) fingerprints");
  cmd->add_option("--workers", r.workers, "Scoring workers");
}

int run_ingest(const RootArgs& r, const std::string& archive, bool json) {
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw UsageError("cannot read " + archive);
  std::stringstream ss;
  ss << in.rdbuf();
  Workspace ws(r.options());
  const auto report = ws.ingest(ss.str());
  if (json) {
    std::cout << nlohmann::json(report).dump() << '\n';
  } else {
    std::cout << "ingested " << report.task << "/" << report.set << ": " << report.example_count << " examples, "
              << report.models.size() << " models, " << report.files.size() << " files\n";
  }
  return kExitOk;
}

int run_stats(const RootArgs& r, const std::string& task, const std::string& set, bool json) {
  Workspace ws(r.options());
  const auto stats = ws.stats(task, set);
  if (json) {
    std::cout << nlohmann::json(stats).dump() << '\n';
    return kExitOk;
  }
  std::printf("%-16s %-10s %10s %10s %10s\n", "stream", "kind", "sentences", "tokens", "chars");
  for (const auto& s : stats.streams) {
    std::printf("%-16s %-10s %10zu %10zu %10zu\n", s.stream.c_str(), s.kind.c_str(), s.sentence_count, s.token_count,
                s.char_count);
  }
  return kExitOk;
}

struct ExportArgs {
  std::string task, set, table = "scores", format = "csv", metrics, models, group_by, tags, output;
};

int run_export(const RootArgs& r, const ExportArgs& e) {
  Workspace ws(r.options());
  std::map<std::string, std::string> params;
  if (!e.metrics.empty()) params["metrics"] = e.metrics;
  if (!e.models.empty()) params["models"] = e.models;
  if (!e.group_by.empty()) params["group_by"] = e.group_by;
  if (!e.tags.empty()) params["tags"] = e.tags;
  const auto out = ws.export_table(e.task, e.set, e.table, e.format, api::group_request(params));
  if (e.output.empty()) {
    std::cout << out.body;
  } else {
    std::ofstream f(e.output, std::ios::binary | std::ios::trunc);
    f << out.body;
    if (!f) throw Error("cannot write " + e.output);
  }
  return kExitOk;
}

api::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  double watch_interval = 5.0;
  double timeout = 120.0;
  std::size_t max_upload_mb = 1024;
};

int run_serve(const RootArgs& r, const ServeArgs& s) {
  Workspace ws(r.options());
  api::ServerOptions opts;
  opts.watch_interval = std::chrono::milliseconds(static_cast<long long>(s.watch_interval * 1000));
  opts.request_timeout = std::chrono::milliseconds(static_cast<long long>(s.timeout * 1000));
  opts.max_upload_bytes = s.max_upload_mb << 20;
  opts.job_workers = std::max<std::size_t>(2, r.workers);
  api::Server server(ws, opts);
  const int port = server.bind(s.host, s.port);
  if (port < 0) throw UsageError("cannot bind " + s.host + ":" + std::to_string(s.port));
  std::cerr << "serving " << r.data_root << " on http://" << s.host << ":" << port << "\n";
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqeval: evaluation toolkit for text generation"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score a hypothesis file against reference files");
  score_cmd->add_option("--hypothesis", score.hypothesis, "Hypothesis file, one sentence per line")->required();
  score_cmd->add_option("--references", score.references, "Reference files (one stream each)")->required();
  score_cmd->add_option("--metrics", score.metrics, "Comma-separated metric ids");
  score_cmd->add_option("--workers", score.workers, "Worker threads");
  score_cmd->add_flag("--sentence-level", score.sentence_level, "Write <hypothesis>.<metric>.scores");
  score_cmd->add_option("--tokenizer", score.tokenizer, "whitespace | punct | char, optionally +lower");
  score_cmd->add_flag("--json", score.json, "Print one JSON document");
  score_cmd->add_flag("--verbose", score.verbose, "Report chunk progress on stderr");

  RootArgs ingest_root;
  std::string archive;
  bool ingest_json = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Unpack and validate an eval set archive");
  ingest_cmd->add_option("archive", archive, "Zip archive")->required();
  add_root_options(ingest_cmd, ingest_root);
  ingest_cmd->add_flag("--json", ingest_json, "Print the ingestion report as JSON");

  RootArgs stats_root;
  std::string stats_task, stats_set;
  bool stats_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics of an eval set");
  add_root_options(stats_cmd, stats_root);
  stats_cmd->add_option("--task", stats_task)->required();
  stats_cmd->add_option("--set", stats_set)->required();
  stats_cmd->add_flag("--json", stats_json, "Print the API payload");

  RootArgs export_root;
  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "Export a score or statistics table");
  add_root_options(export_cmd, export_root);
  export_cmd->add_option("--task", exp.task)->required();
  export_cmd->add_option("--set", exp.set)->required();
  export_cmd->add_option("--table", exp.table, "scores | stats");
  export_cmd->add_option("--format", exp.format, "csv | latex");
  export_cmd->add_option("--metrics", exp.metrics, "Comma-separated metric ids");
  export_cmd->add_option("--models", exp.models, "Comma-separated models");
  export_cmd->add_option("--group-by", exp.group_by, "'tags' adds one row group per tag");
  export_cmd->add_option("--tags", exp.tags, "Comma-separated tags to group by");
  export_cmd->add_option("--output", exp.output, "Write to a file instead of standard output");

  RootArgs serve_root;
  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  add_root_options(serve_cmd, serve_root);
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);
  serve_cmd->add_option("--watch-interval", serve.watch_interval, "Seconds between data root polls");
  serve_cmd->add_option("--timeout", serve.timeout, "Seconds before a long request answers 202");
  serve_cmd->add_option("--max-upload-mb", serve.max_upload_mb);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*score_cmd) return run_score(score);
    if (*ingest_cmd) return run_ingest(ingest_root, archive, ingest_json);
    if (*stats_cmd) return run_stats(stats_root, stats_task, stats_set, stats_json);
    if (*export_cmd) return run_export(export_root, exp);
    if (*serve_cmd) return run_serve(serve_root, serve);
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidRequest& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SecurityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConflictError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UndefinedReferenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

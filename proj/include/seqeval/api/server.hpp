#pragma once

// HTTP/1.1 JSON API over a Workspace.
//
//   GET  /api/metrics
//   GET  /api/tasks
//   GET  /api/tasks/{task}/sets
//   GET  /api/tasks/{task}/sets/{set}/models
//   GET  /api/tasks/{task}/sets/{set}/{examples|scores|stats|ngrams|score_dist|tags|export}
//   POST /api/upload
//   GET  /media/{task}/{set}/{item path}

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/serialize.hpp"
#include "seqeval/store/watch.hpp"
#include "seqeval/workspace.hpp"

namespace seqeval::api {

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
  bool ranges = false;  ///< byte ranges allowed (media)
};

inline Reply json_reply(const nlohmann::json& j, int status = 200) { return {status, j.dump(), "application/json", {}}; }

inline Reply error_reply(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return json_reply(extra, status);
}

/// Maps library errors to HTTP statuses.
inline Reply handle(const std::function<Reply()>& fn) {
  try {
    return fn();
  } catch (const InvalidRequest& e) {
    return error_reply(400, e.what(), {{"field", e.field()}});
  } catch (const SecurityError& e) {
    return error_reply(400, e.what());
  } catch (const LookupError& e) {
    return error_reply(404, e.what());
  } catch (const ConflictError& e) {
    return error_reply(409, e.what());
  } catch (const IntegrityError& e) {
    return error_reply(422, e.what(), {{"violations", e.details()}});
  } catch (const DecodeError& e) {
    return error_reply(422, e.what(), {{"violations", {e.what()}}});
  } catch (const ConfigError& e) {
    return error_reply(422, e.what(), {{"violations", {e.what()}}});
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

/// Fixed-size worker pool. Identical jobs submitted while one is running
/// share its result.
class JobPool {
 public:
  explicit JobPool(std::size_t workers) {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, workers); ++i) threads_.emplace_back([this] { run(); });
  }

  ~JobPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  JobPool(const JobPool&) = delete;
  JobPool& operator=(const JobPool&) = delete;

  std::shared_future<Reply> submit(const std::string& key, std::function<Reply()> fn) {
    std::lock_guard lock(mutex_);
    if (auto it = running_.find(key); it != running_.end()) return it->second;
    auto task = std::make_shared<std::packaged_task<Reply()>>(std::move(fn));
    std::shared_future<Reply> fut = task->get_future().share();
    running_.emplace(key, fut);
    queue_.push_back([this, task, key] {
      (*task)();
      std::lock_guard l(mutex_);
      running_.erase(key);
    });
    cv_.notify_one();
    return fut;
  }

 private:
  void run() {
    while (true) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_ && queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  std::map<std::string, std::shared_future<Reply>> running_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

struct ServerOptions {
  std::size_t job_workers = 2;
  std::chrono::milliseconds request_timeout{120000};
  std::size_t max_upload_bytes = std::size_t{1} << 30;
  std::chrono::milliseconds watch_interval{5000};
  int retry_after_seconds = 5;
};

inline std::map<std::string, std::string> query_params(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : req.params) {
    auto [it, inserted] = out.emplace(k, v);
    if (!inserted) it->second += "," + v;
  }
  return out;
}

inline GroupScoresRequest group_request(const std::map<std::string, std::string>& p) {
  GroupScoresRequest r;
  if (auto it = p.find("metrics"); it != p.end()) r.metrics = split_list(it->second);
  if (auto it = p.find("models"); it != p.end()) r.models = split_list(it->second);
  if (auto it = p.find("tags"); it != p.end()) r.tags = split_list(it->second);
  if (auto it = p.find("group_by"); it != p.end()) {
    if (it->second != "tags") throw InvalidRequest("group_by", "only 'tags' is supported");
    if (r.tags.empty()) r.all_tags = true;
  }
  return r;
}

class Server {
 public:
  Server(Workspace& workspace, ServerOptions options = {})
      : ws_(workspace), options_(options), jobs_(options.job_workers) {
    http_.set_payload_max_length(options_.max_upload_bytes);
    routes();
  }

  ~Server() { stop(); }

  httplib::Server& http() { return http_; }

  /// Binds to `port` (0 = any free port) and returns the bound port, or -1.
  int bind(const std::string& host, int port) {
    if (port == 0) return http_.bind_to_any_port(host);
    return http_.bind_to_port(host, port) ? port : -1;
  }

  /// Serves until stop(); polls the data root for changes meanwhile.
  bool serve() {
    store::Watcher watcher(ws_.options().root, options_.watch_interval, [this] {
      try {
        ws_.data_root();
      } catch (...) {
      }
    });
    watcher.start();
    const bool ok = http_.listen_after_bind();
    watcher.stop();
    return ok;
  }

  void stop() {
    if (http_.is_running()) http_.stop();
  }

 private:
  static void send(httplib::Response& res, const Reply& r) {
    // httplib turns an unset status into 200 or 206 depending on the Range header.
    if (r.ranges && r.status == 200) {
      res.set_header("Accept-Ranges", "bytes");
    } else {
      res.status = r.status;
    }
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, r.content_type);
  }

  // Runs `fn` on the job pool; answers 202 when it outlives the timeout.
  void run_job(const httplib::Request& req, httplib::Response& res, std::function<Reply()> fn) {
    std::string key = req.method + " " + req.path;
    for (const auto& [k, v] : query_params(req)) key += "\n" + k + "=" + v;
    auto fut = jobs_.submit(key, [fn = std::move(fn)] { return handle(fn); });
    if (fut.wait_for(options_.request_timeout) == std::future_status::ready) {
      send(res, fut.get());
      return;
    }
    Reply r = json_reply({{"status", "pending"}, {"retry_after", options_.retry_after_seconds}}, 202);
    r.headers.emplace_back("Retry-After", std::to_string(options_.retry_after_seconds));
    send(res, r);
  }

  void routes() {
    const std::string seg = "([^/]+)";
    const std::string set_prefix = "/api/tasks/" + seg + "/sets/" + seg;

    http_.Get("/api/metrics", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             check_fields(query_params(req), {});
             return json_reply(ws_.registry().ids());
           }));
    });

    http_.Get("/api/tasks", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             check_fields(query_params(req), {});
             return json_reply(ws_.task_names());
           }));
    });

    http_.Get("/api/tasks/" + seg + "/sets", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             check_fields(query_params(req), {});
             return json_reply(ws_.sets(req.matches[1]));
           }));
    });

    http_.Get(set_prefix + "/models", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             check_fields(query_params(req), {});
             return json_reply(ws_.models(req.matches[1], req.matches[2]));
           }));
    });

    http_.Get(set_prefix + "/examples", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        return json_reply(ws_.examples(task, set, parse_example_query(params)));
      });
    });

    http_.Get(set_prefix + "/scores", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {"metrics", "models", "group_by", "tags"});
        return json_reply(ws_.scores(task, set, group_request(params)));
      });
    });

    http_.Get(set_prefix + "/stats", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {});
        return json_reply(ws_.stats(task, set));
      });
    });

    http_.Get(set_prefix + "/ngrams", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {"n", "k"});
        const std::size_t n = params.count("n") ? parse_count("n", params.at("n")) : 1;
        const std::size_t k = params.count("k") ? parse_count("k", params.at("k")) : 20;
        return json_reply(ws_.ngrams(task, set, n, k));
      });
    });

    http_.Get(set_prefix + "/score_dist", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {"metric", "models", "bins"});
        if (!params.count("metric")) throw InvalidRequest("metric", "required");
        const std::size_t bins = params.count("bins") ? parse_count("bins", params.at("bins")) : 0;
        std::vector<std::string> models;
        if (params.count("models")) models = split_list(params.at("models"));
        return json_reply(ws_.score_dist(task, set, params.at("metric"), models, bins));
      });
    });

    http_.Get(set_prefix + "/tags", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {});
        return json_reply(tag_distribution_json(ws_.tags(task, set)));
      });
    });

    http_.Get(set_prefix + "/export", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string task = req.matches[1], set = req.matches[2];
      const auto params = query_params(req);
      run_job(req, res, [this, task, set, params] {
        check_fields(params, {"table", "format", "metrics", "models", "group_by", "tags"});
        if (!params.count("table")) throw InvalidRequest("table", "required");
        const std::string format = params.count("format") ? params.at("format") : "csv";
        const auto out = ws_.export_table(task, set, params.at("table"), format, group_request(params));
        Reply r{200, out.body, out.content_type, {}};
        r.headers.emplace_back("Content-Disposition", "attachment; filename=\"" + out.filename + "\"");
        return r;
      });
    });

    http_.Post("/api/upload", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             std::string blob;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("file")) throw InvalidRequest("file", "multipart upload needs a 'file' part");
               blob = req.get_file_value("file").content;
             } else {
               blob = req.body;
             }
             if (blob.empty()) throw InvalidRequest("file", "empty upload");
             return json_reply(ws_.ingest(blob), 201);
           }));
    });

    http_.Get("/media/" + seg + "/" + seg + "/(.+)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, handle([&] {
             auto item = ws_.media(req.matches[1], req.matches[2], req.matches[3]);
             if (!item) return error_reply(404, "not a registered media item");
             return Reply{200, std::move(item->bytes), item->content_type, {}, true};
           }));
    });

    http_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const int status = res.status;
        send(res, error_reply(status, status == 404 ? "not found" : httplib::status_message(status)));
      }
    });
  }

  Workspace& ws_;
  ServerOptions options_;
  JobPool jobs_;
  httplib::Server http_;
};

}  // namespace seqeval::api

#pragma once

// Poll-based change detection over a data root.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "seqeval/store/layout.hpp"

namespace seqeval::store {

/// (size, mtime) of every layout file under `dir`. Cache directories,
/// hidden entries and machine tag files are skipped since they are written
/// by the toolkit itself.
inline std::map<std::string, std::pair<std::uintmax_t, std::int64_t>> tree_state(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::map<std::string, std::pair<std::uintmax_t, std::int64_t>> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  fs::recursive_directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec);
  for (; !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    const std::string name = it->path().filename().string();
    if (is_hidden_or_reserved(name)) {
      if (it->is_directory(ec)) it.disable_recursion_pending();
      continue;
    }
    const std::string rel = it->path().lexically_relative(dir).generic_string();
    if (it->is_directory(ec)) {
      out[rel + "/"] = {0, 0};
      continue;
    }
    if (name.starts_with(kMachineTagFilePrefix)) continue;
    const auto size = it->file_size(ec);
    const auto t = it->last_write_time(ec);
    out[rel] = {size, std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count()};
  }
  return out;
}

class Watcher {
 public:
  using Callback = std::function<void()>;

  Watcher(std::filesystem::path root, std::chrono::milliseconds interval, Callback on_change)
      : root_(std::move(root)), interval_(interval), on_change_(std::move(on_change)), state_(tree_state(root_)) {}

  ~Watcher() { stop(); }

  Watcher(const Watcher&) = delete;
  Watcher& operator=(const Watcher&) = delete;

  /// Checks once; runs the callback and returns true when the tree changed.
  bool poll_once() {
    auto now = tree_state(root_);
    if (now == state_) return false;
    state_ = std::move(now);
    if (on_change_) on_change_();
    return true;
  }

  void start() {
    if (thread_.joinable()) return;
    stopping_ = false;
    thread_ = std::thread([this] {
      std::unique_lock lock(mutex_);
      while (!cv_.wait_for(lock, interval_, [this] { return stopping_; })) {
        lock.unlock();
        try {
          poll_once();
        } catch (...) {
        }
        lock.lock();
      }
    });
  }

  void stop() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::filesystem::path root_;
  std::chrono::milliseconds interval_;
  Callback on_change_;
  std::map<std::string, std::pair<std::uintmax_t, std::int64_t>> state_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace seqeval::store

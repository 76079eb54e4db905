#pragma once

// Per-eval-set result cache under <set>/__cache__/. An entry is addressed by
// its key and the fingerprints of its input files, so a changed input is a
// miss and a reverted input (strict mode) finds the original entry again.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqeval/store/fingerprint.hpp"

namespace seqeval::store {

inline constexpr int kCacheSchemaVersion = 1;
inline constexpr std::size_t kCacheEntriesPerSlot = 8;
inline constexpr std::string_view kCacheDirName = "__cache__";

namespace instrumentation {
inline std::atomic<std::uint64_t> cache_hits{0};
inline std::atomic<std::uint64_t> cache_misses{0};
}  // namespace instrumentation

struct CacheKey {
  std::string kind;    ///< "score", "ngrams", "tags", ...
  std::string model;   ///< empty when not model-specific
  std::string scorer;  ///< empty when not metric-specific
  std::string params;  ///< tokenizer configuration and other parameters

  nlohmann::json to_json() const { return {{"kind", kind}, {"model", model}, {"scorer", scorer}, {"params", params}}; }

  std::string slot() const { return sha256_hex(kind + '\x1f' + model + '\x1f' + scorer + '\x1f' + params).substr(0, 24); }
};

/// One mutex per eval set directory, shared by every writer in the process.
inline std::mutex& set_lock(const std::filesystem::path& set_dir) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::error_code ec;
  auto canonical = std::filesystem::weakly_canonical(set_dir, ec);
  const std::string id = ec ? set_dir.lexically_normal().string() : canonical.string();
  std::lock_guard lock(registry_mutex);
  auto& m = locks[id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

/// Writes `content` to `path` through a temporary file and rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  const auto tmp = path.parent_path() /
                   (".tmp-" + path.filename().string() + "-" + std::to_string(rd()) + "-" + std::to_string(++counter));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot replace " + path.string());
  }
}

class ResultCache {
 public:
  ResultCache(std::filesystem::path set_dir, FingerprintMode mode) : set_dir_(std::move(set_dir)), mode_(mode) {}

  std::filesystem::path directory() const { return set_dir_ / kCacheDirName; }
  FingerprintMode mode() const { return mode_; }

  /// Cached payload for (key, current input files), if present and valid.
  std::optional<nlohmann::json> lookup(const CacheKey& key, const std::vector<std::filesystem::path>& inputs) const {
    const auto snapshot = snapshot_inputs(inputs);
    return read_entry(entry_path(key, snapshot), key, snapshot);
  }

  nlohmann::json get_or_compute(const CacheKey& key, const std::vector<std::filesystem::path>& inputs,
                                const std::function<nlohmann::json()>& compute) const {
    const auto snapshot = snapshot_inputs(inputs);
    const auto path = entry_path(key, snapshot);
    if (auto hit = read_entry(path, key, snapshot)) {
      ++instrumentation::cache_hits;
      return *std::move(hit);
    }
    ++instrumentation::cache_misses;
    nlohmann::json payload = compute();
    nlohmann::json doc = {
        {"schema_version", kCacheSchemaVersion},
        {"key", key.to_json()},
        {"inputs", snapshot.json},
        {"created_at", std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count()},
        {"payload", payload},
    };
    std::lock_guard lock(set_lock(set_dir_));
    std::filesystem::create_directories(directory());
    write_file_atomic(path, doc.dump());
    prune(key);
    return payload;
  }

  /// Removes every entry of this eval set.
  void clear() const {
    std::lock_guard lock(set_lock(set_dir_));
    std::error_code ec;
    std::filesystem::remove_all(directory(), ec);
  }

 private:
  struct Snapshot {
    nlohmann::json json = nlohmann::json::array();
    std::string digest;
  };

  Snapshot snapshot_inputs(const std::vector<std::filesystem::path>& inputs) const {
    Snapshot s;
    std::string identity = std::string(to_string(mode_));
    for (const auto& p : inputs) {
      const Fingerprint f = fingerprint(p, mode_);
      const std::string rel = p.lexically_relative(set_dir_).generic_string();
      s.json.push_back({{"path", rel}, {"size", f.size}, {"mtime_ns", f.mtime_ns}, {"digest", f.digest}});
      identity += '\n' + rel + '\t' + f.identity();
    }
    s.digest = sha256_hex(identity).substr(0, 24);
    return s;
  }

  std::filesystem::path entry_path(const CacheKey& key, const Snapshot& s) const {
    return directory() / (key.slot() + "-" + s.digest + ".json");
  }

  std::optional<nlohmann::json> read_entry(const std::filesystem::path& path, const CacheKey& key,
                                           const Snapshot& snapshot) const {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    auto doc = nlohmann::json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    if (doc.value("schema_version", -1) != kCacheSchemaVersion) return std::nullopt;
    if (doc.value("key", nlohmann::json()) != key.to_json()) return std::nullopt;
    if (!doc.contains("inputs") || !doc.contains("payload")) return std::nullopt;
    // Validity re-check against the current files, field by field.
    const auto& stored = doc["inputs"];
    if (!stored.is_array() || stored.size() != snapshot.json.size()) return std::nullopt;
    for (std::size_t i = 0; i < stored.size(); ++i) {
      const auto& a = stored[i];
      const auto& b = snapshot.json[i];
      if (a.value("path", "") != b["path"] || a.value("size", std::uint64_t{0}) != b["size"]) return std::nullopt;
      if (mode_ == FingerprintMode::Strict ? a.value("digest", "") != b["digest"]
                                           : a.value("mtime_ns", std::int64_t{0}) != b["mtime_ns"]) {
        return std::nullopt;
      }
    }
    return std::move(doc["payload"]);
  }

  // Keeps the newest kCacheEntriesPerSlot entries of the key's slot.
  void prune(const CacheKey& key) const {
    const std::string prefix = key.slot() + "-";
    std::vector<std::pair<std::filesystem::file_time_type, std::filesystem::path>> entries;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(directory(), ec)) {
      const auto name = e.path().filename().string();
      if (name.starts_with(prefix) && name.ends_with(".json")) {
        entries.emplace_back(e.last_write_time(ec), e.path());
      }
    }
    if (entries.size() <= kCacheEntriesPerSlot) return;
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = kCacheEntriesPerSlot; i < entries.size(); ++i) std::filesystem::remove(entries[i].second, ec);
  }

  std::filesystem::path set_dir_;
  FingerprintMode mode_;
};

}  // namespace seqeval::store

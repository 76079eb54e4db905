#pragma once

// Zip upload ingestion: check every entry, extract into a staging directory
// under the data root, validate, then move the eval set into place.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "seqeval/errors.hpp"
#include "seqeval/store/cache.hpp"
#include "seqeval/store/layout.hpp"
#include "seqeval/store/zip.hpp"

namespace seqeval::store {

struct IngestOptions {
  std::uint64_t max_uncompressed_bytes = std::uint64_t{4} << 30;
  LoadOptions load;
};

struct IngestReport {
  std::string task;
  std::string set;
  std::vector<std::string> files;  ///< relative to the eval set directory
  std::size_t example_count = 0;
  std::vector<std::string> sources;
  std::vector<std::string> references;
  std::vector<std::string> models;
  std::vector<std::string> tags;
};

namespace detail {

inline std::vector<std::string> split_path(std::string_view name) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    std::size_t slash = name.find('/', pos);
    if (slash == std::string_view::npos) slash = name.size();
    parts.emplace_back(name.substr(pos, slash - pos));
    pos = slash + 1;
  }
  if (!parts.empty() && parts.back().empty()) parts.pop_back();
  return parts;
}

/// Throws SecurityError for entries that could escape the extraction root.
inline void check_entry_safe(const ZipEntry& e) {
  const std::string& n = e.name;
  if (n.empty()) throw SecurityError("archive entry with an empty name");
  if (n.front() == '/' || n.find('\\') != std::string::npos || n.find('\0') != std::string::npos ||
      (n.size() > 1 && n[1] == ':')) {
    throw SecurityError("unsafe archive entry '" + n + "'");
  }
  for (const auto& part : split_path(n)) {
    if (part == ".." || part == "." || part.empty()) throw SecurityError("unsafe archive entry '" + n + "'");
  }
  if (e.is_symlink()) throw SecurityError("archive entry '" + n + "' is a symbolic link");
}

inline bool is_metadata_entry(const std::vector<std::string>& parts) {
  return std::any_of(parts.begin(), parts.end(),
                     [](const std::string& p) { return p == "__MACOSX" || p.starts_with("."); });
}

inline std::string staging_name() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  return ".staging-" + std::to_string(rd()) + "-" + std::to_string(++counter);
}

struct RemoveOnExit {
  std::filesystem::path path;
  ~RemoveOnExit() {
    std::error_code ec;
    if (!path.empty()) std::filesystem::remove_all(path, ec);
  }
};

}  // namespace detail

/// Unpacks one `<task>/<set>/` tree into `root`. On any failure the data
/// root is left as it was.
inline IngestReport ingest_zip(const std::string& blob, const std::filesystem::path& root,
                               const IngestOptions& options = {}) {
  namespace fs = std::filesystem;
  ZipReader zip = [&] {
    try {
      return ZipReader::from_memory(blob);
    } catch (const ZipError& e) {
      throw IntegrityError({std::string("archive: ") + e.what()});
    }
  }();

  std::string task, set_name;
  std::vector<const ZipEntry*> files;
  std::uint64_t total = 0;
  for (const auto& e : zip.entries()) detail::check_entry_safe(e);
  for (const auto& e : zip.entries()) {
    const auto parts = detail::split_path(e.name);
    if (detail::is_metadata_entry(parts)) continue;
    if (e.is_directory() && parts.size() <= 2) continue;
    if (parts.size() < 3) {
      throw IntegrityError({"archive entry '" + e.name + "' is outside a <task>/<set>/ directory"});
    }
    if (task.empty()) {
      task = parts[0];
      set_name = parts[1];
    } else if (parts[0] != task || parts[1] != set_name) {
      throw IntegrityError({"archive holds more than one eval set ('" + task + "/" + set_name + "' and '" + parts[0] +
                            "/" + parts[1] + "')"});
    }
    if (!e.is_directory()) {
      total += e.size;
      files.push_back(&e);
    }
  }
  if (task.empty()) throw IntegrityError({"archive contains no <task>/<set>/ files"});
  if (!is_path_safe(task) || !is_path_safe(set_name) || task.starts_with("__") || set_name.starts_with("__")) {
    throw SecurityError("unsafe task or eval set name in archive");
  }
  if (total > options.max_uncompressed_bytes) {
    throw IntegrityError({"archive expands to " + std::to_string(total) + " bytes, above the limit of " +
                          std::to_string(options.max_uncompressed_bytes)});
  }

  const fs::path target = root / task / set_name;
  std::lock_guard lock(set_lock(target));
  if (fs::exists(target)) throw ConflictError("eval set '" + task + "/" + set_name + "' already exists");

  detail::RemoveOnExit staging{root / detail::staging_name()};
  const fs::path staged_set = staging.path / task / set_name;
  IngestReport report;
  report.task = task;
  report.set = set_name;
  for (const ZipEntry* e : files) {
    const fs::path out_path = staging.path / e->name;
    fs::create_directories(out_path.parent_path());
    std::string data;
    try {
      data = zip.read(*e);
    } catch (const ZipError& err) {
      throw IntegrityError({e->name + ": " + err.what()});
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out) throw Error("cannot write " + out_path.string());
    report.files.push_back(e->name.substr(task.size() + set_name.size() + 2));
  }
  std::sort(report.files.begin(), report.files.end());

  LoadOptions load = options.load;
  load.machine_tags = false;
  EvalSet set;
  try {
    set = load_eval_set_dir(staged_set, task, set_name, load);
  } catch (const IntegrityError&) {
    throw;
  } catch (const DecodeError& e) {
    throw IntegrityError({e.what()});
  } catch (const ConfigError& e) {
    throw IntegrityError({e.what()});
  }
  report.example_count = set.example_count;
  for (const auto& s : set.sources) report.sources.push_back(s.name);
  for (const auto& r : set.references) report.references.push_back(r.name);
  report.models = set.model_names();
  for (const auto& t : set.tags) report.tags.push_back(t.qualified_name());

  const bool created_task = !fs::exists(root / task);
  fs::create_directories(root / task);
  std::error_code ec;
  fs::rename(staged_set, target, ec);
  if (ec) {
    std::error_code ignored;
    if (created_task) fs::remove(root / task, ignored);
    throw Error("cannot move eval set into place: " + ec.message());
  }
  return report;
}

}  // namespace seqeval::store

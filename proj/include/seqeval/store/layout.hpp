#pragma once

// On-disk data layout:
//
//   <root>/<task>/<set>/source_*.{txt,zip}
//                      reference_*.txt
//                      tag_*.txt            (tag_machine_*.txt written by the taggers)
//                      <model>/prediction.txt
//                      __cfg__.json
//                      __cache__/

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seqeval/corpus.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/store/cache.hpp"
#include "seqeval/store/fingerprint.hpp"
#include "seqeval/store/zip.hpp"
#include "seqeval/tagging.hpp"
#include "seqeval/text.hpp"
#include "seqeval/unicode.hpp"

namespace seqeval::store {

namespace fs = std::filesystem;

inline constexpr std::string_view kConfigFileName = "__cfg__.json";
inline constexpr std::string_view kPredictionFileName = "prediction.txt";
inline constexpr std::string_view kMachineTagFilePrefix = "tag_machine_";

struct EvalSetConfig {
  std::string description;
  std::map<std::string, Modality> source_modalities;
  std::vector<std::string> default_metrics{"bleu"};
  TokenizerConfig tokenizer;
  nlohmann::json extra = nlohmann::json::object();  ///< unknown keys, kept on rewrite

  bool operator==(const EvalSetConfig&) const = default;
};

inline nlohmann::json to_json(const EvalSetConfig& cfg) {
  nlohmann::json out = cfg.extra.is_object() ? cfg.extra : nlohmann::json::object();
  out["description"] = cfg.description;
  nlohmann::json modalities = nlohmann::json::object();
  for (const auto& [name, m] : cfg.source_modalities) modalities[name] = std::string(to_string(m));
  out["source_modalities"] = modalities;
  out["default_metrics"] = cfg.default_metrics;
  out["tokenizer"] = cfg.tokenizer.to_string();
  return out;
}

inline EvalSetConfig parse_config(std::string_view text) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError("__cfg__.json is not a JSON object");
  EvalSetConfig cfg;
  try {
    if (auto it = doc.find("description"); it != doc.end()) cfg.description = it->get<std::string>();
    if (auto it = doc.find("source_modalities"); it != doc.end()) {
      if (!it->is_object()) throw ConfigError("source_modalities must be an object");
      for (const auto& [name, v] : it->items()) cfg.source_modalities[name] = parse_modality(v.get<std::string>());
    }
    if (auto it = doc.find("default_metrics"); it != doc.end()) {
      cfg.default_metrics = it->get<std::vector<std::string>>();
    }
    if (auto it = doc.find("tokenizer"); it != doc.end()) cfg.tokenizer = TokenizerConfig::parse(it->get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("__cfg__.json: ") + e.what());
  }
  for (const char* known : {"description", "source_modalities", "default_metrics", "tokenizer"}) doc.erase(known);
  cfg.extra = std::move(doc);
  return cfg;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline EvalSetConfig read_config(const fs::path& set_dir) {
  const fs::path p = set_dir / kConfigFileName;
  if (!fs::exists(p)) return {};
  return parse_config(read_file(p));
}

inline void write_config(const fs::path& set_dir, const EvalSetConfig& cfg) {
  std::ofstream out(set_dir / kConfigFileName, std::ios::binary | std::ios::trunc);
  out << to_json(cfg).dump(2) << '\n';
}

/// Splits UTF-8 text into lines. LF and CRLF endings are accepted and the
/// final newline is optional. Invalid UTF-8 raises DecodeError carrying the
/// byte offset in the file.
inline std::vector<std::string> split_lines(std::string_view text, const std::string& label) {
  if (auto bad = unicode::first_invalid_utf8(text)) {
    throw DecodeError(label + ": invalid UTF-8", *bad);
  }
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  return lines;
}

inline std::vector<std::string> read_text_lines(const fs::path& path, const std::string& label) {
  return split_lines(read_file(path), label);
}

inline std::vector<std::string> read_text_lines(const fs::path& path) {
  return read_text_lines(path, path.filename().string());
}

inline void write_text_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string body;
  for (const auto& l : lines) {
    body += l;
    body += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

/// Orders "source_2" before "source_10".
inline bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ei = i;
      std::size_t ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      std::string_view na = a.substr(i, ei - i);
      std::string_view nb = b.substr(j, ej - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

/// Files of one eval set directory, classified by role.
struct SetFiles {
  std::vector<fs::path> sources;  ///< source_*.txt and source_*.zip
  std::vector<fs::path> references;
  std::vector<fs::path> user_tags;
  std::vector<fs::path> machine_tags;
  std::vector<std::pair<std::string, fs::path>> models;  ///< (name, prediction file)
  std::vector<std::string> warnings;
};

inline bool is_hidden_or_reserved(const std::string& name) { return name.starts_with(".") || name.starts_with("__"); }

inline SetFiles list_set_files(const fs::path& dir) {
  SetFiles out;
  auto by_name = [](const fs::path& a, const fs::path& b) {
    return natural_less(a.filename().string(), b.filename().string());
  };
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (is_hidden_or_reserved(name)) continue;
    if (e.is_directory()) {
      if (fs::is_regular_file(e.path() / kPredictionFileName)) {
        out.models.emplace_back(name, e.path() / kPredictionFileName);
      } else {
        out.warnings.push_back("ignored directory '" + name + "' without " + std::string(kPredictionFileName));
      }
      continue;
    }
    const std::string ext = e.path().extension().string();
    if (name.starts_with("source_") && (ext == ".txt" || ext == ".zip")) {
      out.sources.push_back(e.path());
    } else if (name.starts_with("reference_") && ext == ".txt") {
      out.references.push_back(e.path());
    } else if (name.starts_with(kMachineTagFilePrefix) && ext == ".txt") {
      out.machine_tags.push_back(e.path());
    } else if (name.starts_with("tag_") && ext == ".txt") {
      out.user_tags.push_back(e.path());
    } else {
      out.warnings.push_back("ignored file '" + name + "'");
    }
  }
  std::sort(out.sources.begin(), out.sources.end(), by_name);
  std::sort(out.references.begin(), out.references.end(), by_name);
  std::sort(out.user_tags.begin(), out.user_tags.end(), by_name);
  std::sort(out.machine_tags.begin(), out.machine_tags.end(), by_name);
  std::sort(out.models.begin(), out.models.end(),
            [](const auto& a, const auto& b) { return natural_less(a.first, b.first); });
  return out;
}

/// Member paths of a zip source, as items relative to the set directory
/// ("source_0.zip/12.jpg"), ordered naturally by member name.
inline std::vector<std::string> zip_source_items(const fs::path& zip_path) {
  const auto reader = ZipReader::from_file(zip_path);
  std::vector<std::string> names;
  for (const auto& e : reader.entries()) {
    if (!e.is_directory()) names.push_back(e.name);
  }
  std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return natural_less(a, b); });
  std::vector<std::string> items;
  items.reserve(names.size());
  for (const auto& n : names) items.push_back(zip_path.filename().string() + "/" + n);
  return items;
}

/// Tag file contents: one line per example, semicolon-separated names.
inline std::map<std::string, std::vector<std::size_t>> parse_tag_lines(const std::vector<std::string>& lines) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view rest = lines[i];
    while (true) {
      const auto semi = rest.find(';');
      std::string_view part = rest.substr(0, semi);
      while (!part.empty() && std::isspace(static_cast<unsigned char>(part.front()))) part.remove_prefix(1);
      while (!part.empty() && std::isspace(static_cast<unsigned char>(part.back()))) part.remove_suffix(1);
      if (!part.empty()) {
        auto& members = out[std::string(part)];
        if (members.empty() || members.back() != i) members.push_back(i);
      }
      if (semi == std::string_view::npos) break;
      rest.remove_prefix(semi + 1);
    }
  }
  return out;
}

inline std::vector<std::string> format_tag_lines(const std::vector<TagSet>& tags, std::size_t n) {
  std::vector<std::string> lines(n);
  for (const auto& t : tags) {
    for (std::size_t i : t.members) {
      if (i >= n) continue;
      if (!lines[i].empty()) lines[i] += ';';
      lines[i] += t.name;
    }
  }
  return lines;
}

struct LoadOptions {
  bool machine_tags = true;  ///< compute (through the cache) and persist machine tags
  TaggerConfig tagger;
  FingerprintMode fingerprint = FingerprintMode::Fast;
};

namespace detail {

inline std::string tagger_params(const TaggerConfig& cfg) {
  nlohmann::json j = {
      {"long_sentence_percentile", cfg.long_sentence_percentile},
      {"rare_word_max_count", cfg.rare_word_max_count},
      {"script_min_fraction", cfg.script_min_fraction},
      {"enabled", cfg.enabled_taggers},
      {"tokenizer", cfg.tokenizer.to_string()},
  };
  return j.dump();
}

// Computes machine tags through the cache and mirrors them into
// tag_machine_<tagger>.txt files.
inline std::vector<TagSet> attach_machine_tags(const fs::path& dir, const EvalSet& set, const fs::path& text_source,
                                               const LoadOptions& opts) {
  ResultCache cache(dir, opts.fingerprint);
  const CacheKey key{"tags", "", "", tagger_params(opts.tagger)};
  const nlohmann::json payload = cache.get_or_compute(key, {text_source}, [&] {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [tagger, sets] : machine_tags(set, opts.tagger)) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& t : sets) arr.push_back({{"name", t.name}, {"members", t.members}});
      out[tagger] = arr;
    }
    return out;
  });
  std::vector<TagSet> tags;
  std::lock_guard lock(set_lock(dir));
  for (const auto& [tagger, arr] : payload.items()) {
    std::vector<TagSet> sets;
    for (const auto& t : arr) {
      sets.push_back({t.at("name").get<std::string>(), TagOrigin::Machine, t.at("members").get<std::vector<std::size_t>>()});
    }
    const fs::path file = dir / (std::string(kMachineTagFilePrefix) + tagger + ".txt");
    const auto lines = format_tag_lines(sets, set.example_count);
    std::string body;
    for (const auto& l : lines) body += l + '\n';
    std::error_code ec;
    if (!fs::exists(file, ec) || read_file(file) != body) write_file_atomic(file, body);
    for (auto& s : sets) tags.push_back(std::move(s));
  }
  return tags;
}

}  // namespace detail

/// Loads an eval set from its directory. Every line-count mismatch and
/// layout violation is collected into one IntegrityError.
inline EvalSet load_eval_set_dir(const fs::path& dir, const std::string& task, const std::string& set_name,
                                 const LoadOptions& opts = {}) {
  if (!fs::is_directory(dir)) throw LookupError("eval set '" + task + "/" + set_name + "' not found");
  const EvalSetConfig cfg = read_config(dir);
  const SetFiles files = list_set_files(dir);

  EvalSet set;
  set.task = task;
  set.name = set_name;
  std::vector<std::string> problems;
  std::optional<fs::path> text_source;

  for (const auto& p : files.sources) {
    SourceStream s;
    s.name = p.stem().string();
    auto declared = cfg.source_modalities.find(s.name);
    if (p.extension() == ".zip") {
      if (declared == cfg.source_modalities.end() || declared->second == Modality::Text) {
        problems.push_back(p.filename().string() + ": zip source needs a non-text modality in __cfg__.json");
        continue;
      }
      s.modality = declared->second;
      try {
        s.items = zip_source_items(p);
      } catch (const ZipError& e) {
        problems.push_back(p.filename().string() + ": " + e.what());
        continue;
      }
    } else {
      s.modality = declared == cfg.source_modalities.end() ? Modality::Text : declared->second;
      s.items = read_text_lines(p);
      if (s.modality == Modality::Text && !text_source) text_source = p;
    }
    set.sources.push_back(std::move(s));
  }
  for (const auto& p : files.references) {
    ReferenceStream r;
    r.name = p.stem().string();
    for (auto& line : read_text_lines(p)) {
      if (line.empty()) {
        r.items.emplace_back(std::nullopt);
      } else {
        r.items.emplace_back(std::move(line));
      }
    }
    set.references.push_back(std::move(r));
  }
  for (const auto& [name, p] : files.models) {
    set.models.push_back({name, read_text_lines(p, name + "/" + std::string(kPredictionFileName))});
  }

  // The example count is that of the first stream; every other file is
  // checked against it.
  if (!set.sources.empty()) {
    set.example_count = set.sources.front().items.size();
  } else if (!set.references.empty()) {
    set.example_count = set.references.front().items.size();
  }
  const std::size_t n = set.example_count;
  auto check = [&](const std::string& file, std::size_t count) {
    if (count != n) problems.push_back(file + ": " + seqeval::detail::count_mismatch(n, count));
  };
  for (std::size_t k = 0; k < set.sources.size(); ++k) {
    check(files.sources[k].filename().string(), set.sources[k].items.size());
  }
  for (std::size_t k = 0; k < set.references.size(); ++k) {
    check(files.references[k].filename().string(), set.references[k].items.size());
  }
  for (const auto& m : set.models) check(m.model_name + "/" + std::string(kPredictionFileName), m.items.size());

  std::map<std::string, std::vector<std::size_t>> user_tags;
  for (const auto& p : files.user_tags) {
    const auto lines = read_text_lines(p);
    if (lines.size() != n) {
      check(p.filename().string(), lines.size());
      continue;
    }
    for (auto& [name, members] : parse_tag_lines(lines)) {
      auto& dst = user_tags[name];
      dst.insert(dst.end(), members.begin(), members.end());
      std::sort(dst.begin(), dst.end());
      dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    }
  }
  for (auto& [name, members] : user_tags) set.tags.push_back({name, TagOrigin::User, std::move(members)});

  if (!problems.empty()) throw IntegrityError(problems);
  std::vector<std::string> violations;
  for (const auto& v : validate(set)) violations.push_back(v.to_string());
  if (!violations.empty()) throw IntegrityError(violations);

  if (opts.machine_tags && text_source) {
    for (auto& t : detail::attach_machine_tags(dir, set, *text_source, opts)) set.tags.push_back(std::move(t));
  }
  return set;
}

inline EvalSet load_eval_set(const fs::path& root, const std::string& task, const std::string& set_name,
                             const LoadOptions& opts = {}) {
  if (!is_path_safe(task) || !is_path_safe(set_name)) throw SecurityError("unsafe task or eval set name");
  return load_eval_set_dir(root / task / set_name, task, set_name, opts);
}

/// Writes `set` in the on-disk layout. Machine tags are not written; they
/// are derived data.
inline void write_eval_set(const fs::path& dir, const EvalSet& set, EvalSetConfig cfg = {}) {
  fs::create_directories(dir);
  for (const auto& s : set.sources) {
    if (s.modality != Modality::Text) {
      throw ContractViolation("write_eval_set supports text sources only ('" + s.name + "')");
    }
    write_text_lines(dir / (s.name + ".txt"), s.items);
  }
  for (const auto& r : set.references) {
    std::vector<std::string> lines;
    for (const auto& item : r.items) lines.push_back(item.value_or(""));
    write_text_lines(dir / (r.name + ".txt"), lines);
  }
  for (const auto& m : set.models) {
    fs::create_directories(dir / m.model_name);
    write_text_lines(dir / m.model_name / kPredictionFileName, m.items);
  }
  std::vector<TagSet> user;
  for (const auto& t : set.tags) {
    if (t.origin == TagOrigin::User) user.push_back(t);
  }
  if (!user.empty()) write_text_lines(dir / "tag_user.txt", format_tag_lines(user, set.example_count));
  write_config(dir, cfg);
}

struct EvalSetSummary {
  std::string task;
  std::string name;
  bool valid = false;
  std::size_t example_count = 0;
  std::vector<std::string> models;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool operator==(const EvalSetSummary&) const = default;
};

struct TaskSummary {
  std::string name;
  std::vector<EvalSetSummary> sets;

  bool operator==(const TaskSummary&) const = default;
};

struct DataRoot {
  fs::path root;
  std::vector<TaskSummary> tasks;
  std::vector<std::string> warnings;

  const TaskSummary* task(std::string_view name) const {
    for (const auto& t : tasks) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  const EvalSetSummary* set(std::string_view task_name, std::string_view set_name) const {
    const TaskSummary* t = task(task_name);
    if (t == nullptr) return nullptr;
    for (const auto& s : t->sets) {
      if (s.name == set_name) return &s;
    }
    return nullptr;
  }
};

/// Enumerates tasks, eval sets and models. Invalid sets are listed with
/// their errors instead of aborting the scan.
inline DataRoot scan(const fs::path& root) {
  DataRoot out;
  out.root = root;
  if (!fs::is_directory(root)) throw ConfigError("data root '" + root.string() + "' is not a directory");
  auto sorted_dirs = [&](const fs::path& dir, const std::string& where) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (is_hidden_or_reserved(name)) continue;
      if (!e.is_directory()) {
        out.warnings.push_back(where + "ignored file '" + name + "'");
        continue;
      }
      names.push_back(name);
    }
    std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return natural_less(a, b); });
    return names;
  };
  for (const auto& task : sorted_dirs(root, "")) {
    TaskSummary t{task, {}};
    for (const auto& set_name : sorted_dirs(root / task, task + "/")) {
      EvalSetSummary s;
      s.task = task;
      s.name = set_name;
      const fs::path dir = root / task / set_name;
      try {
        s.warnings = list_set_files(dir).warnings;
        LoadOptions opts;
        opts.machine_tags = false;
        const EvalSet set = load_eval_set_dir(dir, task, set_name, opts);
        s.valid = true;
        s.example_count = set.example_count;
        s.models = set.model_names();
      } catch (const IntegrityError& e) {
        s.errors = e.details();
      } catch (const std::exception& e) {
        s.errors.push_back(e.what());
      }
      t.sets.push_back(std::move(s));
    }
    out.tasks.push_back(std::move(t));
  }
  return out;
}

}  // namespace seqeval::store

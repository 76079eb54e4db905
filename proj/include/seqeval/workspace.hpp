#pragma once

// Service layer over a data root, shared by the CLI and the HTTP API so that
// both produce the same payloads: cached scoring, analytics, example pages,
// export, media lookup and ingestion.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seqeval/analytics.hpp"
#include "seqeval/corpus.hpp"
#include "seqeval/engine.hpp"
#include "seqeval/errors.hpp"
#include "seqeval/metrics.hpp"
#include "seqeval/serialize.hpp"
#include "seqeval/store/cache.hpp"
#include "seqeval/store/ingest.hpp"
#include "seqeval/store/layout.hpp"
#include "seqeval/store/watch.hpp"
#include "seqeval/tagging.hpp"
#include "seqeval/text.hpp"
#include "seqeval/unicode.hpp"

namespace seqeval {

namespace fs = std::filesystem;

inline constexpr std::size_t kPageSizes[] = {10, 25, 50, 100};

struct ExampleQuery {
  std::size_t page = 1;
  std::size_t page_size = 10;
  std::string sort_by = "index";  ///< "index", "source_length" or a metric id
  bool descending = false;
  std::string keyword;
  std::vector<std::string> tags;     ///< qualified names, AND semantics
  std::vector<std::string> models;   ///< empty = every model
  std::vector<std::string> metrics;  ///< sentence scores shown; empty = the set's default metrics
};

struct MetricCell {
  std::string metric;
  double value = 0.0;
  bool best = false;
  bool worst = false;
};

struct ModelView {
  std::string model;
  std::string prediction;
  std::vector<std::string> tokens;
  std::vector<HighlightSpan> spans;
  std::vector<MetricCell> scores;
};

struct SourceView {
  std::string name;
  Modality modality = Modality::Text;
  std::string text;  ///< text sources
  std::string url;   ///< media sources
};

struct ExampleView {
  std::size_t index = 0;
  std::vector<std::string> tags;
  std::vector<SourceView> sources;
  std::vector<std::optional<std::string>> references;
  std::vector<ModelView> models;
};

struct ExamplePage {
  std::size_t total = 0;
  std::size_t page = 1;
  std::size_t page_size = 10;
  std::vector<ExampleView> items;
};

struct ScoreDistribution {
  std::string metric;
  std::vector<std::pair<std::string, ScoreHistogram>> models;
};

struct ExportResult {
  std::string filename;
  std::string content_type;
  std::string body;
};

struct MediaItem {
  std::string content_type;
  std::string bytes;
};

struct LoadedSet {
  EvalSet set;
  store::EvalSetConfig config;
  fs::path dir;
  store::SetFiles files;
  std::map<std::string, std::pair<std::uintmax_t, std::int64_t>> state;
};

struct WorkspaceOptions {
  fs::path root;
  store::FingerprintMode fingerprint = store::FingerprintMode::Fast;
  std::size_t workers = 1;
  TaggerConfig tagger;
  store::IngestOptions ingest;
};

// ---------------------------------------------------------------- helpers

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    if (comma > pos) out.emplace_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

inline std::size_t parse_count(const std::string& field, const std::string& value) {
  if (value.empty() || value.size() > 9 ||
      !std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw InvalidRequest(field, "expected a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(std::stoul(value));
}

/// Rejects parameters outside `allowed`.
inline void check_fields(const std::map<std::string, std::string>& params, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, _] : params) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw InvalidRequest(k, "unknown query field");
  }
}

inline ExampleQuery parse_example_query(const std::map<std::string, std::string>& params) {
  check_fields(params, {"page", "page_size", "sort_by", "sort_order", "keyword", "tags", "models", "metrics"});
  ExampleQuery q;
  if (auto it = params.find("page"); it != params.end()) {
    q.page = parse_count("page", it->second);
    if (q.page == 0) throw InvalidRequest("page", "must be at least 1");
  }
  if (auto it = params.find("page_size"); it != params.end()) {
    q.page_size = parse_count("page_size", it->second);
    if (std::find(std::begin(kPageSizes), std::end(kPageSizes), q.page_size) == std::end(kPageSizes)) {
      throw InvalidRequest("page_size", "must be one of 10, 25, 50, 100");
    }
  }
  if (auto it = params.find("sort_by"); it != params.end()) q.sort_by = it->second;
  if (auto it = params.find("sort_order"); it != params.end()) {
    if (it->second != "asc" && it->second != "desc") throw InvalidRequest("sort_order", "must be asc or desc");
    q.descending = it->second == "desc";
  }
  if (auto it = params.find("keyword"); it != params.end()) q.keyword = it->second;
  if (auto it = params.find("tags"); it != params.end()) q.tags = split_list(it->second);
  if (auto it = params.find("models"); it != params.end()) q.models = split_list(it->second);
  if (auto it = params.find("metrics"); it != params.end()) q.metrics = split_list(it->second);
  return q;
}

inline std::string url_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xf];
    }
  }
  return out;
}

inline std::string media_url(std::string_view task, std::string_view set, std::string_view item) {
  std::string out = "/media/" + url_encode(task) + "/" + url_encode(set);
  for (const auto& part : store::detail::split_path(item)) out += "/" + url_encode(part);
  return out;
}

inline std::string content_type_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::map<std::string, std::string> types = {
      {".jpg", "image/jpeg"},  {".jpeg", "image/jpeg"}, {".png", "image/png"},       {".gif", "image/gif"},
      {".webp", "image/webp"}, {".bmp", "image/bmp"},   {".svg", "image/svg+xml"},   {".mp3", "audio/mpeg"},
      {".wav", "audio/wav"},   {".ogg", "audio/ogg"},   {".flac", "audio/flac"},     {".m4a", "audio/mp4"},
      {".mp4", "video/mp4"},   {".webm", "video/webm"}, {".mov", "video/quicktime"}, {".txt", "text/plain; charset=utf-8"},
  };
  auto it = types.find(ext);
  return it == types.end() ? "application/octet-stream" : it->second;
}

// ---------------------------------------------------------------- workspace

class Workspace {
 public:
  explicit Workspace(WorkspaceOptions options, std::shared_ptr<const ScorerRegistry> registry = nullptr)
      : options_(std::move(options)),
        registry_(registry ? std::move(registry) : std::make_shared<const ScorerRegistry>(builtin_scorers())) {
    if (options_.workers == 0) throw ConfigError("workers must be at least 1");
    if (!fs::is_directory(options_.root)) {
      throw ConfigError("data root '" + options_.root.string() + "' is not a directory");
    }
  }

  const WorkspaceOptions& options() const { return options_; }
  const ScorerRegistry& registry() const { return *registry_; }

  /// Current scan of the data root, rescanned whenever the tree changed.
  store::DataRoot data_root() {
    auto state = store::tree_state(options_.root);
    std::lock_guard lock(mutex_);
    if (!root_cache_ || state != root_state_) {
      root_cache_ = store::scan(options_.root);
      root_state_ = std::move(state);
    }
    return *root_cache_;
  }

  std::vector<std::string> task_names() {
    std::vector<std::string> out;
    for (const auto& t : data_root().tasks) out.push_back(t.name);
    return out;
  }

  std::vector<store::EvalSetSummary> sets(const std::string& task) {
    const auto root = data_root();
    const auto* t = root.task(task);
    if (t == nullptr) throw LookupError("unknown task '" + task + "'");
    return t->sets;
  }

  std::vector<std::string> models(const std::string& task, const std::string& set) {
    return load(task, set)->set.model_names();
  }

  /// Loaded eval set; reloaded when any of its files changed.
  std::shared_ptr<const LoadedSet> load(const std::string& task, const std::string& set_name) {
    if (!is_path_safe(task) || !is_path_safe(set_name) || task.starts_with(".") || task.starts_with("__") ||
        set_name.starts_with(".") || set_name.starts_with("__")) {
      throw LookupError("unknown eval set '" + task + "/" + set_name + "'");
    }
    const fs::path dir = options_.root / task / set_name;
    if (!fs::is_directory(dir)) throw LookupError("unknown eval set '" + task + "/" + set_name + "'");
    auto state = store::tree_state(dir);
    const std::string key = task + "/" + set_name;
    {
      std::lock_guard lock(mutex_);
      auto it = sets_.find(key);
      if (it != sets_.end() && it->second->state == state) return it->second;
    }
    auto loaded = std::make_shared<LoadedSet>();
    loaded->dir = dir;
    loaded->config = store::read_config(dir);
    loaded->files = store::list_set_files(dir);
    store::LoadOptions opts;
    opts.fingerprint = options_.fingerprint;
    opts.tagger = options_.tagger;
    opts.tagger.tokenizer = loaded->config.tokenizer;
    opts.tagger.workers = options_.workers;
    loaded->set = store::load_eval_set_dir(dir, task, set_name, opts);
    loaded->state = std::move(state);
    std::lock_guard lock(mutex_);
    sets_[key] = loaded;
    return loaded;
  }

  RunOptions run_options(const LoadedSet& ls) const {
    RunOptions o;
    o.workers = options_.workers;
    o.tokenizer = ls.config.tokenizer;
    return o;
  }

  void require_metric(const std::string& field, const std::string& metric) const {
    if (!registry_->contains(metric)) {
      std::string ids;
      for (const auto& id : registry_->ids()) ids += (ids.empty() ? "" : ", ") + id;
      throw InvalidRequest(field, "unknown metric '" + metric + "' (available: " + ids + ")");
    }
  }

  static void require_model(const std::string& field, const EvalSet& set, const std::string& model) {
    if (set.model(model) == nullptr) throw InvalidRequest(field, "unknown model '" + model + "'");
  }

  /// Full-corpus scoring of one model, served through the on-disk cache.
  ScoredCorpus scored(const LoadedSet& ls, const std::string& metric, const std::string& model) const {
    require_metric("metrics", metric);
    require_model("models", ls.set, model);
    std::vector<fs::path> inputs{ls.dir / model / store::kPredictionFileName};
    inputs.insert(inputs.end(), ls.files.references.begin(), ls.files.references.end());
    store::ResultCache cache(ls.dir, options_.fingerprint);
    const store::CacheKey key{"score", model, metric, ls.config.tokenizer.to_string()};
    const auto payload = cache.get_or_compute(key, inputs, [&] {
      return nlohmann::json(score_corpus(*registry_, metric, ls.set.model(model)->items, all_references(ls.set),
                                         run_options(ls)));
    });
    return payload.get<ScoredCorpus>();
  }

  ScoredCorpus scored(const std::string& task, const std::string& set, const std::string& metric,
                      const std::string& model) {
    return scored(*load(task, set), metric, model);
  }

  GroupScores scores(const std::string& task, const std::string& set_name, GroupScoresRequest request) {
    const auto ls = load(task, set_name);
    if (request.metrics.empty()) request.metrics = ls->config.default_metrics;
    for (const auto& m : request.metrics) require_metric("metrics", m);
    for (const auto& m : request.models) require_model("models", ls->set, m);
    for (const auto& t : request.tags) {
      if (ls->set.tag(t) == nullptr) throw InvalidRequest("tags", "unknown tag '" + t + "'");
    }
    return group_scores(
        ls->set, *registry_, request,
        [&](const std::string& metric, const std::string& model) { return scored(*ls, metric, model); },
        run_options(*ls));
  }

  DatasetStats stats(const std::string& task, const std::string& set) {
    const auto ls = load(task, set);
    if (ls->set.example_count == 0) throw IntegrityError({"eval set has no examples"});
    return compute_stats(ls->set, ls->config.tokenizer);
  }

  NGramTable ngrams(const std::string& task, const std::string& set, std::size_t n, std::size_t k) {
    if (n < 1 || n > 4) throw InvalidRequest("n", "must be between 1 and 4");
    if (k < 1 || k > 1000) throw InvalidRequest("k", "must be between 1 and 1000");
    const auto ls = load(task, set);
    std::vector<fs::path> inputs;
    for (const auto& p : ls->files.sources) {
      if (p.extension() == ".txt") inputs.push_back(p);
    }
    inputs.insert(inputs.end(), ls->files.references.begin(), ls->files.references.end());
    store::ResultCache cache(ls->dir, options_.fingerprint);
    const store::CacheKey key{"ngrams", "", "",
                              ls->config.tokenizer.to_string() + ";n=" + std::to_string(n) + ";k=" + std::to_string(k)};
    return cache
        .get_or_compute(key, inputs, [&] { return nlohmann::json(top_ngrams(ls->set, n, k, ls->config.tokenizer)); })
        .get<NGramTable>();
  }

  ScoreDistribution score_dist(const std::string& task, const std::string& set, const std::string& metric,
                               std::vector<std::string> models, std::size_t bins) {
    if (bins > 1000) throw InvalidRequest("bins", "must be at most 1000");
    const auto ls = load(task, set);
    require_metric("metric", metric);
    if (models.empty()) models = ls->set.model_names();
    ScoreDistribution out{metric, {}};
    const auto traits = registry_->get(metric).traits();
    for (const auto& m : models) {
      require_model("models", ls->set, m);
      out.models.emplace_back(m, score_distribution(scored(*ls, metric, m).report, traits, bins));
    }
    return out;
  }

  std::vector<std::pair<std::string, std::size_t>> tags(const std::string& task, const std::string& set) {
    return tag_distribution(load(task, set)->set);
  }

  ExportResult export_table(const std::string& task, const std::string& set, const std::string& table,
                            const std::string& format, const GroupScoresRequest& request = {}) {
    ExportFormat f;
    try {
      f = parse_export_format(format);
    } catch (const ConfigError& e) {
      throw InvalidRequest("format", e.what());
    }
    ExportResult out;
    if (table == "scores") {
      out.body = seqeval::export_table(scores(task, set, request), f);
    } else if (table == "stats") {
      out.body = seqeval::export_table(stats(task, set), f);
    } else {
      throw InvalidRequest("table", "must be scores or stats");
    }
    out.filename = task + "_" + set + "_" + table + "." + std::string(file_extension(f));
    out.content_type = f == ExportFormat::Csv ? "text/csv; charset=utf-8" : "application/x-latex; charset=utf-8";
    return out;
  }

  ExamplePage examples(const std::string& task, const std::string& set_name, const ExampleQuery& q) {
    const auto ls = load(task, set_name);
    const EvalSet& set = ls->set;
    const RunOptions run = run_options(*ls);

    std::vector<std::string> models = q.models.empty() ? set.model_names() : q.models;
    for (const auto& m : models) require_model("models", set, m);
    std::vector<std::string> metrics = q.metrics.empty() ? ls->config.default_metrics : q.metrics;
    for (const auto& m : metrics) require_metric("metrics", m);
    const bool sort_by_metric = q.sort_by != "index" && q.sort_by != "source_length";
    if (sort_by_metric) {
      if (!registry_->contains(q.sort_by)) throw InvalidRequest("sort_by", "unknown sort key '" + q.sort_by + "'");
      if (models.empty()) throw InvalidRequest("sort_by", "the eval set has no model to sort by");
      if (std::find(metrics.begin(), metrics.end(), q.sort_by) == metrics.end()) metrics.push_back(q.sort_by);
    }
    std::vector<const TagSet*> tag_filter;
    for (const auto& t : q.tags) {
      const TagSet* ts = set.tag(t);
      if (ts == nullptr) throw InvalidRequest("tags", "unknown tag '" + t + "'");
      tag_filter.push_back(ts);
    }

    std::map<std::pair<std::string, std::string>, ScoreReport> reports;
    for (const auto& metric : metrics) {
      for (const auto& model : models) reports.emplace(std::pair{metric, model}, scored(*ls, metric, model).report);
    }

    // Filter.
    const std::string needle = unicode::fold_case(q.keyword);
    auto matches_keyword = [&](std::size_t i) {
      if (needle.empty()) return true;
      auto has = [&](const std::string& text) { return unicode::fold_case(text).find(needle) != std::string::npos; };
      for (const auto& s : set.sources) {
        if (s.modality == Modality::Text && has(s.items[i])) return true;
      }
      for (const auto& r : set.references) {
        if (r.items[i] && has(*r.items[i])) return true;
      }
      for (const auto& m : models) {
        if (has(set.model(m)->items[i])) return true;
      }
      return false;
    };
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < set.example_count; ++i) {
      if (std::all_of(tag_filter.begin(), tag_filter.end(), [&](const TagSet* t) { return t->contains(i); }) &&
          matches_keyword(i)) {
        selected.push_back(i);
      }
    }

    // Sort: key, then index, both in the requested direction for the key
    // and ascending for the index.
    if (q.sort_by != "index") {
      std::vector<double> key(set.example_count, 0.0);
      if (sort_by_metric) {
        const auto& scores = reports.at({q.sort_by, models.front()}).sentence_scores;
        for (std::size_t i : selected) key[i] = scores[i];
      } else {
        for (std::size_t i : selected) key[i] = static_cast<double>(source_length(set, i, ls->config.tokenizer));
      }
      std::stable_sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return q.descending ? key[a] > key[b] : key[a] < key[b];
        return a < b;
      });
    } else if (q.descending) {
      std::reverse(selected.begin(), selected.end());
    }

    ExamplePage page;
    page.total = selected.size();
    page.page = q.page;
    page.page_size = q.page_size;
    const std::size_t begin = std::min(selected.size(), (q.page - 1) * q.page_size);
    const std::size_t end = std::min(selected.size(), begin + q.page_size);
    for (std::size_t pos = begin; pos < end; ++pos) {
      const std::size_t i = selected[pos];
      ExampleView view;
      view.index = i;
      for (const auto& t : set.tags) {
        if (t.contains(i)) view.tags.push_back(t.qualified_name());
      }
      for (const auto& s : set.sources) {
        SourceView sv{s.name, s.modality, "", ""};
        if (s.modality == Modality::Text) {
          sv.text = s.items[i];
        } else {
          sv.url = media_url(task, set_name, s.items[i]);
        }
        view.sources.push_back(std::move(sv));
      }
      for (const auto& r : set.references) view.references.push_back(r.items[i]);
      std::vector<std::vector<std::string>> ref_tokens;
      for (const auto& r : references_for(set, i)) ref_tokens.push_back(tokenize_words(r, run.tokenizer));
      for (const auto& m : models) {
        ModelView mv;
        mv.model = m;
        mv.prediction = set.model(m)->items[i];
        mv.tokens = tokenize_words(mv.prediction, run.tokenizer);
        mv.spans = highlight(mv.tokens, ref_tokens);
        view.models.push_back(std::move(mv));
      }
      for (const auto& metric : metrics) {
        GroupRow row;
        for (const auto& m : models) row.scores.push_back(reports.at({metric, m}).sentence_scores[i]);
        mark_extremes(row, registry_->get(metric).traits().higher_is_better);
        for (std::size_t k = 0; k < models.size(); ++k) {
          view.models[k].scores.push_back({metric, row.scores[k], row.best[k], row.worst[k]});
        }
      }
      page.items.push_back(std::move(view));
    }
    return page;
  }

  store::IngestReport ingest(const std::string& blob) {
    store::IngestOptions opts = options_.ingest;
    opts.load.fingerprint = options_.fingerprint;
    return store::ingest_zip(blob, options_.root, opts);
  }

  /// Bytes of a registered media source item; nullopt when `item` is not one.
  std::optional<MediaItem> media(const std::string& task, const std::string& set_name, const std::string& item) {
    for (const auto& part : store::detail::split_path(item)) {
      if (part == ".." || part == "." || part.empty()) throw SecurityError("unsafe media path '" + item + "'");
    }
    if (item.empty() || item.front() == '/' || item.find('\\') != std::string::npos ||
        item.find('\0') != std::string::npos) {
      throw SecurityError("unsafe media path '" + item + "'");
    }
    if (task.find("..") != std::string::npos || set_name.find("..") != std::string::npos) {
      throw SecurityError("unsafe media path");
    }
    const auto ls = load(task, set_name);
    for (std::size_t k = 0; k < ls->set.sources.size(); ++k) {
      const auto& s = ls->set.sources[k];
      if (s.modality == Modality::Text) continue;
      if (std::find(s.items.begin(), s.items.end(), item) == s.items.end()) continue;
      const fs::path& file = ls->files.sources[k];
      if (file.extension() == ".zip") {
        const auto zip = store::ZipReader::from_file(file);
        const std::string member = item.substr(file.filename().string().size() + 1);
        const auto* e = zip.find(member);
        if (e == nullptr) return std::nullopt;
        return MediaItem{content_type_for(member), zip.read(*e)};
      }
      const fs::path p = ls->dir / item;
      if (!fs::is_regular_file(p) || fs::is_symlink(fs::symlink_status(p))) return std::nullopt;
      return MediaItem{content_type_for(p), store::read_file(p)};
    }
    return std::nullopt;
  }

  static std::size_t source_length(const EvalSet& set, std::size_t i, const TokenizerConfig& tok) {
    if (const SourceStream* s = set.primary_text_source()) return tokenize_words(s->items[i], tok).size();
    const auto refs = references_for(set, i);
    return refs.empty() ? 0 : tokenize_words(refs.front(), tok).size();
  }

 private:
  WorkspaceOptions options_;
  std::shared_ptr<const ScorerRegistry> registry_;
  std::mutex mutex_;
  std::optional<store::DataRoot> root_cache_;
  std::map<std::string, std::pair<std::uintmax_t, std::int64_t>> root_state_;
  std::map<std::string, std::shared_ptr<const LoadedSet>> sets_;
};

// ---------------------------------------------------------------- JSON

inline void to_json(nlohmann::json& j, const MetricCell& c) {
  j = {{"metric", c.metric}, {"value", c.value}, {"best", c.best}, {"worst", c.worst}};
}

inline void to_json(nlohmann::json& j, const ModelView& m) {
  j = {{"model", m.model}, {"prediction", m.prediction}, {"tokens", m.tokens}, {"spans", m.spans}, {"scores", m.scores}};
}

inline void to_json(nlohmann::json& j, const SourceView& s) {
  j = {{"name", s.name}, {"modality", std::string(to_string(s.modality))}};
  if (s.modality == Modality::Text) {
    j["text"] = s.text;
  } else {
    j["url"] = s.url;
  }
}

inline void to_json(nlohmann::json& j, const ExampleView& e) {
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& r : e.references) refs.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
  j = {{"index", e.index}, {"tags", e.tags}, {"sources", e.sources}, {"references", refs}, {"models", e.models}};
}

inline void to_json(nlohmann::json& j, const ExamplePage& p) {
  j = {{"total", p.total}, {"page", p.page}, {"page_size", p.page_size}, {"items", p.items}};
}

inline void to_json(nlohmann::json& j, const ScoreDistribution& d) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [m, h] : d.models) models.push_back({{"model", m}, {"histogram", h}});
  j = {{"metric", d.metric}, {"models", models}};
}

inline nlohmann::json tag_distribution_json(const std::vector<std::pair<std::string, std::size_t>>& dist) {
  return {{"tags", ranked_pairs(dist, "tag")}};
}

}  // namespace seqeval

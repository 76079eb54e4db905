#pragma once

// In-memory form of one evaluation set: sources, references, model
// predictions and tags, aligned by 0-based example index.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqeval/engine.hpp"
#include "seqeval/errors.hpp"

namespace seqeval {

enum class Modality { Text, Image, Audio, Video };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Text: return "text";
    case Modality::Image: return "image";
    case Modality::Audio: return "audio";
    case Modality::Video: return "video";
  }
  return "text";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "text") return Modality::Text;
  if (s == "image") return Modality::Image;
  if (s == "audio") return Modality::Audio;
  if (s == "video") return Modality::Video;
  throw ConfigError("unknown modality '" + std::string(s) + "' (expected text, image, audio or video)");
}

/// Text streams hold sentences; media streams hold paths relative to the
/// eval set directory.
struct SourceStream {
  std::string name;
  Modality modality = Modality::Text;
  std::vector<std::string> items;

  bool operator==(const SourceStream&) const = default;
};

struct ReferenceStream {
  std::string name;
  std::vector<std::optional<std::string>> items;  ///< nullopt = no reference for that example

  bool operator==(const ReferenceStream&) const = default;
};

struct ModelPredictions {
  std::string model_name;
  std::vector<std::string> items;

  bool operator==(const ModelPredictions&) const = default;
};

enum class TagOrigin { User, Machine };

inline constexpr std::string_view kMachineTagPrefix = "auto:";

struct TagSet {
  std::string name;
  TagOrigin origin = TagOrigin::User;
  std::vector<std::size_t> members;  ///< sorted, unique

  /// Name as shown to clients: machine tags carry the "auto:" prefix so they
  /// never collide with user tags.
  std::string qualified_name() const {
    return origin == TagOrigin::Machine ? std::string(kMachineTagPrefix) + name : name;
  }

  bool contains(std::size_t index) const { return std::binary_search(members.begin(), members.end(), index); }

  bool operator==(const TagSet&) const = default;
};

/// Path component usable as a task, eval set or model name.
inline bool is_path_safe(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  if (name.find("..") != std::string_view::npos) return false;
  return std::none_of(name.begin(), name.end(), [](char c) { return c == '/' || c == '\\' || c == '\0'; });
}

struct Violation {
  std::string subject;  ///< offending stream, model, tag or example
  std::string message;

  std::string to_string() const { return subject + ": " + message; }
  bool operator==(const Violation&) const = default;
};

struct EvalSet {
  std::string task;
  std::string name;
  std::vector<SourceStream> sources;
  std::vector<ReferenceStream> references;
  std::vector<ModelPredictions> models;
  std::vector<TagSet> tags;
  std::size_t example_count = 0;

  bool operator==(const EvalSet&) const = default;

  const ModelPredictions* model(std::string_view model_name) const {
    for (const auto& m : models) {
      if (m.model_name == model_name) return &m;
    }
    return nullptr;
  }

  const TagSet* tag(std::string_view qualified) const {
    for (const auto& t : tags) {
      if (t.qualified_name() == qualified) return &t;
    }
    return nullptr;
  }

  /// First text-modality source stream, if any.
  const SourceStream* primary_text_source() const {
    for (const auto& s : sources) {
      if (s.modality == Modality::Text) return &s;
    }
    return nullptr;
  }

  std::vector<std::string> model_names() const {
    std::vector<std::string> out;
    for (const auto& m : models) out.push_back(m.model_name);
    return out;
  }
};

/// Present references of one example, in stream order.
inline std::vector<std::string> references_for(const EvalSet& set, std::size_t index) {
  if (index >= set.example_count) {
    throw RangeError("example index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(set.example_count) + ")");
  }
  std::vector<std::string> out;
  for (const auto& stream : set.references) {
    if (index < stream.items.size() && stream.items[index]) out.push_back(*stream.items[index]);
  }
  return out;
}

inline PerExampleReferences all_references(const EvalSet& set) {
  PerExampleReferences out;
  out.reserve(set.example_count);
  for (std::size_t i = 0; i < set.example_count; ++i) out.push_back(references_for(set, i));
  return out;
}

namespace detail {

inline std::string count_mismatch(std::size_t expected, std::size_t actual) {
  return "expected " + std::to_string(expected) + ", found " + std::to_string(actual);
}

}  // namespace detail

inline std::vector<Violation> validate(const EvalSet& set) {
  std::vector<Violation> out;
  const std::size_t n = set.example_count;
  if (!is_path_safe(set.task)) out.push_back({"task", "name '" + set.task + "' is not path-safe"});
  if (!is_path_safe(set.name)) out.push_back({"eval set", "name '" + set.name + "' is not path-safe"});
  if (n == 0) out.push_back({"eval set", "no examples"});
  for (const auto& s : set.sources) {
    if (s.items.size() != n) out.push_back({s.name, detail::count_mismatch(n, s.items.size())});
  }
  if (set.references.empty()) out.push_back({"references", "no reference stream"});
  bool aligned = true;
  for (const auto& r : set.references) {
    if (r.items.size() != n) {
      out.push_back({r.name, detail::count_mismatch(n, r.items.size())});
      aligned = false;
    }
  }
  if (aligned && !set.references.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool any = std::any_of(set.references.begin(), set.references.end(),
                                   [&](const ReferenceStream& r) { return r.items[i].has_value(); });
      if (!any) out.push_back({"example " + std::to_string(i), "no reference in any stream"});
    }
  }
  for (std::size_t k = 0; k < set.models.size(); ++k) {
    const auto& m = set.models[k];
    if (!is_path_safe(m.model_name)) out.push_back({m.model_name, "model name is not path-safe"});
    if (m.items.size() != n) out.push_back({m.model_name, detail::count_mismatch(n, m.items.size())});
    for (std::size_t j = 0; j < k; ++j) {
      if (set.models[j].model_name == m.model_name) out.push_back({m.model_name, "duplicate model name"});
    }
  }
  for (std::size_t k = 0; k < set.tags.size(); ++k) {
    const auto& t = set.tags[k];
    if (!std::is_sorted(t.members.begin(), t.members.end()) ||
        std::adjacent_find(t.members.begin(), t.members.end()) != t.members.end()) {
      out.push_back({t.qualified_name(), "members are not sorted and unique"});
    }
    if (!t.members.empty() && t.members.back() >= n) {
      out.push_back({t.qualified_name(), "member " + std::to_string(t.members.back()) + " out of range"});
    }
    if (t.origin == TagOrigin::User && t.name.starts_with(kMachineTagPrefix)) {
      out.push_back({t.name, "user tag uses the reserved prefix '" + std::string(kMachineTagPrefix) + "'"});
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (set.tags[j].origin == t.origin && set.tags[j].name == t.name) {
        out.push_back({t.qualified_name(), "duplicate tag name"});
      }
    }
  }
  return out;
}

}  // namespace seqeval

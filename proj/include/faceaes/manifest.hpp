#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/fvec_io.hpp"

namespace faceaes {

struct SampleRecord {
  std::string id;
  double score = 0.0;
  std::optional<int> label;  // -1 / +1 for pre-labeled datasets

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
  std::string dataset_name;
  std::vector<SampleRecord> samples;
  /// Block name -> feature file. Paths are stored as written in the manifest
  /// and resolved against `base_dir`.
  std::map<std::string, std::filesystem::path> block_refs;
  std::pair<double, double> score_range{0.0, 0.0};
  std::filesystem::path base_dir;

  std::size_t size() const noexcept { return samples.size(); }

  std::filesystem::path block_path(const std::string& name) const {
    auto it = block_refs.find(name);
    if (it == block_refs.end()) {
      fail(ErrorKind::InvalidManifest, "manifest '" + dataset_name + "' has no block '" + name + "'");
    }
    return it->second.is_absolute() ? it->second : base_dir / it->second;
  }

  /// True when every sample carries a native label.
  bool pre_labeled() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.label.has_value(); });
  }

  /// Block names in IQ, IA, FA order, then any other names alphabetically.
  std::vector<std::string> block_names() const {
    std::vector<std::string> names;
    for (const auto& [n, _] : block_refs) names.push_back(n);
    std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) {
      return canonical_rank(a).value_or(3) < canonical_rank(b).value_or(3);
    });
    return names;
  }

  std::vector<double> scores() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.score);
    return out;
  }
};

/// Checks manifest-internal invariants (unique ids, finite scores, labels).
inline void validate_manifest(const DatasetManifest& m) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    if (!seen.insert(s.id).second) {
      fail(ErrorKind::InvalidManifest, "duplicate sample id '" + s.id + "' at row " + std::to_string(i));
    }
    if (!std::isfinite(s.score)) {
      fail(ErrorKind::NonFinite, "sample '" + s.id + "' (row " + std::to_string(i) + ") has a non-finite score");
    }
    if (s.label && *s.label != -1 && *s.label != 1) {
      fail(ErrorKind::InvalidManifest, "sample '" + s.id + "' label must be -1 or +1");
    }
  }
}

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["dataset_name"] = m.dataset_name;
  j["score_range"] = {m.score_range.first, m.score_range.second};
  auto samples = nlohmann::ordered_json::array();
  for (const auto& s : m.samples) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["score"] = s.score;
    if (s.label) e["label"] = *s.label;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  auto blocks = nlohmann::ordered_json::object();
  for (const auto& name : m.block_names()) blocks[name] = m.block_refs.at(name).generic_string();
  j["blocks"] = std::move(blocks);
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {}) {
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  try {
    m.dataset_name = j.at("dataset_name").get<std::string>();
    const auto& range = j.at("score_range");
    if (!range.is_array() || range.size() != 2) {
      fail(ErrorKind::InvalidManifest, "score_range must be [min, max]");
    }
    m.score_range = {range[0].get<double>(), range[1].get<double>()};
    for (const auto& e : j.at("samples")) {
      SampleRecord s;
      s.id = e.at("id").get<std::string>();
      s.score = e.at("score").get<double>();
      if (e.contains("label") && !e.at("label").is_null()) s.label = e.at("label").get<int>();
      m.samples.push_back(std::move(s));
    }
    for (const auto& [name, path] : j.at("blocks").items()) m.block_refs[name] = path.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidManifest, e.what());
  }
  validate_manifest(m);
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidManifest, path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write manifest '" + path.string() + "'");
  out << manifest_to_json(m).dump(2) << '\n';
}

/// Loads the named block, checking its row count against the manifest.
inline FeatureBlock load_manifest_block(const DatasetManifest& m, const std::string& name) {
  const auto path = m.block_path(name);
  try {
    return load_block(path, name, m.size());
  } catch (const Error& e) {
    fail(e.kind(), "block '" + name + "': " + e.what());
  }
}

/// Splits samples into two equally sized groups by score: the floor(n/2)
/// lowest get -1, the rest +1. Ties are ordered by ascending id. Labels are
/// returned in manifest order.
inline std::vector<int> median_split(const DatasetManifest& m) {
  const std::size_t n = m.samples.size();
  require(n >= 2, ErrorKind::InvalidArgument, "median_split needs at least 2 samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = m.samples[a];
    const auto& sb = m.samples[b];
    if (sa.score != sb.score) return sa.score < sb.score;
    return sa.id < sb.id;
  });
  std::vector<int> labels(n, +1);
  for (std::size_t r = 0; r < n / 2; ++r) labels[order[r]] = -1;
  return labels;
}

/// Native labels when the dataset carries them, otherwise the median split.
inline std::vector<int> classification_labels(const DatasetManifest& m) {
  if (m.pre_labeled()) {
    std::vector<int> out;
    for (const auto& s : m.samples) out.push_back(*s.label);
    return out;
  }
  return median_split(m);
}

}  // namespace faceaes

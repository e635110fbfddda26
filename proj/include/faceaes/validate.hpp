#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/fvec_io.hpp"
#include "faceaes/manifest.hpp"

namespace faceaes {

struct Diagnostic {
  std::filesystem::path file;
  std::optional<std::size_t> row;
  ErrorKind kind = ErrorKind::InvalidManifest;
  std::string message;

  std::string to_string() const {
    std::string s = file.string();
    if (row) s += ":row " + std::to_string(*row);
    return s + ": " + std::string(faceaes::to_string(kind)) + ": " + message;
  }
};

struct BlockSummary {
  std::string name;
  std::filesystem::path file;
  std::uint64_t rows = 0;
  std::uint64_t dim = 0;
  std::uint32_t crc = 0;
};

struct ValidationResult {
  std::optional<DatasetManifest> manifest;
  std::vector<BlockSummary> blocks;
  std::vector<Diagnostic> diagnostics;

  bool clean() const noexcept { return diagnostics.empty(); }
};

namespace detail {

/// Rows named in an Error message ("row N"), if any.
inline std::optional<std::size_t> row_from_message(const std::string& what) {
  const auto pos = what.find("row ");
  if (pos == std::string::npos) return std::nullopt;
  std::size_t v = 0;
  std::size_t i = pos + 4;
  if (i >= what.size() || !std::isdigit(static_cast<unsigned char>(what[i]))) return std::nullopt;
  while (i < what.size() && std::isdigit(static_cast<unsigned char>(what[i]))) v = v * 10 + static_cast<std::size_t>(what[i++] - '0');
  return v;
}

}  // namespace detail

/// Checks a manifest and every feature file it references: JSON structure,
/// unique ids, finite scores inside score_range, FVEC header, CRC, block
/// name, canonical dims, finite values and row counts. Collects all problems
/// instead of stopping at the first.
inline ValidationResult validate_dataset(const std::filesystem::path& manifest_path) {
  ValidationResult out;
  std::ifstream in(manifest_path);
  if (!in) {
    out.diagnostics.push_back({manifest_path, std::nullopt, ErrorKind::Io, "cannot open manifest"});
    return out;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    out.diagnostics.push_back({manifest_path, std::nullopt, ErrorKind::InvalidManifest, e.what()});
    return out;
  }

  // Per-sample checks first so every bad row is listed.
  if (j.contains("samples") && j["samples"].is_array()) {
    std::set<std::string> ids;
    std::optional<std::pair<double, double>> range;
    if (j.contains("score_range") && j["score_range"].is_array() && j["score_range"].size() == 2 &&
        j["score_range"][0].is_number() && j["score_range"][1].is_number()) {
      range = {j["score_range"][0].get<double>(), j["score_range"][1].get<double>()};
    }
    const auto& samples = j["samples"];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!s.is_object() || !s.contains("id") || !s["id"].is_string() || !s.contains("score") ||
          !s["score"].is_number()) {
        out.diagnostics.push_back({manifest_path, i, ErrorKind::InvalidManifest, "sample needs string id and numeric score"});
        continue;
      }
      const auto id = s["id"].get<std::string>();
      if (!ids.insert(id).second) {
        out.diagnostics.push_back({manifest_path, i, ErrorKind::InvalidManifest, "duplicate sample id '" + id + "'"});
      }
      const double score = s["score"].get<double>();
      if (range && (score < range->first || score > range->second)) {
        out.diagnostics.push_back({manifest_path, i, ErrorKind::InvalidManifest,
                                   "score " + std::to_string(score) + " outside score_range"});
      }
    }
  }
  if (!out.diagnostics.empty()) return out;

  try {
    out.manifest = manifest_from_json(j, manifest_path.parent_path());
  } catch (const Error& e) {
    out.diagnostics.push_back({manifest_path, detail::row_from_message(e.what()), e.kind(), e.what()});
    return out;
  }

  const auto& m = *out.manifest;
  if (m.block_refs.empty()) {
    out.diagnostics.push_back({manifest_path, std::nullopt, ErrorKind::InvalidManifest, "manifest lists no blocks"});
  }
  for (const auto& name : m.block_names()) {
    const auto path = m.block_path(name);
    try {
      auto block = load_block(path, name, m.size());
      const bool binary = !detail::is_csv_path(path);
      BlockSummary s{name, path, block.rows(), block.dim(), 0};
      if (binary) s.crc = inspect_fvec(path).stored_crc;
      out.blocks.push_back(std::move(s));
    } catch (const Error& e) {
      out.diagnostics.push_back({path, detail::row_from_message(e.what()), e.kind(),
                                 "block '" + name + "': " + e.what()});
    }
  }
  return out;
}

}  // namespace faceaes

#pragma once

// Model file layout (little-endian):
//   "FMDL" | u16 version (=1) | u32 header_len | JSON header |
//   u64 dim | dim x f64 weights | f64 bias |
//   [dim x f64 means | dim x f64 stds]      when header.has_standardizer
//   [u64 n_bits | ceil(n_bits/8) bytes]     when header.has_mask, LSB-first
//   u32 CRC-32 of every byte after the magic and before the CRC.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faceaes/error.hpp"
#include "faceaes/fvec_io.hpp"
#include "faceaes/ga_select.hpp"
#include "faceaes/linear_models.hpp"
#include "faceaes/standardizer.hpp"

namespace faceaes {

inline constexpr char kModelMagic[4] = {'F', 'M', 'D', 'L'};
inline constexpr std::uint16_t kModelVersion = 1;

struct SavedModel {
  LinearModel model;
  std::optional<Standardizer> standardizer;
  /// Present for GA models; weights are stored dense (unselected entries
  /// zeroed) so the model applies with a plain dot product.
  std::optional<std::vector<std::uint8_t>> mask;
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const SavedModel&, const SavedModel&) = default;
};

inline std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return out;
}

inline std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t n_bits) {
  std::vector<std::uint8_t> out(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) out[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return out;
}

inline SavedModel saved_from_chromosome(const Chromosome& c, Task task,
                                        std::optional<Standardizer> standardizer = std::nullopt) {
  return SavedModel{to_linear_model(c, task), std::move(standardizer), c.mask, nlohmann::json::object()};
}

inline std::vector<unsigned char> encode_model(const SavedModel& s) {
  const std::size_t dim = s.model.dim();
  if (s.standardizer) {
    require(s.standardizer->dim() == dim, ErrorKind::DimMismatch, "model/standardizer dim mismatch");
  }
  if (s.mask) require(s.mask->size() == dim, ErrorKind::DimMismatch, "model/mask dim mismatch");

  nlohmann::ordered_json header;
  header["task"] = std::string(to_string(s.model.task));
  header["dim"] = dim;
  header["has_standardizer"] = s.standardizer.has_value();
  header["has_mask"] = s.mask.has_value();
  header["config"] = s.config;
  const std::string text = header.dump();

  detail::ByteWriter w;
  w.bytes(kModelMagic, 4);
  w.le(kModelVersion);
  w.le(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  w.le(static_cast<std::uint64_t>(dim));
  for (double v : s.model.weights) w.f64(v);
  w.f64(s.model.bias);
  if (s.standardizer) {
    for (double v : s.standardizer->means) w.f64(v);
    for (double v : s.standardizer->stds) w.f64(v);
  }
  if (s.mask) {
    w.le(static_cast<std::uint64_t>(s.mask->size()));
    auto packed = pack_bits(*s.mask);
    w.bytes(packed.data(), packed.size());
  }
  const auto crc = detail::crc32_of(std::span(w.buffer()).subspan(4));
  w.le(crc);
  return w.buffer();
}

inline SavedModel decode_model(std::span<const unsigned char> bytes, const std::string& ctx) {
  if (bytes.size() < 4 + 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    fail(ErrorKind::MalformedHeader, ctx + ": missing FMDL magic");
  }
  const auto body = bytes.subspan(4, bytes.size() - 8);
  detail::ByteReader crc_reader(bytes.subspan(bytes.size() - 4), ctx);
  if (crc_reader.le<std::uint32_t>() != detail::crc32_of(body)) {
    fail(ErrorKind::Checksum, ctx + ": model CRC-32 mismatch");
  }
  detail::ByteReader r(body, ctx);
  if (r.le<std::uint16_t>() != kModelVersion) fail(ErrorKind::MalformedHeader, ctx + ": unsupported model version");
  const auto header_len = r.le<std::uint32_t>();
  auto header_bytes = r.take(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::MalformedHeader, ctx + ": " + e.what());
  }
  SavedModel s;
  try {
    s.model.task = parse_task(header.at("task").get<std::string>());
    s.config = header.value("config", nlohmann::json::object());
    const auto dim = r.le<std::uint64_t>();
    if (dim != header.at("dim").get<std::uint64_t>()) fail(ErrorKind::MalformedHeader, ctx + ": dim disagrees with header");
    s.model.weights.resize(dim);
    for (auto& v : s.model.weights) v = r.f64();
    s.model.bias = r.f64();
    if (header.at("has_standardizer").get<bool>()) {
      Standardizer st{std::vector<double>(dim), std::vector<double>(dim)};
      for (auto& v : st.means) v = r.f64();
      for (auto& v : st.stds) v = r.f64();
      s.standardizer = std::move(st);
    }
    if (header.at("has_mask").get<bool>()) {
      const auto n_bits = r.le<std::uint64_t>();
      if (n_bits != dim) fail(ErrorKind::MalformedHeader, ctx + ": mask length disagrees with dim");
      s.mask = unpack_bits(r.take((n_bits + 7) / 8), n_bits);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::MalformedHeader, ctx + ": " + e.what());
  }
  if (r.remaining() != 0) fail(ErrorKind::MalformedHeader, ctx + ": trailing bytes after model payload");
  return s;
}

inline void save_model(const std::filesystem::path& path, const SavedModel& s) {
  detail::write_file(path, encode_model(s));
}

inline SavedModel load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path), path.string());
}

/// CSV columns: generation, best_fitness, mean_fitness, best_selected_count.
inline void write_trace_csv(std::ostream& out, const GaTrace& trace) {
  out << "generation,best_fitness,mean_fitness,best_selected_count\n";
  const auto prec = out.precision(17);
  for (std::size_t g = 0; g < trace.size(); ++g) {
    out << g << ',' << trace.best_fitness[g] << ',' << trace.mean_fitness[g] << ','
        << trace.best_selected_count[g] << '\n';
  }
  out.precision(prec);
}

inline void write_trace_csv(const std::filesystem::path& path, const GaTrace& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_trace_csv(out, trace);
}

}  // namespace faceaes

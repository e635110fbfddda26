#pragma once

// FVEC binary layout (all integers little-endian):
//   "FVEC" | u16 version (=1) | u16 name_len | name (UTF-8) | u64 n_samples |
//   u64 dim | n_samples*dim IEEE-754 float32, row-major | u32 CRC-32
// The CRC-32 (zlib polynomial) covers the float payload bytes only.

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"

namespace faceaes {

inline constexpr char kFvecMagic[4] = {'F', 'V', 'E', 'C'};
inline constexpr std::uint16_t kFvecVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    auto c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void le(T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::size_t size() const { return buf_.size(); }
  const std::vector<unsigned char>& buffer() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::span<const unsigned char> take(std::size_t n) {
    if (remaining() < n) {
      fail(ErrorKind::Truncated, context_ + ": unexpected end of file at byte " + std::to_string(pos_));
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T le() {
    auto s = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
  std::string context_;
};

inline std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for >4 GiB payloads.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const auto len = static_cast<uInt>(std::min(kChunk, bytes.size() - off));
    crc = ::crc32(crc, bytes.data() + off, len);
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "short write to '" + path.string() + "'");
}

}  // namespace detail

struct FvecHeader {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t dim = 0;
  std::uint32_t stored_crc = 0;
  std::uint32_t computed_crc = 0;
};

inline std::vector<unsigned char> encode_fvec(const FeatureBlock& block) {
  detail::ByteWriter w;
  w.bytes(kFvecMagic, 4);
  w.le(kFvecVersion);
  require(block.name().size() <= 0xFFFF, ErrorKind::InvalidArgument, "block name too long");
  w.le(static_cast<std::uint16_t>(block.name().size()));
  w.bytes(block.name().data(), block.name().size());
  w.le(static_cast<std::uint64_t>(block.rows()));
  w.le(static_cast<std::uint64_t>(block.dim()));
  const std::size_t payload_begin = w.size();
  for (float v : block.data()) w.f32(v);
  const auto crc = detail::crc32_of(std::span(w.buffer()).subspan(payload_begin));
  w.le(crc);
  return w.buffer();
}

inline void write_block(const std::filesystem::path& path, const FeatureBlock& block) {
  detail::write_file(path, encode_fvec(block));
}

namespace detail {

/// Parses header and payload; checks structure and CRC but not name/dims.
inline std::pair<FvecHeader, std::vector<float>> decode_fvec(std::span<const unsigned char> bytes,
                                                           const std::string& ctx) {
  ByteReader r(bytes, ctx);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFvecMagic, 4) != 0) {
    fail(ErrorKind::MalformedHeader, ctx + ": missing FVEC magic");
  }
  r.take(4);
  const auto version = r.le<std::uint16_t>();
  if (version != kFvecVersion) {
    fail(ErrorKind::MalformedHeader, ctx + ": unsupported FVEC version " + std::to_string(version));
  }
  FvecHeader h;
  const auto name_len = r.le<std::uint16_t>();
  auto name = r.take(name_len);
  h.name.assign(name.begin(), name.end());
  h.rows = r.le<std::uint64_t>();
  h.dim = r.le<std::uint64_t>();
  if (h.dim == 0) fail(ErrorKind::MalformedHeader, ctx + ": dim is zero");
  if (h.rows > (r.remaining() / 4) / h.dim) {
    fail(ErrorKind::RowCountMismatch, ctx + ": header declares " + std::to_string(h.rows) +
                                          " rows but the payload is shorter");
  }
  const std::size_t count = h.rows * h.dim;
  if (r.remaining() != count * 4 + 4) {
    fail(ErrorKind::RowCountMismatch,
         ctx + ": payload size " + std::to_string(r.remaining()) + " bytes does not match " +
             std::to_string(h.rows) + "x" + std::to_string(h.dim) + " floats plus CRC");
  }
  auto payload = r.take(count * 4);
  h.computed_crc = crc32_of(payload);
  h.stored_crc = r.le<std::uint32_t>();
  if (h.stored_crc != h.computed_crc) {
    fail(ErrorKind::Checksum, ctx + ": CRC-32 mismatch (stored " + std::to_string(h.stored_crc) +
                                  ", computed " + std::to_string(h.computed_crc) + ")");
  }
  std::vector<float> values(count);
  ByteReader pr(payload, ctx);
  for (auto& v : values) v = pr.f32();
  return {std::move(h), std::move(values)};
}

inline void check_name_and_dim(const std::string& ctx, const std::string& actual_name,
                               std::string_view expected_name, std::size_t dim) {
  if (actual_name != expected_name) {
    fail(ErrorKind::NameMismatch,
         ctx + ": header name '" + actual_name + "' != expected '" + std::string(expected_name) + "'");
  }
  if (auto canon = canonical_dim(expected_name); canon && *canon != dim) {
    fail(ErrorKind::DimMismatch, ctx + ": block " + std::string(expected_name) + " has dim " +
                                     std::to_string(dim) + ", canonical dim is " +
                                     std::to_string(*canon));
  }
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline FeatureBlock decode_csv(std::span<const unsigned char> bytes, const std::string& name,
                               const std::string& ctx) {
  std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::MalformedHeader, ctx + ": empty CSV");
  const std::size_t dim = split_csv_line(line).size();
  std::vector<float> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != dim) {
      fail(ErrorKind::DimMismatch, ctx + ": row " + std::to_string(rows) + " has " +
                                       std::to_string(fields.size()) + " columns, header has " +
                                       std::to_string(dim));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      float v = 0;
      auto f = fields[j];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(ErrorKind::MalformedHeader, ctx + ": row " + std::to_string(rows) + " column " +
                                             std::to_string(j) + " is not a number");
      }
      if (!std::isfinite(v)) {
        fail(ErrorKind::NonFinite, ctx + ": row " + std::to_string(rows) + " column " +
                                       std::to_string(j) + " is not finite");
      }
      values.push_back(v);
    }
    ++rows;
  }
  return FeatureBlock(name, rows, dim, std::move(values));
}

inline bool is_csv_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

}  // namespace detail

/// Reads only the header and checksum of an FVEC file.
inline FvecHeader inspect_fvec(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return detail::decode_fvec(bytes, path.string()).first;
}

/// Loads an FVEC (or, for *.csv paths, CSV) feature file. For CSV the block
/// takes `expected_name`. When `expected_rows` is given the row count must
/// match it.
inline FeatureBlock load_block(const std::filesystem::path& path, std::string_view expected_name,
                               std::optional<std::size_t> expected_rows = std::nullopt) {
  const std::string ctx = path.string();
  const auto bytes = detail::read_file(path);
  const bool binary = bytes.size() >= 4 && std::memcmp(bytes.data(), kFvecMagic, 4) == 0;
  FeatureBlock block;
  if (binary) {
    auto [h, values] = detail::decode_fvec(bytes, ctx);
    detail::check_name_and_dim(ctx, h.name, expected_name, h.dim);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        fail(ErrorKind::NonFinite, ctx + ": row " + std::to_string(i / h.dim) + " column " +
                                       std::to_string(i % h.dim) + " is not finite");
      }
    }
    block = FeatureBlock(h.name, h.rows, h.dim, std::move(values));
  } else if (detail::is_csv_path(path)) {
    block = detail::decode_csv(bytes, std::string(expected_name), ctx);
    detail::check_name_and_dim(ctx, block.name(), expected_name, block.dim());
  } else {
    fail(ErrorKind::MalformedHeader, ctx + ": missing FVEC magic");
  }
  if (expected_rows && block.rows() != *expected_rows) {
    fail(ErrorKind::RowCountMismatch, ctx + ": block " + block.name() + " has " +
                                          std::to_string(block.rows()) + " rows, manifest has " +
                                          std::to_string(*expected_rows) + " samples");
  }
  return block;
}

/// CSV fallback writer: header of feature names f0..f{dim-1}, one row per sample.
inline void write_block_csv(const std::filesystem::path& path, const FeatureBlock& block) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < block.dim(); ++j) out << (j ? "," : "") << 'f' << j;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < block.rows(); ++i) {
    auto r = block.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, r[j]);
      if (j) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace faceaes

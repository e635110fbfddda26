#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faceaes/error.hpp"

namespace faceaes {

/// Canonical dimensionality of the named CNN feature blocks. Free-form
/// (synthetic) names have no canonical dim.
inline std::optional<std::size_t> canonical_dim(std::string_view name) {
  if (name == "IQ" || name == "IA") return 4096;
  if (name == "FA") return 2048;
  return std::nullopt;
}

/// Position in the IQ, IA, FA column order, or nullopt for other names.
inline std::optional<int> canonical_rank(std::string_view name) {
  if (name == "IQ") return 0;
  if (name == "IA") return 1;
  if (name == "FA") return 2;
  return std::nullopt;
}

/// Dense row-major float32 matrix of per-sample features.
class FeatureBlock {
 public:
  FeatureBlock() = default;

  FeatureBlock(std::string name, std::size_t rows, std::size_t dim, std::vector<float> data)
      : name_(std::move(name)), rows_(rows), dim_(dim), data_(std::move(data)) {
    require(dim_ > 0, ErrorKind::InvalidArgument, "block '" + name_ + "' has zero dim");
    require(data_.size() == rows_ * dim_, ErrorKind::InvalidArgument,
            "block '" + name_ + "' data size does not equal rows*dim");
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        fail(ErrorKind::NonFinite, "block '" + name_ + "' row " + std::to_string(i / dim_) +
                                       " column " + std::to_string(i % dim_) + " is not finite");
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }

  /// Copy of the given rows, in the given order.
  FeatureBlock select_rows(std::span<const std::size_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * dim_);
    for (auto i : indices) {
      require(i < rows_, ErrorKind::InvalidArgument, "row index out of range");
      auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureBlock(name_, indices.size(), dim_, std::move(out));
  }

  /// Columns [offset, offset + count) as a new block.
  FeatureBlock slice_columns(std::size_t offset, std::size_t count, std::string name) const {
    require(count > 0 && offset + count <= dim_, ErrorKind::InvalidArgument,
            "column slice out of range");
    std::vector<float> out;
    out.reserve(rows_ * count);
    for (std::size_t i = 0; i < rows_; ++i) {
      auto r = row(i).subspan(offset, count);
      out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureBlock(std::move(name), rows_, count, std::move(out));
  }

  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;

 private:
  std::string name_;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Name of a fused block: member names joined with '+'.
inline std::string fused_name(std::span<const std::string> names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

/// Linear concatenation fusion: row i of the result is row i of every input,
/// in list order.
inline FeatureBlock concat_blocks(std::span<const FeatureBlock> blocks) {
  require(!blocks.empty(), ErrorKind::InvalidArgument, "concat_blocks: empty block list");
  if (blocks.size() == 1) return blocks.front();
  const std::size_t rows = blocks.front().rows();
  std::size_t dim = 0;
  std::vector<std::string> names;
  for (const auto& b : blocks) {
    require(b.rows() == rows, ErrorKind::RowCountMismatch,
            "concat_blocks: block '" + b.name() + "' has " + std::to_string(b.rows()) +
                " rows, expected " + std::to_string(rows));
    dim += b.dim();
    names.push_back(b.name());
  }
  std::vector<float> out;
  out.reserve(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (const auto& b : blocks) {
      auto r = b.row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
  }
  return FeatureBlock(fused_name(names), rows, dim, std::move(out));
}

}  // namespace faceaes

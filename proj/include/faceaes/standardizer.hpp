#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"

namespace faceaes {

inline constexpr double kStdFloor = 1e-8;

/// Per-feature z-scoring with population standard deviation. Fit it on
/// training rows only; it is then applied unchanged to test rows.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;

  std::size_t dim() const noexcept { return means.size(); }

  template <class T>
  void apply_row(std::span<const T> in, std::span<float> out) const {
    require(in.size() == dim() && out.size() == dim(), ErrorKind::DimMismatch,
            "standardizer dim mismatch");
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = static_cast<float>((static_cast<double>(in[j]) - means[j]) / stds[j]);
    }
  }

  FeatureBlock apply(const FeatureBlock& block) const {
    require(block.dim() == dim(), ErrorKind::DimMismatch,
            "standardizer fitted on dim " + std::to_string(dim()) + ", block '" + block.name() +
                "' has dim " + std::to_string(block.dim()));
    std::vector<float> out(block.rows() * block.dim());
    for (std::size_t i = 0; i < block.rows(); ++i) {
      apply_row(block.row(i), std::span<float>(out).subspan(i * dim(), dim()));
    }
    return FeatureBlock(block.name(), block.rows(), block.dim(), std::move(out));
  }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

inline Standardizer fit_standardizer(const FeatureBlock& block, std::span<const std::size_t> rows) {
  require(!rows.empty(), ErrorKind::InvalidArgument, "fit_standardizer: empty row set");
  const std::size_t d = block.dim();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (auto i : rows) {
    require(i < block.rows(), ErrorKind::InvalidArgument, "fit_standardizer: row index out of range");
    auto r = block.row(i);
    for (std::size_t j = 0; j < d; ++j) s.means[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : s.means) m /= n;
  for (auto i : rows) {
    auto r = block.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - s.means[j];
      s.stds[j] += c * c;
    }
  }
  for (auto& v : s.stds) v = std::max(std::sqrt(v / n), kStdFloor);
  return s;
}

}  // namespace faceaes

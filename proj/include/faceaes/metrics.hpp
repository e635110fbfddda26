#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "faceaes/error.hpp"

namespace faceaes {

/// Decision rule on a signed score: >= 0 is the high (+1) class.
constexpr int to_label(double score) noexcept { return score >= 0.0 ? 1 : -1; }

inline std::vector<int> to_labels(std::span<const double> scores) {
  std::vector<int> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(), [](double s) { return to_label(s); });
  return out;
}

/// Good classification rate: fraction of predictions equal to the truth.
inline double gcr(std::span<const int> predicted, std::span<const int> truth) {
  require(!predicted.empty(), ErrorKind::InvalidArgument, "gcr: empty input");
  require(predicted.size() == truth.size(), ErrorKind::DimMismatch, "gcr: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

/// Pearson's linear correlation coefficient.
inline double lcc(std::span<const double> predicted, std::span<const double> truth) {
  require(predicted.size() == truth.size(), ErrorKind::DimMismatch, "lcc: length mismatch");
  require(predicted.size() >= 2, ErrorKind::InvalidArgument, "lcc: need at least 2 values");
  const double n = static_cast<double>(predicted.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    mx += predicted[i];
    my += truth[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dx = predicted[i] - mx;
    const double dy = truth[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    fail(ErrorKind::UndefinedCorrelation, "lcc: zero variance in an input vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace faceaes

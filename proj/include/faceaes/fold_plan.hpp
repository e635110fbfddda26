#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/rng.hpp"

namespace faceaes {

/// Assignment of every sample to one of k folds for a single CV round.
struct FoldPlan {
  std::size_t round_index = 0;
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;

  std::size_t size() const noexcept { return fold_of.size(); }

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : fold_of) ++sizes[f];
    return sizes;
  }
};

/// Seeded random permutation dealt round-robin into k folds.
inline FoldPlan make_fold_plan(std::size_t n, std::size_t k, std::uint64_t round_seed,
                               std::size_t round_index = 0) {
  require(k >= 2, ErrorKind::InvalidArgument, "make_fold_plan: k must be at least 2");
  require(n >= k, ErrorKind::InvalidArgument,
          "make_fold_plan: " + std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(round_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPlan plan{round_index, k, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) plan.fold_of[perm[i]] = i % k;
  return plan;
}

/// Stratified variant: each class is shuffled separately and the classes are
/// dealt one after the other with a shared round-robin counter, so fold sizes
/// still differ by at most one.
inline FoldPlan make_stratified_fold_plan(std::span<const int> labels, std::size_t k, std::uint64_t round_seed,
                                          std::size_t round_index = 0) {
  const std::size_t n = labels.size();
  require(k >= 2, ErrorKind::InvalidArgument, "make_fold_plan: k must be at least 2");
  require(n >= k, ErrorKind::InvalidArgument,
          "make_fold_plan: " + std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
  Rng rng(round_seed);
  FoldPlan plan{round_index, k, std::vector<std::size_t>(n)};
  std::size_t counter = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto i : members) plan.fold_of[i] = counter++ % k;
  }
  return plan;
}

}  // namespace faceaes

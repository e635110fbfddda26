#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/fold_plan.hpp"
#include "faceaes/ga_select.hpp"
#include "faceaes/linear_models.hpp"
#include "faceaes/manifest.hpp"
#include "faceaes/metrics.hpp"
#include "faceaes/parallel.hpp"
#include "faceaes/rng.hpp"
#include "faceaes/standardizer.hpp"

namespace faceaes {

enum class Method { Svm, Svr, Ga };

constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Svm: return "svm";
    case Method::Svr: return "svr";
    case Method::Ga: return "ga";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "svm") return Method::Svm;
  if (s == "svr") return Method::Svr;
  if (s == "ga") return Method::Ga;
  fail(ErrorKind::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

/// The linear baseline for a task: SVM for classification, SVR for regression.
constexpr Method baseline_method(Task t) noexcept { return t == Task::Classification ? Method::Svm : Method::Svr; }

/// What the harness saw for one (round, fold): the rows it trained on, the
/// rows it tested on and the exact rows passed to the standardizer fit.
struct FoldAudit {
  std::size_t round = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<std::size_t> standardizer_rows;
};

struct ProtocolConfig {
  Method method = Method::Svm;
  Task task = Task::Classification;
  std::size_t rounds = 10;
  std::size_t folds = 10;
  std::uint64_t master_seed = 0;
  TrainConfig train;
  /// The GA task and seed are overwritten per fold.
  GaConfig ga = GaConfig::for_task(Task::Classification);
  bool stratified = false;
  /// Worker cap over (round, fold) items; 0 means default_threads().
  unsigned threads = 0;
  /// Called once per (round, fold), serialized.
  std::function<void(const FoldAudit&)> audit;

  void validate() const {
    require(rounds >= 1, ErrorKind::InvalidArgument, "rounds must be at least 1");
    require(folds >= 2, ErrorKind::InvalidArgument, "folds must be at least 2");
    if (method == Method::Svm) {
      require(task == Task::Classification, ErrorKind::InvalidArgument, "svm requires the classification task");
    }
    if (method == Method::Svr) {
      require(task == Task::Regression, ErrorKind::InvalidArgument, "svr requires the regression task");
    }
    train.validate();
    if (method == Method::Ga) ga.validate();
  }
};

struct EvalReport {
  std::string dataset;
  std::vector<std::string> blocks;
  std::size_t n_features = 0;
  Method method = Method::Svm;
  Task task = Task::Classification;
  std::size_t rounds = 0;
  std::size_t folds = 0;
  std::uint64_t master_seed = 0;
  /// [round][fold]
  std::vector<std::vector<double>> fold_metrics;
  std::vector<std::vector<std::size_t>> fold_selected;
  std::vector<double> round_means;
  double mean = 0.0;
  /// Sample standard deviation of the round means (0 for a single round).
  double std_dev = 0.0;
  double mean_selected = 0.0;

  bool is_ga() const noexcept { return method == Method::Ga; }
  std::string_view metric_name() const noexcept { return task == Task::Classification ? "GCR" : "LCC"; }
};

namespace detail {

inline constexpr std::uint64_t kPlanTag = 0x504C414E;
inline constexpr std::uint64_t kFitTag = 0x464954;
inline constexpr std::uint64_t kGaTag = 0x4741;

inline void aggregate(EvalReport& r) {
  r.round_means.clear();
  double selected = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < r.fold_metrics.size(); ++i) {
    const auto& row = r.fold_metrics[i];
    r.round_means.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    for (auto s : r.fold_selected[i]) {
      selected += static_cast<double>(s);
      ++cells;
    }
  }
  const double nr = static_cast<double>(r.round_means.size());
  r.mean = std::accumulate(r.round_means.begin(), r.round_means.end(), 0.0) / nr;
  double ss = 0.0;
  for (double m : r.round_means) ss += (m - r.mean) * (m - r.mean);
  r.std_dev = r.round_means.size() > 1 ? std::sqrt(ss / (nr - 1.0)) : 0.0;
  r.mean_selected = cells ? selected / static_cast<double>(cells) : 0.0;
}

}  // namespace detail

/// Targets for one protocol run: labels for classification, scores for
/// regression. Only the member matching the task is read.
struct ProtocolTargets {
  std::vector<int> labels;
  std::vector<double> scores;
};

/// Repeated k-fold cross-validation on an already fused feature block. For
/// every (round, fold): fit the standardizer on the training rows, train the
/// baseline (and refine it with the GA for Method::Ga), predict the test rows
/// and score them. Fold metrics are averaged per round, then across rounds.
inline EvalReport run_protocol(const FeatureBlock& features, const ProtocolTargets& targets,
                               const ProtocolConfig& config, std::string dataset = {},
                               std::vector<std::string> block_names = {}) {
  config.validate();
  const std::size_t n = features.rows();
  const bool cls = config.task == Task::Classification;
  if (cls) {
    require(targets.labels.size() == n, ErrorKind::DimMismatch, "run_protocol: label count != sample count");
  } else {
    require(targets.scores.size() == n, ErrorKind::DimMismatch, "run_protocol: score count != sample count");
  }

  EvalReport report;
  report.dataset = std::move(dataset);
  report.blocks = block_names.empty() ? std::vector<std::string>{features.name()} : std::move(block_names);
  report.n_features = features.dim();
  report.method = config.method;
  report.task = config.task;
  report.rounds = config.rounds;
  report.folds = config.folds;
  report.master_seed = config.master_seed;
  report.fold_metrics.assign(config.rounds, std::vector<double>(config.folds, 0.0));
  report.fold_selected.assign(config.rounds, std::vector<std::size_t>(config.folds, 0));

  std::vector<FoldPlan> plans;
  for (std::size_t r = 0; r < config.rounds; ++r) {
    const auto seed = derive_seed(config.master_seed, {detail::kPlanTag, r});
    plans.push_back(config.stratified && cls ? make_stratified_fold_plan(targets.labels, config.folds, seed, r)
                                             : make_fold_plan(n, config.folds, seed, r));
  }

  std::mutex audit_mutex;
  parallel_for(config.rounds * config.folds, config.threads, [&](std::size_t item) {
    const std::size_t r = item / config.folds;
    const std::size_t f = item % config.folds;
    const std::string where = "round " + std::to_string(r) + " fold " + std::to_string(f);
    const auto train_idx = plans[r].train_indices(f);
    const auto test_idx = plans[r].test_indices(f);

    const auto standardizer = fit_standardizer(features, train_idx);
    const auto x_train = standardizer.apply(features.select_rows(train_idx));
    const auto x_test = standardizer.apply(features.select_rows(test_idx));

    if (config.audit) {
      std::lock_guard lock(audit_mutex);
      config.audit(FoldAudit{r, f, train_idx, test_idx, train_idx});
    }

    TrainConfig tc = config.train;
    tc.rng_seed = derive_seed(config.master_seed, {detail::kFitTag, r, f});
    LinearModel model;
    std::vector<double> y_train;
    std::vector<int> l_train;
    try {
      if (cls) {
        for (auto i : train_idx) l_train.push_back(targets.labels[i]);
        model = train_svm(x_train, l_train, tc);
      } else {
        for (auto i : train_idx) y_train.push_back(targets.scores[i]);
        model = train_svr(x_train, y_train, tc);
      }
    } catch (const Error& e) {
      fail(e.kind(), where + ": " + e.what());
    }

    std::size_t selected = features.dim();
    if (config.method == Method::Ga) {
      GaConfig gc = config.ga;
      gc.task = config.task;
      gc.rng_seed = derive_seed(config.master_seed, {detail::kGaTag, r, f});
      auto result = cls ? evolve(x_train, std::span<const int>(l_train), model, gc, 1)
                        : evolve(x_train, std::span<const double>(y_train), model, gc, 1);
      selected = selected_feature_count(result.best);
      model = to_linear_model(result.best, config.task);
    }

    const auto preds = predict_all(model, x_test);
    double metric = 0.0;
    try {
      if (cls) {
        std::vector<int> truth;
        for (auto i : test_idx) truth.push_back(targets.labels[i]);
        metric = gcr(to_labels(preds), truth);
      } else {
        std::vector<double> truth;
        for (auto i : test_idx) truth.push_back(targets.scores[i]);
        metric = lcc(preds, truth);
      }
    } catch (const Error& e) {
      fail(e.kind(), where + ": " + e.what());
    }
    report.fold_metrics[r][f] = metric;
    report.fold_selected[r][f] = selected;
  });

  detail::aggregate(report);
  return report;
}

/// Targets for a manifest: native labels or the median split for
/// classification, raw scores for regression.
inline ProtocolTargets manifest_targets(const DatasetManifest& m, Task task) {
  ProtocolTargets t;
  if (task == Task::Classification) {
    t.labels = classification_labels(m);
  } else {
    t.scores = m.scores();
  }
  return t;
}

/// Orders block names IQ, IA, FA first, keeping other names in given order.
inline std::vector<std::string> canonical_order(std::vector<std::string> names) {
  std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) {
    return canonical_rank(a).value_or(3) < canonical_rank(b).value_or(3);
  });
  return names;
}

/// Loads and concatenates the named blocks of a manifest in canonical order.
inline FeatureBlock load_fused(const DatasetManifest& m, const std::vector<std::string>& names) {
  require(!names.empty(), ErrorKind::InvalidArgument, "no blocks selected");
  std::vector<FeatureBlock> blocks;
  for (const auto& name : canonical_order(names)) blocks.push_back(load_manifest_block(m, name));
  return concat_blocks(blocks);
}

inline EvalReport run_protocol(const DatasetManifest& manifest, const std::vector<std::string>& block_names,
                               const ProtocolConfig& config) {
  const auto names = canonical_order(block_names);
  return run_protocol(load_fused(manifest, names), manifest_targets(manifest, config.task), config,
                      manifest.dataset_name, names);
}

/// Block subsets in table row order for up to three blocks (bit i selects
/// block i): singles, then {0,2}, {0,1}, {1,2}, then all three.
inline std::vector<std::vector<std::size_t>> sweep_subsets(std::size_t n_blocks) {
  require(n_blocks >= 1 && n_blocks <= 3, ErrorKind::InvalidArgument,
          "sweep supports 1 to 3 blocks, got " + std::to_string(n_blocks));
  static constexpr unsigned kOrder[] = {0b001, 0b010, 0b100, 0b101, 0b011, 0b110, 0b111};
  const unsigned available = (1u << n_blocks) - 1;
  std::vector<std::vector<std::size_t>> out;
  for (unsigned bits : kOrder) {
    if ((bits & ~available) != 0) continue;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < 3; ++i) {
      if (bits & (1u << i)) subset.push_back(i);
    }
    out.push_back(std::move(subset));
  }
  return out;
}

/// Runs the baseline on every non-empty block subset, then (optionally) the
/// GA row on the concatenation of all blocks. All rows share the master seed,
/// so they are evaluated on identical fold plans.
inline std::vector<EvalReport> sweep_combinations(const DatasetManifest& manifest, const ProtocolConfig& base,
                                                  bool include_ga = true,
                                                  std::vector<std::string> block_names = {}) {
  if (block_names.empty()) block_names = manifest.block_names();
  block_names = canonical_order(std::move(block_names));
  require(!block_names.empty(), ErrorKind::InvalidArgument, "sweep: manifest lists no blocks");
  std::vector<FeatureBlock> blocks;
  for (const auto& name : block_names) blocks.push_back(load_manifest_block(manifest, name));
  const auto targets = manifest_targets(manifest, base.task);

  std::vector<EvalReport> rows;
  auto run = [&](const std::vector<std::size_t>& subset, Method method) {
    std::vector<FeatureBlock> parts;
    std::vector<std::string> names;
    for (auto i : subset) {
      parts.push_back(blocks[i]);
      names.push_back(block_names[i]);
    }
    ProtocolConfig cfg = base;
    cfg.method = method;
    rows.push_back(run_protocol(concat_blocks(parts), targets, cfg, manifest.dataset_name, names));
  };
  const auto subsets = sweep_subsets(blocks.size());
  for (const auto& subset : subsets) run(subset, baseline_method(base.task));
  if (include_ga) run(subsets.back(), Method::Ga);
  return rows;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["blocks"] = r.blocks;
  j["n_features"] = r.n_features;
  j["method"] = std::string(to_string(r.method));
  j["task"] = std::string(to_string(r.task));
  j["metric"] = std::string(r.metric_name());
  j["rounds"] = r.rounds;
  j["folds"] = r.folds;
  j["master_seed"] = r.master_seed;
  j["mean"] = r.mean;
  j["std"] = r.std_dev;
  j["round_means"] = r.round_means;
  j["fold_metrics"] = r.fold_metrics;
  if (r.is_ga()) {
    j["mean_selected"] = r.mean_selected;
    j["fold_selected"] = r.fold_selected;
  }
  return j;
}

inline nlohmann::ordered_json reports_to_json(std::span<const EvalReport> reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

}  // namespace faceaes

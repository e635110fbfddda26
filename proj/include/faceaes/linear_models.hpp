#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/rng.hpp"

namespace faceaes {

enum class Task { Classification, Regression };

constexpr std::string_view to_string(Task t) noexcept {
  return t == Task::Classification ? "classification" : "regression";
}

inline Task parse_task(std::string_view s) {
  if (s == "classification") return Task::Classification;
  if (s == "regression") return Task::Regression;
  fail(ErrorKind::InvalidArgument, "unknown task '" + std::string(s) + "'");
}

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  Task task = Task::Classification;

  std::size_t dim() const noexcept { return weights.size(); }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Solver settings for the primal SGD trainer. The step size follows
/// eta_t = eta0 / (1 + lambda * eta0 * t) with lambda = 1 / (C * n); when eta0
/// is unset it is 1 / mean(||x||^2 + 1) over the training rows.
struct TrainConfig {
  double regularization_c = 1.0;
  int epochs = 50;
  std::optional<double> eta0;
  double svr_epsilon = 0.1;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(regularization_c > 0 && std::isfinite(regularization_c), ErrorKind::InvalidArgument,
            "regularization C must be positive");
    require(epochs > 0, ErrorKind::InvalidArgument, "epochs must be positive");
    require(!eta0 || (*eta0 > 0 && std::isfinite(*eta0)), ErrorKind::InvalidArgument,
            "eta0 must be positive");
    require(svr_epsilon >= 0 && std::isfinite(svr_epsilon), ErrorKind::InvalidArgument,
            "svr epsilon must be non-negative");
  }
};

template <class T>
double dot(std::span<const double> w, std::span<const T> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * static_cast<double>(x[j]);
  return s;
}

template <class T>
double predict(const LinearModel& model, std::span<const T> row) {
  require(row.size() == model.dim(), ErrorKind::DimMismatch,
          "predict: row length " + std::to_string(row.size()) + " != model dim " +
              std::to_string(model.dim()));
  return dot(std::span<const double>(model.weights), row) + model.bias;
}

inline std::vector<double> predict_all(const LinearModel& model, const FeatureBlock& features) {
  require(features.dim() == model.dim(), ErrorKind::DimMismatch,
          "predict_all: block dim " + std::to_string(features.dim()) + " != model dim " +
              std::to_string(model.dim()));
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict(model, features.row(i));
  return out;
}

namespace detail {

inline void check_loss_inputs(std::size_t a, std::size_t b, const char* what) {
  require(a > 0, ErrorKind::InvalidArgument, std::string(what) + ": empty input");
  require(a == b, ErrorKind::DimMismatch, std::string(what) + ": length mismatch");
}

}  // namespace detail

/// Mean of max(0, 1 - y * pred).
inline double hinge_loss(std::span<const double> predictions, std::span<const int> labels) {
  detail::check_loss_inputs(predictions.size(), labels.size(), "hinge_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    s += std::max(0.0, 1.0 - labels[i] * predictions[i]);
  }
  return s / static_cast<double>(predictions.size());
}

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
inline double smooth_l1(double x) noexcept {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

inline double smooth_l1_loss(std::span<const double> predictions, std::span<const double> targets) {
  detail::check_loss_inputs(predictions.size(), targets.size(), "smooth_l1_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += smooth_l1(predictions[i] - targets[i]);
  return s / static_cast<double>(predictions.size());
}

inline double epsilon_insensitive_loss(std::span<const double> predictions,
                                       std::span<const double> targets, double epsilon) {
  detail::check_loss_inputs(predictions.size(), targets.size(), "epsilon_insensitive_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    s += std::max(0.0, std::abs(predictions[i] - targets[i]) - epsilon);
  }
  return s / static_cast<double>(predictions.size());
}

/// Regularized primal objective lambda/2 ||w||^2 + mean loss, lambda = 1/(C n).
inline double svm_objective(const LinearModel& m, const FeatureBlock& x, std::span<const int> y,
                            double c) {
  const double lambda = 1.0 / (c * static_cast<double>(x.rows()));
  const double w2 = std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(), 0.0);
  return 0.5 * lambda * w2 + hinge_loss(predict_all(m, x), y);
}

inline double svr_objective(const LinearModel& m, const FeatureBlock& x, std::span<const double> y,
                            double c, double epsilon) {
  const double lambda = 1.0 / (c * static_cast<double>(x.rows()));
  const double w2 = std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(), 0.0);
  return 0.5 * lambda * w2 + epsilon_insensitive_loss(predict_all(m, x), y, epsilon);
}

namespace detail {

/// Averaged SGD on the primal. `loss_slope(margin_input, i)` returns the
/// derivative of the per-sample loss w.r.t. the prediction. After every epoch
/// both the current and the averaged iterate are scored on the full objective
/// and the best model seen so far is kept, so the per-epoch objective history
/// is non-increasing.
template <class Slope, class Objective>
LinearModel train_primal_sgd(const FeatureBlock& x, Task task, double initial_bias,
                             const TrainConfig& cfg, Slope&& loss_slope, Objective&& objective,
                             std::vector<double>* history) {
  const std::size_t n = x.rows();
  const std::size_t d = x.dim();
  const double lambda = 1.0 / (cfg.regularization_c * static_cast<double>(n));
  double eta0 = 0.0;
  if (cfg.eta0) {
    eta0 = *cfg.eta0;
  } else {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (float v : x.row(i)) norm2 += static_cast<double>(v) * v;
    }
    eta0 = 1.0 / (norm2 / static_cast<double>(n) + 1.0);
  }

  LinearModel cur{std::vector<double>(d, 0.0), initial_bias, task};
  LinearModel avg = cur;
  LinearModel best = cur;
  double best_obj = objective(best);
  if (history) history->clear();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;
  std::uint64_t averaged = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto rng = make_stream(cfg.rng_seed, {static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      const double eta = eta0 / (1.0 + lambda * eta0 * static_cast<double>(t));
      auto row = x.row(i);
      const double p = dot(std::span<const double>(cur.weights), row) + cur.bias;
      const double g = loss_slope(p, i);
      const double shrink = 1.0 - eta * lambda;
      for (std::size_t j = 0; j < d; ++j) cur.weights[j] = shrink * cur.weights[j] - eta * g * row[j];
      cur.bias -= eta * g;
      ++t;
      // Running average of iterates, starting after the first epoch.
      if (epoch > 0) {
        ++averaged;
        const double mu = 1.0 / static_cast<double>(averaged);
        for (std::size_t j = 0; j < d; ++j) avg.weights[j] += mu * (cur.weights[j] - avg.weights[j]);
        avg.bias += mu * (cur.bias - avg.bias);
      }
    }
    for (const LinearModel* cand : {&cur, &avg}) {
      if (cand == &avg && averaged == 0) continue;
      const double obj = objective(*cand);
      if (obj < best_obj) {
        best_obj = obj;
        best = *cand;
      }
    }
    if (history) history->push_back(best_obj);
  }
  return best;
}

}  // namespace detail

/// Linear SVM: L2-regularized mean hinge loss, labels in {-1, +1}.
inline LinearModel train_svm(const FeatureBlock& features, std::span<const int> labels,
                             const TrainConfig& config, std::vector<double>* objective_history = nullptr) {
  config.validate();
  require(features.rows() == labels.size(), ErrorKind::DimMismatch,
          "train_svm: " + std::to_string(features.rows()) + " rows vs " +
              std::to_string(labels.size()) + " labels");
  require(labels.size() >= 2, ErrorKind::InvalidArgument, "train_svm: need at least 2 samples");
  bool has_pos = false;
  bool has_neg = false;
  for (int y : labels) {
    require(y == 1 || y == -1, ErrorKind::InvalidArgument, "train_svm: labels must be -1 or +1");
    (y > 0 ? has_pos : has_neg) = true;
  }
  require(has_pos && has_neg, ErrorKind::SingleClass, "train_svm: labels contain a single class");
  auto slope = [&](double p, std::size_t i) { return labels[i] * p < 1.0 ? -static_cast<double>(labels[i]) : 0.0; };
  auto objective = [&](const LinearModel& m) {
    return svm_objective(m, features, labels, config.regularization_c);
  };
  return detail::train_primal_sgd(features, Task::Classification, 0.0, config, slope, objective,
                                  objective_history);
}

/// Linear SVR: L2-regularized mean epsilon-insensitive loss. The bias starts
/// at the mean target.
inline LinearModel train_svr(const FeatureBlock& features, std::span<const double> scores,
                             const TrainConfig& config, std::vector<double>* objective_history = nullptr) {
  config.validate();
  require(features.rows() == scores.size(), ErrorKind::DimMismatch,
          "train_svr: " + std::to_string(features.rows()) + " rows vs " +
              std::to_string(scores.size()) + " scores");
  require(scores.size() >= 2, ErrorKind::InvalidArgument, "train_svr: need at least 2 samples");
  for (double s : scores) require(std::isfinite(s), ErrorKind::NonFinite, "train_svr: non-finite score");
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  const double eps = config.svr_epsilon;
  auto slope = [&](double p, std::size_t i) {
    const double r = p - scores[i];
    if (r > eps) return 1.0;
    if (r < -eps) return -1.0;
    return 0.0;
  };
  auto objective = [&](const LinearModel& m) {
    return svr_objective(m, features, scores, config.regularization_c, eps);
  };
  return detail::train_primal_sgd(features, Task::Regression, mean, config, slope, objective,
                                  objective_history);
}

}  // namespace faceaes

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/linear_models.hpp"
#include "faceaes/parallel.hpp"
#include "faceaes/rng.hpp"

namespace faceaes {

/// GA individual: a feature-selection mask, one real weight per feature and
/// a bias. The prediction is sum_j x_j * (mask_j * weights_j) + bias.
struct Chromosome {
  std::vector<std::uint8_t> mask;
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t size() const noexcept { return weights.size(); }

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

inline std::size_t selected_feature_count(const Chromosome& c) {
  return static_cast<std::size_t>(std::count_if(c.mask.begin(), c.mask.end(), [](auto b) { return b != 0; }));
}

/// Dense weights with unselected features zeroed.
inline std::vector<double> effective_weights(const Chromosome& c) {
  std::vector<double> w(c.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = c.mask[j] ? c.weights[j] : 0.0;
  return w;
}

inline LinearModel to_linear_model(const Chromosome& c, Task task) {
  return LinearModel{effective_weights(c), c.bias, task};
}

template <class T>
double chromosome_predict(const Chromosome& c, std::span<const T> row) {
  require(row.size() == c.size() && c.mask.size() == c.size(), ErrorKind::DimMismatch,
          "chromosome_predict: row length " + std::to_string(row.size()) + " != N_f " +
              std::to_string(c.size()));
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    s += static_cast<double>(row[j]) * (c.mask[j] ? c.weights[j] : 0.0);
  }
  return s + c.bias;
}

struct GaConfig {
  std::size_t population_size = 100;
  std::size_t generations = 200;
  double crossover_prob = 0.80;
  double elitism_fraction = 0.07;
  std::size_t tournament_size = 3;
  /// Unset: 1 / N_f.
  std::optional<double> bit_mutation_prob;
  /// Unset: max(0.01 * std(seed weights), 1e-3).
  std::optional<double> weight_mutation_sigma;
  /// Relative to std(seed weights).
  double init_perturb_sigma = 0.05;
  double init_mask_density = 0.8;
  std::uint64_t rng_seed = 0;
  Task task = Task::Classification;

  /// Population 100 for both tasks; 200 generations, 80% crossover and 7%
  /// elitism for classification; 250 generations, 85% and 10% for regression.
  static GaConfig for_task(Task task) {
    GaConfig c;
    c.task = task;
    if (task == Task::Regression) {
      c.generations = 250;
      c.crossover_prob = 0.85;
      c.elitism_fraction = 0.10;
    }
    return c;
  }

  std::size_t elitism_count() const {
    const auto e = static_cast<std::size_t>(std::floor(elitism_fraction * static_cast<double>(population_size) + 0.5));
    return std::max<std::size_t>(1, std::min(e, population_size));
  }

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    require(population_size > 0, ErrorKind::InvalidArgument, "population_size must be positive");
    require(generations > 0, ErrorKind::InvalidArgument, "generations must be positive");
    require(prob(crossover_prob), ErrorKind::InvalidArgument, "crossover_prob must be in [0,1]");
    require(elitism_fraction >= 0.0 && elitism_fraction < 1.0, ErrorKind::InvalidArgument,
            "elitism_fraction must be in [0,1)");
    require(tournament_size > 0, ErrorKind::InvalidArgument, "tournament_size must be positive");
    require(!bit_mutation_prob || prob(*bit_mutation_prob), ErrorKind::InvalidArgument,
            "bit_mutation_prob must be in [0,1]");
    require(!weight_mutation_sigma || (*weight_mutation_sigma >= 0.0 && std::isfinite(*weight_mutation_sigma)),
            ErrorKind::InvalidArgument, "weight_mutation_sigma must be non-negative");
    require(init_perturb_sigma >= 0.0 && std::isfinite(init_perturb_sigma), ErrorKind::InvalidArgument,
            "init_perturb_sigma must be non-negative");
    require(init_mask_density > 0.0 && init_mask_density <= 1.0, ErrorKind::InvalidArgument,
            "init_mask_density must be in (0,1]");
  }
};

struct GaTrace {
  std::vector<double> best_fitness;
  std::vector<double> mean_fitness;
  std::vector<std::size_t> best_selected_count;

  std::size_t size() const noexcept { return best_fitness.size(); }
};

namespace detail {

// Stream tags so init, breeding and any later use never share a stream.
inline constexpr std::uint64_t kInitTag = 0x494E4954;
inline constexpr std::uint64_t kBreedTag = 0x42524544;

inline double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline void add_noise(std::span<double> values, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : values) v += noise(rng);
}

}  // namespace detail

inline double resolved_bit_mutation_prob(const GaConfig& cfg, std::size_t n_features) {
  return cfg.bit_mutation_prob.value_or(n_features ? 1.0 / static_cast<double>(n_features) : 0.0);
}

inline double resolved_weight_mutation_sigma(const GaConfig& cfg, const LinearModel& seed) {
  if (cfg.weight_mutation_sigma) return *cfg.weight_mutation_sigma;
  return std::max(0.01 * detail::population_std(seed.weights), 1e-3);
}

/// Individual 0 is the seed model with an all-ones mask; the others are
/// perturbed copies with randomly thinned masks.
inline std::vector<Chromosome> init_population(const LinearModel& seed_model, const GaConfig& config) {
  config.validate();
  const std::size_t nf = seed_model.dim();
  require(nf > 0, ErrorKind::DimMismatch, "init_population: seed model has zero dim");
  const double sigma = config.init_perturb_sigma * detail::population_std(seed_model.weights);
  std::vector<Chromosome> pop;
  pop.reserve(config.population_size);
  pop.push_back(Chromosome{std::vector<std::uint8_t>(nf, 1), seed_model.weights, seed_model.bias});
  for (std::size_t i = 1; i < config.population_size; ++i) {
    auto rng = make_stream(config.rng_seed, {detail::kInitTag, i});
    Chromosome c{std::vector<std::uint8_t>(nf, 1), seed_model.weights, seed_model.bias};
    detail::add_noise(c.weights, sigma, rng);
    detail::add_noise(std::span<double>(&c.bias, 1), sigma, rng);
    if (config.init_mask_density < 1.0) {
      std::bernoulli_distribution keep(config.init_mask_density);
      for (auto& b : c.mask) b = keep(rng) ? 1 : 0;
    }
    pop.push_back(std::move(c));
  }
  return pop;
}

/// Lower is better: mean hinge loss (classification, targets in {-1,+1}) or
/// mean Smooth-L1 loss (regression).
inline double fitness(const Chromosome& c, const FeatureBlock& features, std::span<const double> targets,
                      Task task) {
  require(c.size() == features.dim() && c.mask.size() == c.size(), ErrorKind::DimMismatch,
          "fitness: chromosome N_f " + std::to_string(c.size()) + " != feature dim " +
              std::to_string(features.dim()));
  require(targets.size() == features.rows(), ErrorKind::DimMismatch,
          "fitness: " + std::to_string(targets.size()) + " targets for " + std::to_string(features.rows()) +
              " rows");
  const auto model = to_linear_model(c, task);
  const auto preds = predict_all(model, features);
  if (task == Task::Classification) {
    std::vector<int> labels(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      require(targets[i] == 1.0 || targets[i] == -1.0, ErrorKind::InvalidArgument,
              "fitness: classification targets must be -1 or +1");
      labels[i] = targets[i] > 0 ? 1 : -1;
    }
    return hinge_loss(preds, labels);
  }
  return smooth_l1_loss(preds, targets);
}

/// Draws tournament_size indices with replacement; the lowest fitness wins,
/// ties going to the lower index.
inline std::size_t select_tournament(std::span<const double> fitnesses, const GaConfig& config, Rng& rng) {
  require(!fitnesses.empty(), ErrorKind::InvalidArgument, "select_tournament: empty population");
  std::uniform_int_distribution<std::size_t> pick(0, fitnesses.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t k = 1; k < config.tournament_size; ++k) {
    const std::size_t i = pick(rng);
    if (fitnesses[i] < fitnesses[best] || (fitnesses[i] == fitnesses[best] && i < best)) best = i;
  }
  return best;
}

/// Arithmetic blend of the real genes with a fixed alpha:
/// first = b + alpha (a - b), second = a + alpha (b - a).
/// Written in this form so that identical parents reproduce exactly.
inline std::pair<Chromosome, Chromosome> blend(const Chromosome& a, const Chromosome& b, double alpha) {
  require(a.size() == b.size(), ErrorKind::DimMismatch, "crossover: parent length mismatch");
  Chromosome c1 = a;
  Chromosome c2 = b;
  for (std::size_t j = 0; j < a.size(); ++j) {
    c1.weights[j] = b.weights[j] + alpha * (a.weights[j] - b.weights[j]);
    c2.weights[j] = a.weights[j] + alpha * (b.weights[j] - a.weights[j]);
  }
  c1.bias = b.bias + alpha * (a.bias - b.bias);
  c2.bias = a.bias + alpha * (b.bias - a.bias);
  return {std::move(c1), std::move(c2)};
}

/// With probability crossover_prob: uniform crossover on mask bits and a
/// single-alpha blend on weights and bias. Otherwise the parents are returned.
inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b,
                                                   const GaConfig& config, Rng& rng) {
  require(a.size() == b.size() && a.mask.size() == b.mask.size(), ErrorKind::DimMismatch,
          "crossover: parent length mismatch");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!(unit(rng) < config.crossover_prob)) return {a, b};
  const double alpha = unit(rng);
  auto children = blend(a, b, alpha);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t j = 0; j < a.mask.size(); ++j) {
    if (coin(rng)) {
      children.first.mask[j] = b.mask[j];
      children.second.mask[j] = a.mask[j];
    } else {
      children.first.mask[j] = a.mask[j];
      children.second.mask[j] = b.mask[j];
    }
  }
  return children;
}

/// Flips each mask bit with probability `bit_prob` and adds N(0, sigma) noise
/// to every weight and the bias.
inline Chromosome mutate(Chromosome c, double bit_prob, double sigma, Rng& rng) {
  if (bit_prob >= 1.0) {
    for (auto& b : c.mask) b = b ? 0 : 1;
  } else if (bit_prob > 0.0) {
    std::bernoulli_distribution flip(bit_prob);
    for (auto& b : c.mask) {
      if (flip(rng)) b = b ? 0 : 1;
    }
  }
  detail::add_noise(c.weights, sigma, rng);
  detail::add_noise(std::span<double>(&c.bias, 1), sigma, rng);
  return c;
}

inline Chromosome mutate(Chromosome c, const GaConfig& config, const LinearModel& seed, Rng& rng) {
  const double p = resolved_bit_mutation_prob(config, c.size());
  const double sigma = resolved_weight_mutation_sigma(config, seed);
  return mutate(std::move(c), p, sigma, rng);
}

struct GaResult {
  Chromosome best;
  double best_fitness = 0.0;
  GaTrace trace;
};

/// Runs the generational GA: trace entry 0 is the initial population, then
/// each of `generations` steps keeps the elites unchanged and fills the rest
/// with tournament selection, crossover and mutation. Offspring pair p of
/// generation g draws from its own stream derived from (rng_seed, g, p), and
/// fitness evaluation is slot-indexed, so the result is identical for any
/// `threads` value.
inline GaResult evolve(const FeatureBlock& features, std::span<const double> targets,
                       const LinearModel& seed_model, const GaConfig& config, unsigned threads = 1) {
  config.validate();
  require(seed_model.dim() == features.dim(), ErrorKind::DimMismatch,
          "evolve: seed model dim " + std::to_string(seed_model.dim()) + " != feature dim " +
              std::to_string(features.dim()));
  require(targets.size() == features.rows(), ErrorKind::DimMismatch, "evolve: target count mismatch");

  const std::size_t pop_size = config.population_size;
  const std::size_t elites = config.elitism_count();
  const double bit_prob = resolved_bit_mutation_prob(config, features.dim());
  const double sigma = resolved_weight_mutation_sigma(config, seed_model);

  std::vector<Chromosome> pop = init_population(seed_model, config);
  std::vector<double> fit(pop_size);
  auto evaluate = [&](std::size_t first) {
    parallel_for(pop_size - first, threads,
                 [&](std::size_t k) { fit[first + k] = fitness(pop[first + k], features, targets, config.task); });
  };
  evaluate(0);

  GaResult result;
  std::size_t best_idx = 0;
  for (std::size_t i = 1; i < pop_size; ++i) {
    if (fit[i] < fit[best_idx]) best_idx = i;
  }
  result.best = pop[best_idx];
  result.best_fitness = fit[best_idx];

  auto record = [&] {
    result.trace.best_fitness.push_back(result.best_fitness);
    result.trace.mean_fitness.push_back(std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(pop_size));
    result.trace.best_selected_count.push_back(selected_feature_count(result.best));
  };
  record();

  std::vector<std::size_t> order(pop_size);
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fit[a] < fit[b] || (fit[a] == fit[b] && a < b);
    });
    std::vector<Chromosome> next(pop_size);
    std::vector<double> next_fit(pop_size);
    for (std::size_t e = 0; e < elites; ++e) {
      next[e] = pop[order[e]];
      next_fit[e] = fit[order[e]];
    }
    const std::size_t pairs = (pop_size - elites + 1) / 2;
    parallel_for(pairs, threads, [&](std::size_t p) {
      auto rng = make_stream(config.rng_seed, {detail::kBreedTag, gen, p});
      const std::size_t ia = select_tournament(fit, config, rng);
      const std::size_t ib = select_tournament(fit, config, rng);
      auto [c1, c2] = crossover(pop[ia], pop[ib], config, rng);
      const std::size_t slot = elites + 2 * p;
      next[slot] = mutate(std::move(c1), bit_prob, sigma, rng);
      if (slot + 1 < pop_size) next[slot + 1] = mutate(std::move(c2), bit_prob, sigma, rng);
    });
    pop = std::move(next);
    fit = std::move(next_fit);
    evaluate(elites);

    for (std::size_t i = 0; i < pop_size; ++i) {
      if (fit[i] < result.best_fitness) {
        result.best_fitness = fit[i];
        result.best = pop[i];
      }
    }
    record();
  }
  return result;
}

/// Classification overload: labels in {-1, +1}.
inline GaResult evolve(const FeatureBlock& features, std::span<const int> labels, const LinearModel& seed_model,
                       const GaConfig& config, unsigned threads = 1) {
  std::vector<double> targets(labels.begin(), labels.end());
  return evolve(features, std::span<const double>(targets), seed_model, config, threads);
}

}  // namespace faceaes

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "faceaes/error.hpp"
#include "faceaes/feature_block.hpp"
#include "faceaes/fvec_io.hpp"
#include "faceaes/manifest.hpp"
#include "faceaes/rng.hpp"

namespace faceaes {

struct SynthParams {
  std::size_t n = 200;
  std::vector<std::string> names{"SA", "SB", "SC"};
  std::vector<std::size_t> dims{30, 30, 20};
  std::size_t informative = 10;
  double noise = 0.0;
  double bias = 5.0;
  std::uint64_t seed = 0;
  std::string dataset_name = "synthetic";
  /// Store median-split labels in the manifest, like a pre-labeled dataset.
  bool labeled = false;

  std::size_t total_dim() const { return std::accumulate(dims.begin(), dims.end(), std::size_t{0}); }

  void validate() const {
    require(n >= 2, ErrorKind::InvalidArgument, "synth: n must be at least 2");
    require(!dims.empty() && dims.size() == names.size(), ErrorKind::InvalidArgument,
            "synth: need one name per block dim");
    for (auto d : dims) require(d > 0, ErrorKind::InvalidArgument, "synth: block dims must be positive");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (auto c = canonical_dim(names[i]); c && *c != dims[i]) {
        fail(ErrorKind::DimMismatch, "synth: block " + names[i] + " must have dim " + std::to_string(*c));
      }
    }
    require(informative >= 1 && informative <= total_dim(), ErrorKind::InvalidArgument,
            "synth: informative count must be in [1, total dim]");
    require(noise >= 0.0 && std::isfinite(noise), ErrorKind::InvalidArgument, "synth: noise must be >= 0");
  }
};

/// Ground truth of a synthetic dataset. Scores are
/// weights . x + bias + noise * N(0,1) on the concatenated features; with
/// zero noise, label = +1 iff weights . x + bias >= threshold.
struct SynthTruth {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<std::size_t> informative;
  double threshold = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<FeatureBlock> blocks;
  SynthTruth truth;
};

inline SynthDataset generate_synthetic(const SynthParams& p) {
  p.validate();
  const std::size_t total = p.total_dim();
  Rng rng = make_stream(p.seed, {0});

  SynthTruth truth;
  truth.noise = p.noise;
  truth.seed = p.seed;
  truth.bias = p.bias;
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  truth.informative.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(p.informative));
  std::sort(truth.informative.begin(), truth.informative.end());
  truth.weights.assign(total, 0.0);
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  for (auto j : truth.informative) truth.weights[j] = (sign(rng) ? 1.0 : -1.0) * magnitude(rng);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> x(p.n * total);
  for (auto& v : x) v = static_cast<float>(gauss(rng));
  std::vector<double> clean(p.n);
  std::vector<double> scores(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    double s = truth.bias;
    for (std::size_t j = 0; j < total; ++j) s += truth.weights[j] * x[i * total + j];
    clean[i] = s;
    scores[i] = s + p.noise * gauss(rng);
  }

  SynthDataset out;
  out.manifest.dataset_name = p.dataset_name;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(p.n - 1).size()));
  for (std::size_t i = 0; i < p.n; ++i) {
    std::string id = std::to_string(i);
    id = "s" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    out.manifest.samples.push_back(SampleRecord{id, scores[i], std::nullopt});
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  out.manifest.score_range = {*lo, *hi};

  auto sorted = clean;
  std::sort(sorted.begin(), sorted.end());
  truth.threshold = 0.5 * (sorted[p.n / 2 - 1] + sorted[p.n / 2]);

  if (p.labeled) {
    const auto labels = median_split(out.manifest);
    for (std::size_t i = 0; i < p.n; ++i) out.manifest.samples[i].label = labels[i];
  }

  std::size_t offset = 0;
  for (std::size_t b = 0; b < p.dims.size(); ++b) {
    std::vector<float> data(p.n * p.dims[b]);
    for (std::size_t i = 0; i < p.n; ++i) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * total + offset), p.dims[b],
                  data.begin() + static_cast<std::ptrdiff_t>(i * p.dims[b]));
    }
    out.blocks.emplace_back(p.names[b], p.n, p.dims[b], std::move(data));
    out.manifest.block_refs[p.names[b]] = p.names[b] + ".fvec";
    offset += p.dims[b];
  }
  out.truth = std::move(truth);
  return out;
}

inline nlohmann::ordered_json truth_to_json(const SynthTruth& t, const SynthParams& p) {
  nlohmann::ordered_json j;
  j["seed"] = t.seed;
  j["noise"] = t.noise;
  j["blocks"] = p.names;
  j["dims"] = p.dims;
  j["bias"] = t.bias;
  j["threshold"] = t.threshold;
  j["informative"] = t.informative;
  j["weights"] = t.weights;
  return j;
}

/// Writes <name>.fvec per block, manifest.json and truth.json into `dir`.
inline DatasetManifest write_synthetic(const std::filesystem::path& dir, const SynthParams& p) {
  auto ds = generate_synthetic(p);
  std::filesystem::create_directories(dir);
  for (const auto& b : ds.blocks) write_block(dir / (b.name() + ".fvec"), b);
  save_manifest(dir / "manifest.json", ds.manifest);
  std::ofstream truth(dir / "truth.json", std::ios::trunc);
  if (!truth) fail(ErrorKind::Io, "cannot write truth.json in '" + dir.string() + "'");
  truth << truth_to_json(ds.truth, p).dump(2) << '\n';
  ds.manifest.base_dir = dir;
  return ds.manifest;
}

}  // namespace faceaes

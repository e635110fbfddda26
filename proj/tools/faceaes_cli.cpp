// faceaes: command-line front end.
//
//   faceaes synth         --out DIR [--n N --dims 30,30,20 --names SA,SB,SC ...]
//   faceaes validate      --manifest M
//   faceaes extract-check --manifest M [--reference M2] [--blocks IQ,IA,FA]
//   faceaes train         --manifest M --task T [--blocks ..] [--method ..] --out DIR
//   faceaes evaluate      --manifest M --task T [--blocks ..] [--method ..] --out DIR
//   faceaes sweep         --manifest M [--manifest M2 ..] --task T --out DIR
//
// Exit codes: 0 success, 1 dataset diagnostics, 2 usage error, 3 runtime error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "faceaes/faceaes.hpp"

namespace fs = std::filesystem;
using namespace faceaes;

namespace {

constexpr int kExitDiagnostics = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct SolverFlags {
  std::optional<double> c;
  std::optional<int> epochs;
  std::optional<double> eta0;
  std::optional<double> svr_epsilon;
  std::optional<std::size_t> population;
  std::optional<std::size_t> generations;
  std::optional<double> crossover;
  std::optional<double> elitism;
  std::optional<std::size_t> tournament;
  std::optional<double> bit_mutation;
  std::optional<double> weight_sigma;
  std::optional<double> init_sigma;
  std::optional<double> init_density;
};

struct CommonFlags {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string task;
  std::string method;
  std::vector<std::string> blocks;
  std::size_t rounds = 10;
  std::size_t folds = 10;
  bool stratified = false;
  fs::path out = "faceaes_out";
  SolverFlags solver;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--c", f.c, "SVM/SVR regularization C")->group("Solver");
  cmd->add_option("--epochs", f.epochs, "SGD epochs")->group("Solver");
  cmd->add_option("--eta0", f.eta0, "initial SGD step (default: 1/mean squared row norm)")->group("Solver");
  cmd->add_option("--svr-epsilon", f.svr_epsilon, "SVR epsilon-insensitive width")->group("Solver");
  cmd->add_option("--population", f.population, "GA population size")->group("GA");
  cmd->add_option("--generations", f.generations, "GA generations")->group("GA");
  cmd->add_option("--crossover", f.crossover, "GA crossover probability")->group("GA");
  cmd->add_option("--elitism", f.elitism, "GA elitism fraction")->group("GA");
  cmd->add_option("--tournament", f.tournament, "GA tournament size")->group("GA");
  cmd->add_option("--bit-mutation", f.bit_mutation, "GA per-bit flip probability (default 1/N_f)")->group("GA");
  cmd->add_option("--weight-sigma", f.weight_sigma, "GA weight mutation sigma")->group("GA");
  cmd->add_option("--init-sigma", f.init_sigma, "GA init perturbation, relative to std(seed weights)")->group("GA");
  cmd->add_option("--init-density", f.init_density, "GA init mask density")->group("GA");
}

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool protocol) {
  cmd->add_option("--seed", f.seed, "master seed; all randomness derives from it");
  cmd->add_option("--threads", f.threads, "worker cap (0: $FACEAES_THREADS or hardware)");
  cmd->add_option("--task", f.task, "classification | regression")
      ->required()
      ->check(CLI::IsMember({"classification", "regression"}));
  cmd->add_option("--out", f.out, "output directory");
  if (protocol) {
    cmd->add_option("--rounds", f.rounds, "cross-validation repetitions")->check(CLI::PositiveNumber);
    cmd->add_option("--folds", f.folds, "folds per round")->check(CLI::Range(2, 1000000));
    cmd->add_flag("--stratified", f.stratified, "stratify folds by class (classification only)");
  }
  add_solver_flags(cmd, f.solver);
}

TrainConfig resolve_train(const CommonFlags& f) {
  TrainConfig t;
  if (f.solver.c) t.regularization_c = *f.solver.c;
  if (f.solver.epochs) t.epochs = *f.solver.epochs;
  t.eta0 = f.solver.eta0;
  if (f.solver.svr_epsilon) t.svr_epsilon = *f.solver.svr_epsilon;
  t.rng_seed = f.seed;
  t.validate();
  return t;
}

GaConfig resolve_ga(const CommonFlags& f, Task task) {
  auto g = GaConfig::for_task(task);
  const auto& s = f.solver;
  if (s.population) g.population_size = *s.population;
  if (s.generations) g.generations = *s.generations;
  if (s.crossover) g.crossover_prob = *s.crossover;
  if (s.elitism) g.elitism_fraction = *s.elitism;
  if (s.tournament) g.tournament_size = *s.tournament;
  g.bit_mutation_prob = s.bit_mutation;
  g.weight_mutation_sigma = s.weight_sigma;
  if (s.init_sigma) g.init_perturb_sigma = *s.init_sigma;
  if (s.init_density) g.init_mask_density = *s.init_density;
  g.rng_seed = f.seed;
  g.validate();
  return g;
}

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json("auto");
}

nlohmann::ordered_json config_json(const ProtocolConfig& p, const GaConfig& ga) {
  nlohmann::ordered_json j;
  j["task"] = std::string(to_string(p.task));
  j["method"] = std::string(to_string(p.method));
  j["master_seed"] = p.master_seed;
  j["rounds"] = p.rounds;
  j["folds"] = p.folds;
  j["stratified"] = p.stratified;
  j["svm"] = {{"c", p.train.regularization_c},
              {"epochs", p.train.epochs},
              {"eta0", opt_json(p.train.eta0)},
              {"svr_epsilon", p.train.svr_epsilon}};
  j["ga"] = {{"population_size", ga.population_size},
             {"generations", ga.generations},
             {"crossover_prob", ga.crossover_prob},
             {"elitism_fraction", ga.elitism_fraction},
             {"elitism_count", ga.elitism_count()},
             {"tournament_size", ga.tournament_size},
             {"bit_mutation_prob", opt_json(ga.bit_mutation_prob)},
             {"weight_mutation_sigma", opt_json(ga.weight_mutation_sigma)},
             {"init_perturb_sigma", ga.init_perturb_sigma},
             {"init_mask_density", ga.init_mask_density}};
  return j;
}

ProtocolConfig resolve_protocol(const CommonFlags& f) {
  ProtocolConfig p;
  p.task = parse_task(f.task);
  p.method = f.method.empty() ? baseline_method(p.task) : parse_method(f.method);
  p.rounds = f.rounds;
  p.folds = f.folds;
  p.master_seed = f.seed;
  p.stratified = f.stratified;
  p.threads = f.threads;
  p.train = resolve_train(f);
  p.ga = resolve_ga(f, p.task);
  p.validate();
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> resolve_blocks(const DatasetManifest& m, const std::vector<std::string>& requested) {
  if (requested.empty()) return m.block_names();
  return canonical_order(requested);
}

int report_diagnostics(const ValidationResult& v) {
  for (const auto& d : v.diagnostics) std::cerr << d.to_string() << '\n';
  return v.clean() ? 0 : kExitDiagnostics;
}

// -- subcommands ------------------------------------------------------------

int cmd_validate(const fs::path& manifest) {
  auto v = validate_dataset(manifest);
  for (const auto& b : v.blocks) {
    std::cout << b.name << " rows=" << b.rows << " dim=" << b.dim << " file=" << b.file.filename().string() << '\n';
  }
  if (v.clean()) std::cout << "ok: " << v.manifest->dataset_name << " (" << v.manifest->size() << " samples)\n";
  return report_diagnostics(v);
}

int cmd_extract_check(const fs::path& manifest, const std::optional<fs::path>& reference,
                      const std::vector<std::string>& blocks) {
  auto v = validate_dataset(manifest);
  int rc = report_diagnostics(v);
  if (!v.manifest) return rc;
  std::map<std::string, BlockSummary> found;
  for (const auto& b : v.blocks) found[b.name] = b;
  for (const auto& name : blocks) {
    auto it = found.find(name);
    if (it == found.end()) {
      if (!v.manifest->block_refs.count(name)) {
        std::cerr << manifest.string() << ": missing required block '" << name << "'\n";
      }
      rc = kExitDiagnostics;
      continue;
    }
    const auto canon = canonical_dim(name);
    if (!canon) {
      std::cerr << it->second.file.string() << ": block '" << name << "' has no canonical dim\n";
      rc = kExitDiagnostics;
    }
    std::printf("%s rows=%llu dim=%llu crc32=%08x\n", name.c_str(), static_cast<unsigned long long>(it->second.rows),
                static_cast<unsigned long long>(it->second.dim), it->second.crc);
  }
  if (reference) {
    auto r = validate_dataset(*reference);
    if (!r.clean()) {
      std::cerr << reference->string() << ": reference dataset is not clean\n";
      report_diagnostics(r);
      return kExitDiagnostics;
    }
    for (const auto& b : r.blocks) {
      auto it = found.find(b.name);
      if (it == found.end()) continue;
      if (it->second.crc != b.crc) {
        std::cerr << it->second.file.string() << ": CRC-32 differs from reference " << b.file.string() << '\n';
        rc = kExitDiagnostics;
      }
    }
    if (rc == 0) std::cout << "crc match: " << reference->string() << '\n';
  }
  return rc;
}

int cmd_synth(const SynthParams& p, const fs::path& out) {
  auto m = write_synthetic(out, p);
  std::cout << "wrote " << (out / "manifest.json").string() << " (" << m.size() << " samples, "
            << p.dims.size() << " blocks, truth in truth.json)\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& f, const fs::path& manifest_path) {
  const auto protocol = resolve_protocol(f);
  const auto manifest = load_manifest(manifest_path);
  const auto blocks = resolve_blocks(manifest, f.blocks);
  std::cerr << "seed " << f.seed << ", method " << to_string(protocol.method) << ", blocks "
            << fused_name(blocks) << '\n';
  const auto report = run_protocol(manifest, blocks, protocol);

  fs::create_directories(f.out);
  auto config = config_json(protocol, protocol.ga);
  config["manifest"] = fs::absolute(manifest_path).lexically_normal().generic_string();
  config["blocks"] = blocks;
  config["threads"] = protocol.threads;
  write_json(f.out / "resolved_config.json", config);
  write_json(f.out / "report.json", report_to_json(report));
  const std::vector<SweepRows> table{SweepRows{report}};
  const auto text = render_table(table);
  write_text(f.out / "table.txt", text);
  write_text(f.out / "table.csv", render_csv(table));
  std::cout << text;
  return 0;
}

int cmd_sweep(const CommonFlags& f, const std::vector<fs::path>& manifests, bool no_ga) {
  const auto protocol = resolve_protocol(f);
  std::vector<SweepRows> datasets;
  auto all = nlohmann::ordered_json::array();
  for (const auto& path : manifests) {
    const auto manifest = load_manifest(path);
    std::cerr << "sweep " << manifest.dataset_name << " (seed " << f.seed << ")\n";
    datasets.push_back(sweep_combinations(manifest, protocol, !no_ga, f.blocks));
    all.push_back({{"dataset", manifest.dataset_name}, {"rows", reports_to_json(datasets.back())}});
  }
  fs::create_directories(f.out);
  auto config = config_json(protocol, protocol.ga);
  config["manifests"] = nlohmann::ordered_json::array();
  for (const auto& p : manifests) config["manifests"].push_back(fs::absolute(p).lexically_normal().generic_string());
  config["ga_row"] = !no_ga;
  config["threads"] = protocol.threads;
  write_json(f.out / "resolved_config.json", config);
  write_json(f.out / "sweep.json", all);
  const auto text = render_table(datasets);
  write_text(f.out / "table.txt", text);
  write_text(f.out / "table.csv", render_csv(datasets));
  std::cout << text;
  return 0;
}

/// Fits on every sample: standardizer, baseline, and for --method ga the GA
/// refinement. Writes model.fmdl (+ trace.csv for GA).
int cmd_train(const CommonFlags& f, const fs::path& manifest_path) {
  auto protocol = resolve_protocol(f);
  const auto manifest = load_manifest(manifest_path);
  const auto blocks = resolve_blocks(manifest, f.blocks);
  const auto features = load_fused(manifest, blocks);
  std::vector<std::size_t> all(features.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto standardizer = fit_standardizer(features, all);
  const auto x = standardizer.apply(features);
  const auto targets = manifest_targets(manifest, protocol.task);
  const bool cls = protocol.task == Task::Classification;

  LinearModel model = cls ? train_svm(x, targets.labels, protocol.train) : train_svr(x, targets.scores, protocol.train);
  fs::create_directories(f.out);
  SavedModel saved{model, standardizer, std::nullopt, {}};
  if (protocol.method == Method::Ga) {
    auto res = cls ? evolve(x, std::span<const int>(targets.labels), model, protocol.ga, protocol.threads)
                   : evolve(x, std::span<const double>(targets.scores), model, protocol.ga, protocol.threads);
    saved = saved_from_chromosome(res.best, protocol.task, standardizer);
    write_trace_csv(f.out / "trace.csv", res.trace);
    std::cerr << "GA best fitness " << res.best_fitness << ", selected " << selected_feature_count(res.best) << " of "
              << res.best.size() << " features\n";
  }
  auto config = config_json(protocol, protocol.ga);
  config["blocks"] = blocks;
  config["manifest"] = fs::absolute(manifest_path).lexically_normal().generic_string();
  saved.config = config;
  save_model(f.out / "model.fmdl", saved);

  const auto preds = predict_all(saved.model, x);
  if (cls) {
    std::cout << "train GCR " << gcr(to_labels(preds), targets.labels) << '\n';
  } else {
    std::cout << "train LCC " << lcc(preds, targets.scores) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Face-photo aesthetics: feature fusion, linear SVM/SVR and GA feature selection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with subcommand sections; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  fs::path manifest;
  std::vector<fs::path> manifests;
  std::optional<fs::path> reference;
  std::vector<std::string> required_blocks{"IQ", "IA", "FA"};
  bool no_ga = false;
  CommonFlags common;
  SynthParams synth;
  fs::path synth_out;

  auto* validate = app.add_subcommand("validate", "check manifest and feature files (counts, dims, CRC)");
  validate->add_option("--manifest", manifest, "dataset manifest")->required();

  auto* check = app.add_subcommand("extract-check", "verify extractor output: canonical blocks, dims, CRCs");
  check->add_option("--manifest", manifest, "dataset manifest")->required();
  check->add_option("--reference", reference, "earlier extraction to compare CRCs against");
  check->add_option("--blocks", required_blocks, "blocks that must be present")->delimiter(',');

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset with a known linear ground truth");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--n", synth.n, "sample count")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  synth_cmd->add_option("--dims", synth.dims, "per-block dims")->delimiter(',');
  synth_cmd->add_option("--names", synth.names, "per-block names")->delimiter(',');
  synth_cmd->add_option("--informative", synth.informative, "features with non-zero true weight");
  synth_cmd->add_option("--noise", synth.noise, "score noise standard deviation");
  synth_cmd->add_option("--bias", synth.bias, "true bias");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--dataset-name", synth.dataset_name, "dataset name in the manifest");
  synth_cmd->add_flag("--labeled", synth.labeled, "store median-split labels in the manifest");

  auto* train = app.add_subcommand("train", "fit on all samples and save the model");
  train->add_option("--manifest", manifest, "dataset manifest")->required();
  train->add_option("--blocks", common.blocks, "blocks to fuse (default: all)")->delimiter(',');
  train->add_option("--method", common.method, "svm | svr | ga")->check(CLI::IsMember({"svm", "svr", "ga"}));
  add_common_flags(train, common, false);

  auto* evaluate = app.add_subcommand("evaluate", "repeated k-fold evaluation of one method and block set");
  evaluate->add_option("--manifest", manifest, "dataset manifest")->required();
  evaluate->add_option("--blocks", common.blocks, "blocks to fuse (default: all)")->delimiter(',');
  evaluate->add_option("--method", common.method, "svm | svr | ga")->check(CLI::IsMember({"svm", "svr", "ga"}));
  add_common_flags(evaluate, common, true);

  auto* sweep = app.add_subcommand("sweep", "evaluate every block combination plus the GA row");
  sweep->add_option("--manifest", manifests, "dataset manifest (repeat for several datasets)")->required();
  sweep->add_option("--blocks", common.blocks, "restrict to these blocks (default: all)")->delimiter(',');
  sweep->add_flag("--no-ga", no_ga, "skip the GA row");
  add_common_flags(sweep, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(manifest);
    if (*check) return cmd_extract_check(manifest, reference, required_blocks);
    if (*synth_cmd) return cmd_synth(synth, synth_out);
    if (*train) return cmd_train(common, manifest);
    if (*evaluate) return cmd_evaluate(common, manifest);
    if (*sweep) return cmd_sweep(common, manifests, no_ga);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidArgument ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

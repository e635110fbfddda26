// Acceptance runner: one line per gated criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "faceaes/faceaes.hpp"
#include "test_support.hpp"

using namespace faceaes;
namespace ft = faceaes::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = seconds_since(t0);
  std::ostringstream line;
  if (time_limit_s > 0 && t >= time_limit_s) {
    o.pass = false;
    o.detail += "; runtime over limit";
  }
  line << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail;
  line.precision(3);
  line << " (" << t << " s";
  if (time_limit_s > 0) line << ", limit " << time_limit_s << " s";
  line << ")";
  std::puts(line.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> len(2, 400);
  std::normal_distribution<double> g;
  std::size_t gcr_bad = 0, lcc_bad = 0, lcc_done = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(len(rng));
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng() % 2 ? 1 : -1;
      b[i] = rng() % 2 ? 1 : -1;
    }
    if (gcr(a, b) != ft::oracle_gcr(a, b)) ++gcr_bad;
  }
  while (lcc_done < 1000) {
    const auto n = static_cast<std::size_t>(len(rng));
    std::vector<double> x(n), y(n);
    const double rho = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng) * 3.0 + 1.0;
      y[i] = rho * x[i] + g(rng);
    }
    const double err = std::abs(lcc(x, y) - ft::oracle_lcc(x, y));
    worst = std::max(worst, err);
    if (!(err <= 1e-12)) ++lcc_bad;
    ++lcc_done;
  }
  return {gcr_bad == 0 && lcc_bad == 0, "gcr mismatches " + std::to_string(gcr_bad) + "/1000, lcc over 1e-12 " +
                                            std::to_string(lcc_bad) + "/1000, worst lcc error " + fmt(worst)};
}

Outcome masked_prediction_equivalence() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim_dist(1, 10240);
  std::normal_distribution<double> g;
  double worst = 0.0;
  std::size_t bad = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t dim = t == 0 ? 10240 : dim_dist(rng);
    Chromosome c{std::vector<std::uint8_t>(dim), std::vector<double>(dim), g(rng)};
    std::vector<float> row(dim);
    std::vector<double> zeroed(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      c.mask[j] = rng() % 2;
      c.weights[j] = g(rng);
      row[j] = static_cast<float>(g(rng));
      zeroed[j] = c.mask[j] ? c.weights[j] : 0.0;
    }
    const double got = chromosome_predict(c, std::span<const float>(row));
    const double dense = predict(LinearModel{zeroed, c.bias, Task::Regression}, std::span<const float>(row));
    const double oracle = ft::oracle_dense_predict(zeroed, c.bias, row);
    const double rel_dense = std::abs(got - dense) / std::max(std::abs(dense), 1e-300);
    const double rel_oracle = std::abs(got - oracle) / std::max(std::abs(oracle), 1e-300);
    worst = std::max({worst, rel_dense, rel_oracle});
    if (!(rel_dense <= 1e-9) || !(rel_oracle <= 1e-9)) ++bad;
  }
  return {bad == 0, "10000 chromosomes, dims 1..10240, worst relative error " + fmt(worst) + ", over 1e-9: " +
                        std::to_string(bad)};
}

Outcome loss_correctness() {
  std::vector<std::string> bad;
  // Hinge: margins 2, 0.5, -1, 0 give 0, 0.5, 2, 1.
  const std::vector<double> p{2.0, 0.5, -1.0, 0.0};
  const std::vector<int> y{1, 1, 1, -1};
  if (hinge_loss(p, y) != 0.875) bad.push_back("hinge mean");
  if (hinge_loss(std::vector<double>{-3.0}, std::vector<int>{-1}) != 0.0) bad.push_back("hinge beyond margin");
  if (hinge_loss(std::vector<double>{1.0}, std::vector<int>{1}) != 0.0) bad.push_back("hinge at margin");
  const std::pair<double, double> sl1[] = {{0.0, 0.0},   {0.5, 0.125}, {-0.5, 0.125}, {1.0, 0.5},
                                           {-1.0, 0.5},  {2.0, 1.5},   {-3.0, 2.5},   {0.25, 0.03125}};
  for (auto [x, want] : sl1) {
    if (smooth_l1(x) != want) bad.push_back("smooth_l1(" + fmt(x) + ")");
  }
  if (smooth_l1_loss(std::vector<double>{3.0, 1.0}, std::vector<double>{1.0, 1.5}) != 0.8125) {
    bad.push_back("smooth_l1_loss mean");
  }
  double worst = 0.0;
  const double h = 1e-4;
  for (double s : {1.0, -1.0}) {
    const double x0 = s;
    // one-sided values
    const double inner = smooth_l1(x0 - s * 1e-12);
    const double outer = smooth_l1(x0 + s * 1e-12);
    worst = std::max({worst, std::abs(inner - 0.5), std::abs(outer - 0.5)});
    // one-sided slopes, second-order differences
    const double in_slope = s * (3 * smooth_l1(x0) - 4 * smooth_l1(x0 - s * h) + smooth_l1(x0 - 2 * s * h)) / (2 * h);
    const double out_slope = s * (-3 * smooth_l1(x0) + 4 * smooth_l1(x0 + s * h) - smooth_l1(x0 + 2 * s * h)) / (2 * h);
    worst = std::max({worst, std::abs(in_slope - s), std::abs(out_slope - s), std::abs(in_slope - out_slope)});
  }
  if (!(worst <= 1e-9)) bad.push_back("knee continuity");
  std::string detail = "hand examples " + std::string(bad.empty() ? "exact" : "failed:");
  for (const auto& b : bad) detail += " " + b;
  return {bad.empty(), detail + ", knee worst deviation " + fmt(worst)};
}

Outcome solver_sanity() {
  auto set = ft::separable_set(200, 20, 5);
  TrainConfig cfg;
  cfg.rng_seed = 1;
  const auto svm = train_svm(set.x, set.y, cfg);
  const double train_gcr = gcr(to_labels(predict_all(svm, set.x)), set.y);

  auto x = ft::random_block("LIN", 300, 20, 9);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> w(20);
  for (auto& v : w) v = g(rng);
  std::vector<double> scores;
  for (std::size_t i = 0; i < x.rows(); ++i) scores.push_back(ft::oracle_dense_predict(w, 2.5, x.row(i)));
  const auto svr = train_svr(x, scores, cfg);
  const double corr = lcc(predict_all(svr, x), scores);
  return {train_gcr == 1.0 && corr >= 0.999,
          "SVM 200x20 separable train GCR " + fmt(train_gcr) + ", SVR noiseless LCC " + fmt(corr)};
}

struct SplitProblem {
  FeatureBlock train_x;
  std::vector<int> train_y;
  FeatureBlock test_x;
  std::vector<int> test_y;
  SynthTruth truth;
};

/// 100 features, 20 informative; median-split labels; standardized on the
/// training rows only.
SplitProblem make_split_problem(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  SynthParams p;
  p.n = n_train + n_test;
  p.names = {"S"};
  p.dims = {100};
  p.informative = 20;
  p.noise = 0.0;
  p.seed = seed;
  auto ds = generate_synthetic(p);
  const auto labels = median_split(ds.manifest);
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < p.n; ++i) (i < n_train ? tr : te).push_back(i);
  const auto st = fit_standardizer(ds.blocks[0], tr);
  SplitProblem out{st.apply(ds.blocks[0].select_rows(tr)), {}, st.apply(ds.blocks[0].select_rows(te)), {}, ds.truth};
  for (auto i : tr) out.train_y.push_back(labels[i]);
  for (auto i : te) out.test_y.push_back(labels[i]);
  return out;
}

Outcome ga_elitism() {
  std::size_t bad_monotone = 0, bad_seed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto prob = make_split_problem(200, 10, seed * 101);
    TrainConfig tc;
    tc.rng_seed = seed;
    const auto svm = train_svm(prob.train_x, prob.train_y, tc);
    auto cfg = GaConfig::for_task(Task::Classification);
    cfg.generations = 60;
    cfg.rng_seed = seed;
    const auto pop = init_population(svm, cfg);
    const Chromosome& seeded = pop.front();
    const bool exact_seed = seeded.weights == svm.weights && seeded.bias == svm.bias &&
                            selected_feature_count(seeded) == seeded.size();
    std::vector<double> y(prob.train_y.begin(), prob.train_y.end());
    const double gen0 = fitness(seeded, prob.train_x, y, Task::Classification);
    const auto res = evolve(prob.train_x, std::span<const int>(prob.train_y), svm, cfg);
    const auto& best = res.trace.best_fitness;
    for (std::size_t g = 1; g < best.size(); ++g) {
      if (best[g] > best[g - 1]) {
        ++bad_monotone;
        break;
      }
    }
    if (!exact_seed || !(res.best_fitness <= gen0) || best.size() != cfg.generations + 1) ++bad_seed;
  }
  return {bad_monotone == 0 && bad_seed == 0,
          "10 seeds, 100-dim, 60 generations: non-monotone traces " + std::to_string(bad_monotone) +
              ", final best above seeded gen-0 fitness " + std::to_string(bad_seed)};
}

Outcome ga_selection_power() {
  double recall_sum = 0.0, gcr_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto prob = make_split_problem(1000, 1000, seed);
    TrainConfig tc;
    tc.rng_seed = seed;
    const auto svm = train_svm(prob.train_x, prob.train_y, tc);
    auto cfg = GaConfig::for_task(Task::Classification);  // pop 100, 200 generations, 0.80, 7%
    cfg.rng_seed = seed;
    const auto res = evolve(prob.train_x, std::span<const int>(prob.train_y), svm, cfg);
    std::size_t hits = 0;
    for (auto j : prob.truth.informative) hits += res.best.mask[j] ? 1 : 0;
    const double recall = static_cast<double>(hits) / static_cast<double>(prob.truth.informative.size());
    const double held_out =
        gcr(to_labels(predict_all(to_linear_model(res.best, Task::Classification), prob.test_x)), prob.test_y);
    recall_sum += recall;
    gcr_sum += held_out;
    per_seed += " [" + fmt(recall) + "/" + fmt(held_out) + "/" + std::to_string(selected_feature_count(res.best)) + "]";
  }
  const double recall = recall_sum / 5.0;
  const double held = gcr_sum / 5.0;
  return {recall >= 0.8 && held >= 0.90, "5 seeds, mean recall " + fmt(recall) + ", mean held-out GCR " + fmt(held) +
                                             "; per seed recall/GCR/selected" + per_seed};
}

Outcome protocol_audit() {
  const std::size_t n = 103;
  auto x = ft::random_block("X", n, 6, 4);
  ProtocolTargets t;
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back(x.row(i)[0] + 0.3 * x.row(i)[1] >= 0 ? 1 : -1);
  std::vector<std::vector<std::size_t>> tested(10, std::vector<std::size_t>(n, 0));
  std::size_t calls = 0, leaks = 0, size_spread_bad = 0, partition_bad = 0;
  std::vector<std::vector<std::size_t>> fold_sizes(10);
  ProtocolConfig cfg;
  cfg.master_seed = 12;
  cfg.train.epochs = 5;
  cfg.threads = 3;
  cfg.audit = [&](const FoldAudit& a) {
    ++calls;
    for (auto i : a.test_indices) ++tested[a.round][i];
    fold_sizes[a.round].push_back(a.test_indices.size());
    std::vector<std::uint8_t> in_test(n, 0);
    for (auto i : a.test_indices) in_test[i] = 1;
    for (auto i : a.standardizer_rows) leaks += in_test[i];
    if (a.standardizer_rows != a.train_indices) ++leaks;
    if (a.train_indices.size() + a.test_indices.size() != n) ++partition_bad;
  };
  run_protocol(x, t, cfg);
  std::size_t once_bad = 0, total_bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t total = 0;
    for (std::size_t r = 0; r < 10; ++r) {
      once_bad += tested[r][i] != 1;
      total += tested[r][i];
    }
    total_bad += total != 10;
  }
  for (const auto& sizes : fold_sizes) {
    if (sizes.empty() || *std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) > 1) {
      ++size_spread_bad;
    }
  }
  const bool ok = calls == 100 && once_bad == 0 && total_bad == 0 && size_spread_bad == 0 && leaks == 0 &&
                  partition_bad == 0;
  return {ok, "n=103, 10x10: fold audits " + std::to_string(calls) + ", samples not tested once per round " +
                  std::to_string(once_bad) + ", not tested 10 times " + std::to_string(total_bad) +
                  ", rounds with fold-size spread > 1 " + std::to_string(size_spread_bad) +
                  ", standardizer leaks " + std::to_string(leaks)};
}

Outcome determinism() {
  auto x = ft::random_block("X", 90, 12, 8);
  ProtocolTargets t;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    t.scores.push_back(2.0 * x.row(i)[0] - x.row(i)[3] + 0.1 * x.row(i)[5]);
    t.labels.push_back(t.scores.back() >= 0 ? 1 : -1);
  }
  std::string detail;
  bool ok = true;
  for (Task task : {Task::Classification, Task::Regression}) {
    for (Method method : {baseline_method(task), Method::Ga}) {
      ProtocolConfig cfg;
      cfg.task = task;
      cfg.method = method;
      cfg.master_seed = 99;
      cfg.rounds = 3;
      cfg.folds = 5;
      cfg.train.epochs = 10;
      cfg.ga = GaConfig::for_task(task);
      cfg.ga.population_size = 12;
      cfg.ga.generations = 5;
      cfg.threads = 1;
      const auto one = report_to_json(run_protocol(x, t, cfg, "det")).dump();
      cfg.threads = 4;
      const auto many = report_to_json(run_protocol(x, t, cfg, "det")).dump();
      const bool same = one == many;
      ok = ok && same;
      detail += std::string(to_string(task)) + "/" + std::string(to_string(method)) + (same ? " identical; " : " DIFFER; ");
    }
  }
  return {ok, detail + "1 vs 4 threads"};
}

Outcome sweep_shape() {
  ft::TempDir dir;
  SynthParams p;
  p.n = 30;
  p.names = {"IQ", "IA", "FA"};
  p.dims = {4096, 4096, 2048};
  p.informative = 40;
  p.seed = 2;
  p.dataset_name = "canonical";
  const auto manifest = write_synthetic(dir.path(), p);
  ProtocolConfig cfg;
  cfg.task = Task::Classification;
  cfg.rounds = 1;
  cfg.folds = 3;
  cfg.master_seed = 5;
  cfg.train.epochs = 3;
  cfg.ga.population_size = 6;
  cfg.ga.generations = 2;
  const auto rows = sweep_combinations(load_manifest(dir / "manifest.json"), cfg);
  const std::vector<std::size_t> want{4096, 4096, 2048, 6144, 8192, 6144, 10240, 10240};
  std::string got;
  bool ok = rows.size() == 8;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    got += (i ? "/" : "") + std::to_string(rows[i].n_features);
    if (i < want.size() && rows[i].n_features != want[i]) ok = false;
    if (i < 7 && rows[i].is_ga()) ok = false;
  }
  if (ok) {
    const auto& ga = rows.back();
    ok = ga.is_ga() && ga.mean_selected > 0.0 && ga.mean_selected <= 10240.0;
    got += " + GA popcount " + fmt(ga.mean_selected);
  }
  const std::vector<SweepRows> table{rows};
  std::istringstream lines(render_table(table));
  std::size_t line_count = 0;
  for (std::string l; std::getline(lines, l);) ++line_count;
  ok = ok && line_count == 10;
  return {ok, std::to_string(rows.size()) + " rows, #features " + got};
}

}  // namespace

int main() {
  criterion("metric oracles (gcr exact, lcc within 1e-12)", 5.0, metric_oracles);
  criterion("masked prediction equals dense prediction on mask-zeroed weights", 30.0, masked_prediction_equivalence);
  criterion("hinge and Smooth-L1 correctness", 0.0, loss_correctness);
  criterion("SVM/SVR sanity", 5.0, solver_sanity);
  criterion("GA elitism", 0.0, ga_elitism);
  criterion("GA selection power", 120.0, ga_selection_power);
  criterion("protocol audit", 0.0, protocol_audit);
  criterion("determinism across thread counts", 0.0, determinism);
  criterion("sweep shape with canonical blocks", 0.0, sweep_shape);
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}

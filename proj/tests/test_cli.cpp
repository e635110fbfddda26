#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "faceaes/faceaes.hpp"
#include "test_support.hpp"

using namespace faceaes;
using faceaes::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run_cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + FACEAES_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out), slurp(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

/// 250 scored samples with a single 2048-d FA block.
fs::path write_single_block_dataset(const TempDir& dir, std::size_t block_rows) {
  DatasetManifest m;
  m.dataset_name = "faces250";
  m.score_range = {1.0, 10.0};
  for (std::size_t i = 0; i < 250; ++i) m.samples.push_back({"img" + std::to_string(i), 1.0 + (i % 90) / 10.0, {}});
  m.block_refs["FA"] = "FA.fvec";
  write_block(dir / "FA.fvec", faceaes::testing::random_block("FA", block_rows, 2048, 11));
  save_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

}  // namespace

TEST(Cli, ValidateAcceptsWellFormedDataset) {
  TempDir dir;
  auto r = run_cli(dir, "validate --manifest " + q(write_single_block_dataset(dir, 250)));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("FA rows=250 dim=2048"), std::string::npos) << r.out;
  EXPECT_TRUE(r.err.empty()) << r.err;
}

TEST(Cli, ValidateReportsRowCountMismatch) {
  TempDir dir;
  auto r = run_cli(dir, "validate --manifest " + q(write_single_block_dataset(dir, 249)));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("row-count-mismatch"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("FA.fvec"), std::string::npos) << r.err;
}

TEST(Cli, ValidateReportsChecksumFailure) {
  TempDir dir;
  auto manifest = write_single_block_dataset(dir, 250);
  auto bytes = detail::read_file(dir / "FA.fvec");
  bytes[bytes.size() / 2] ^= 0x10;
  detail::write_file(dir / "FA.fvec", bytes);
  auto r = run_cli(dir, "validate --manifest " + q(manifest));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
}

TEST(Cli, ValidateReportsBadSampleRows) {
  TempDir dir;
  auto manifest = write_single_block_dataset(dir, 250);
  auto j = nlohmann::json::parse(slurp(manifest));
  j["samples"][3]["score"] = 42.0;
  j["samples"][7]["id"] = "img0";
  std::ofstream(manifest) << j.dump();
  auto r = run_cli(dir, "validate --manifest " + q(manifest));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(":row 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(":row 7"), std::string::npos) << r.err;
}

TEST(Cli, SynthIsDeterministicAndRejectsBadParams) {
  TempDir dir;
  const std::string common = " --n 60 --dims 4,3 --names SA,SB --informative 3 --seed 5";
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "a") + common).code, 0);
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "b") + common).code, 0);
  for (const char* f : {"manifest.json", "truth.json", "SA.fvec", "SB.fvec"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "c") + " --n 60 --dims 4,3 --names SA,SB --informative 3 --seed 6").code, 0);
  EXPECT_NE(slurp(dir / "a" / "SA.fvec"), slurp(dir / "c" / "SA.fvec"));

  EXPECT_NE(run_cli(dir, "synth --out " + q(dir / "d") + " --dims 4,3 --names SA").code, 0);
  EXPECT_NE(run_cli(dir, "synth --out " + q(dir / "d") + " --dims 4 --names SA --informative 9").code, 0);
  EXPECT_NE(run_cli(dir, "synth --out " + q(dir / "d") + " --n 1").code, 0);
}

TEST(Cli, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(run_cli(dir, "").code, 2);
  EXPECT_EQ(run_cli(dir, "evaluate --manifest x.json --task classification --not-a-flag").code, 2);
  EXPECT_EQ(run_cli(dir, "evaluate --manifest x.json --task ranking").code, 2);
  EXPECT_EQ(run_cli(dir, "evaluate --manifest x.json").code, 2);
}

TEST(Cli, MissingBlockFileIsNamed) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "d") + " --n 40 --seed 1").code, 0);
  fs::remove(dir / "d" / "SB.fvec");
  auto r = run_cli(dir, "evaluate --manifest " + q(dir / "d" / "manifest.json") +
                            " --task classification --rounds 1 --folds 2 --out " + q(dir / "o"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("block 'SB'"), std::string::npos) << r.err;
  auto v = run_cli(dir, "validate --manifest " + q(dir / "d" / "manifest.json"));
  EXPECT_EQ(v.code, 1);
  EXPECT_NE(v.err.find("block 'SB'"), std::string::npos) << v.err;
}

TEST(Cli, EvaluateGaWritesReportAndIsIdempotent) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "d") + " --n 80 --seed 2").code, 0);
  const std::string args = "evaluate --manifest " + q(dir / "d" / "manifest.json") +
                           " --task classification --method ga --rounds 2 --folds 3 --population 8"
                           " --generations 4 --epochs 10 --seed 17 --out ";
  auto r1 = run_cli(dir, args + q(dir / "o1"));
  ASSERT_EQ(r1.code, 0) << r1.err;
  auto r2 = run_cli(dir, args + q(dir / "o2") + " --threads 3");
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(slurp(dir / "o1" / "report.json"), slurp(dir / "o2" / "report.json"));
  EXPECT_EQ(slurp(dir / "o1" / "table.csv"), slurp(dir / "o2" / "table.csv"));
  auto r3 = run_cli(dir, args + q(dir / "o1"));
  ASSERT_EQ(r3.code, 0);
  EXPECT_EQ(r1.out, r3.out);

  auto report = nlohmann::json::parse(slurp(dir / "o1" / "report.json"));
  EXPECT_EQ(report["method"], "ga");
  EXPECT_EQ(report["master_seed"], 17);
  auto config = nlohmann::json::parse(slurp(dir / "o1" / "resolved_config.json"));
  EXPECT_EQ(config["ga"]["population_size"], 8);
  EXPECT_EQ(config["ga"]["generations"], 4);
  EXPECT_EQ(config["svm"]["epochs"], 10);
  EXPECT_EQ(config["master_seed"], 17);
  EXPECT_NE(r1.err.find("seed 17"), std::string::npos);
}

TEST(Cli, ConfigFileBelowFlags) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "d") + " --n 60 --seed 2").code, 0);
  std::ofstream(dir / "cfg.toml") << "[evaluate]\nrounds=1\nfolds=2\nseed=9\nepochs=7\n";
  auto r = run_cli(dir, "--config " + q(dir / "cfg.toml") + " evaluate --manifest " +
                            q(dir / "d" / "manifest.json") + " --task regression --seed 4 --out " + q(dir / "o"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto config = nlohmann::json::parse(slurp(dir / "o" / "resolved_config.json"));
  EXPECT_EQ(config["master_seed"], 4);
  EXPECT_EQ(config["rounds"], 1);
  EXPECT_EQ(config["folds"], 2);
  EXPECT_EQ(config["svm"]["epochs"], 7);
  EXPECT_EQ(config["method"], "svr");

  std::ofstream(dir / "bad.toml") << "[evaluate]\nrounds=1\nunknown_key=3\n";
  auto bad = run_cli(dir, "--config " + q(dir / "bad.toml") + " evaluate --manifest " +
                              q(dir / "d" / "manifest.json") + " --task regression --out " + q(dir / "o2"));
  EXPECT_EQ(bad.code, 2);
}

TEST(Cli, SweepProducesEightRowTable) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "d") + " --n 60 --dims 6,5,4 --seed 3").code, 0);
  auto r = run_cli(dir, "sweep --manifest " + q(dir / "d" / "manifest.json") +
                            " --task classification --rounds 1 --folds 3 --population 6 --generations 2"
                            " --epochs 5 --out " + q(dir / "o"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(dir / "o" / "table.txt"));
  std::vector<std::string> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(l);
  ASSERT_EQ(rows.size(), 10u);  // header, rule, 8 rows
  EXPECT_NE(rows[0].find("GCR (%) synthetic"), std::string::npos);
  EXPECT_NE(rows[9].find(" x "), std::string::npos);
  auto sweep = nlohmann::json::parse(slurp(dir / "o" / "sweep.json"));
  ASSERT_EQ(sweep.size(), 1u);
  ASSERT_EQ(sweep[0]["rows"].size(), 8u);
  const std::vector<int> dims{6, 5, 4, 10, 11, 9, 15};
  for (std::size_t i = 0; i < dims.size(); ++i) EXPECT_EQ(sweep[0]["rows"][i]["n_features"], dims[i]) << i;
  EXPECT_EQ(sweep[0]["rows"][7]["method"], "ga");

  auto no_ga = run_cli(dir, "sweep --manifest " + q(dir / "d" / "manifest.json") +
                                " --task regression --no-ga --rounds 1 --folds 3 --epochs 5 --out " + q(dir / "o2"));
  ASSERT_EQ(no_ga.code, 0) << no_ga.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "o2" / "sweep.json"))[0]["rows"].size(), 7u);
}

TEST(Cli, TrainSavesModelAndTrace) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --out " + q(dir / "d") + " --n 60 --dims 5,4 --names SA,SB --informative 3 --seed 3").code, 0);
  auto r = run_cli(dir, "train --manifest " + q(dir / "d" / "manifest.json") +
                            " --task classification --method ga --population 6 --generations 3 --out " + q(dir / "o"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = load_model(dir / "o" / "model.fmdl");
  EXPECT_EQ(m.model.weights.size(), 9u);
  ASSERT_TRUE(m.mask.has_value());
  ASSERT_TRUE(m.standardizer.has_value());
  std::istringstream trace(slurp(dir / "o" / "trace.csv"));
  int lines = 0;
  for (std::string l; std::getline(trace, l);) ++lines;
  EXPECT_EQ(lines, 1 + 4);
}

TEST(Cli, ExtractCheckCanonicalBlocks) {
  TempDir dir;
  SynthParams p;
  p.n = 12;
  p.names = {"IQ", "IA", "FA"};
  p.dims = {4096, 4096, 2048};
  p.informative = 5;
  p.seed = 8;
  write_synthetic(dir / "a", p);
  write_synthetic(dir / "b", p);
  auto r = run_cli(dir, "extract-check --manifest " + q(dir / "a" / "manifest.json") + " --reference " +
                            q(dir / "b" / "manifest.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("IQ rows=12 dim=4096 crc32="), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("crc match"), std::string::npos);

  p.seed = 9;
  write_synthetic(dir / "c", p);
  auto diff = run_cli(dir, "extract-check --manifest " + q(dir / "a" / "manifest.json") + " --reference " +
                               q(dir / "c" / "manifest.json"));
  EXPECT_EQ(diff.code, 1);
  EXPECT_NE(diff.err.find("CRC-32 differs"), std::string::npos);

  auto missing = run_cli(dir, "extract-check --manifest " + q(dir / "a" / "manifest.json") + " --blocks IQ,IA,FA,XX");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("'XX'"), std::string::npos);

  // Non-canonical width for a canonical name.
  SynthParams bad = p;
  bad.dims = {4096, 4096, 100};
  EXPECT_THROW(write_synthetic(dir / "e", bad), Error);
}

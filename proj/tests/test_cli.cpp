// tests/test_cli.cpp

// Copyright 2026 The scenesep Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end drive of the command-line tool as a subprocess: synth
// determinism, the train dependency chain with freezing, eval reports, and
// transition analysis. One shared ordered scenario keeps the cost of the
// repeated tiny training runs down.

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "scenesep/checkpoint.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string cap =
      (fs::temp_directory_path() / ("scenesep_cli_cap_" + std::to_string(counter++))).string();
  const std::string cmd = std::string(SCENESEP_CLI_PATH) + " " + args + " > " + cap + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.output = scenesep_test::slurp(cap);
  fs::remove(cap);
  return res;
}

// Relative path -> content for every regular file except the run config,
// which embeds the output directory itself.
std::map<std::string, std::string> dir_contents(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).string();
    if (rel.rfind("run_", 0) == 0) continue;
    out[rel] = scenesep_test::slurp(entry.path().string());
  }
  return out;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Shared scratch space for the ordered scenario below.
scenesep_test::TempDir& root() {
  static scenesep_test::TempDir dir;
  return dir;
}

std::string data_dir() { return root().file("data"); }
std::string ckpt_dir() { return root().file("ckpt"); }
std::string report_dir() { return root().file("report"); }

const std::string kSynthArgs = " --n 4 --seed 7 --duration 0.08 ";

}  // namespace

TEST_CASE("cli rejects bad usage with exit code 2") {
  CHECK(run_cli("synth --bogus-flag 3").code == 2);
  CHECK(run_cli("train sorter --out x").code == 2);  // not a known target
  CHECK(run_cli("").code == 2);                      // subcommand required
  CHECK(run_cli("analyze only_one_trace").code == 2);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("synth is reproducible and seed-sensitive") {
  const std::string d1 = data_dir();
  const std::string d2 = root().file("data_again");
  const std::string d3 = root().file("data_other_seed");
  REQUIRE(run_cli("synth --out " + d1 + kSynthArgs).code == 0);
  REQUIRE(run_cli("synth --out " + d2 + kSynthArgs).code == 0);
  REQUIRE(run_cli("synth --out " + d3 + " --n 4 --seed 8 --duration 0.08").code == 0);

  const auto c1 = dir_contents(d1);
  CHECK(c1 == dir_contents(d2));
  CHECK(c1 != dir_contents(d3));
  CHECK(c1.count("manifest.jsonl") == 1);
  CHECK(line_count(c1.at("manifest.jsonl")) == 4);

  const std::string run_cfg = scenesep_test::slurp(d1 + "/run_synth.cfg");
  CHECK(run_cfg.find("command = synth") != std::string::npos);
  CHECK(run_cfg.find("seed = 7") != std::string::npos);

  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("train enforces its dependency chain") {
  const std::string base = " --data " + data_dir() + " --out " + ckpt_dir() + " --steps 2 ";
  CliResult res = run_cli("train tse" + base);
  CHECK(res.code == 1);
  CHECK(res.output.find("missing dependency") != std::string::npos);
  CHECK(res.output.find("train 'uss' first") != std::string::npos);
  CHECK(run_cli("train sce" + base).code == 1);
  CHECK_FALSE(fs::exists(ckpt_dir() + "/tse.ckpt"));
}

TEST_CASE("train builds every component and freezes prerequisites") {
  const std::string base = " --data " + data_dir() + " --out " + ckpt_dir() + " --steps 2 ";
  REQUIRE(run_cli("train uss" + base).code == 0);
  REQUIRE(fs::exists(ckpt_dir() + "/uss.ckpt"));
  const std::string uss_hash = scenesep::file_hash(ckpt_dir() + "/uss.ckpt");

  // The loss log carries a header plus one row per step.
  const std::string csv = scenesep_test::slurp(ckpt_dir() + "/train_uss.csv");
  CHECK(line_count(csv) == 3);
  CHECK(csv.rfind("step,loss\n0,", 0) == 0);

  REQUIRE(run_cli("train tse" + base).code == 0);
  REQUIRE(run_cli("train dpc-uss" + base).code == 0);
  REQUIRE(run_cli("train dpc-tse" + base).code == 0);
  REQUIRE(run_cli("train sce" + base + "--kind none").code == 0);
  REQUIRE(run_cli("train sce" + base + "--kind clap-text").code == 0);
  for (const char* name : {"tse", "dpc_uss", "dpc_tse", "sce_none", "sce_clap-text"})
    CHECK(fs::exists(ckpt_dir() + "/" + std::string(name) + ".ckpt"));

  // Downstream stages must never have touched the frozen separator weights.
  CHECK(scenesep::file_hash(ckpt_dir() + "/uss.ckpt") == uss_hash);

  // Retraining from the same seed and data reproduces the bytes exactly.
  REQUIRE(run_cli("train uss" + base).code == 0);
  CHECK(scenesep::file_hash(ckpt_dir() + "/uss.ckpt") == uss_hash);
}

TEST_CASE("eval writes matching text and json reports") {
  CliResult missing = run_cli("eval --data " + data_dir() + " --ckpt " + ckpt_dir() +
                              " --out " + report_dir() + " --kinds m2d,none --take 1");
  CHECK(missing.code == 1);  // sce_m2d.ckpt was never trained
  CHECK(missing.output.find("sce_m2d") != std::string::npos);

  const std::string cmd = "eval --data " + data_dir() + " --ckpt " + ckpt_dir() + " --out " +
                          report_dir() + " --kinds none,clap-text --take 3";
  CliResult res = run_cli(cmd);
  REQUIRE(res.code == 0);
  CHECK(res.output.rfind("kind", 0) == 0);  // table header leads the output

  const std::string text = scenesep_test::slurp(report_dir() + "/report.txt");
  const nlohmann::json report =
      nlohmann::json::parse(scenesep_test::slurp(report_dir() + "/report.json"));
  CHECK(report.at("n_scenes").get<int>() == 3);
  REQUIRE(report.at("kinds").size() == 2);
  for (const char* kind : {"none", "clap-text"}) {
    const nlohmann::json& jk = report.at("kinds").at(kind);
    REQUIRE(jk.at("stages").size() == 3);
    CHECK(jk.at("failures").empty());
    REQUIRE(jk.at("transitions").size() == 2);
    for (int s = 0; s < 3; ++s) {
      const nlohmann::json& js = jk.at("stages").at(s);
      CHECK(js.at("stage").get<int>() == s + 1);
      // Every figure printed in the table is the same number the JSON holds.
      char cell[32];
      std::snprintf(cell, sizeof(cell), "%.3f", js.at("ca_sdri").get<double>());
      CHECK(text.find(cell) != std::string::npos);
      std::snprintf(cell, sizeof(cell), "%.3f", js.at("mean_snri").get<double>());
      CHECK(text.find(cell) != std::string::npos);
    }
    double ratio_total = 0.0;
    for (const char* t : {"W2C", "C2C", "C2W", "W2W"})
      ratio_total += jk.at("transitions").at(0).at(t).at("ratio_pct").get<double>();
    CHECK(ratio_total == doctest::Approx(100.0));
  }
  for (const char* kind : {"none", "clap-text"}) {
    const std::string traces = report_dir() + "/traces_" + kind + ".jsonl";
    REQUIRE(fs::exists(traces));
    CHECK(line_count(scenesep_test::slurp(traces)) == 3);
  }

  // A frozen pipeline re-evaluates to byte-identical reports and traces.
  const std::string rep2 = root().file("report_again");
  REQUIRE(run_cli("eval --data " + data_dir() + " --ckpt " + ckpt_dir() + " --out " + rep2 +
                  " --kinds none,clap-text --take 3")
              .code == 0);
  CHECK(scenesep_test::slurp(report_dir() + "/report.json") ==
        scenesep_test::slurp(rep2 + "/report.json"));
  CHECK(scenesep_test::slurp(report_dir() + "/traces_none.jsonl") ==
        scenesep_test::slurp(rep2 + "/traces_none.jsonl"));
  fs::remove_all(rep2);
}

TEST_CASE("analyze reproduces the eval transition report") {
  const std::string traces = report_dir() + "/traces_none.jsonl";
  REQUIRE(fs::exists(traces));

  const std::string json_out = root().file("analysis.json");
  CliResult res = run_cli("analyze " + traces + " " + traces +
                          " --stage-a 1 --stage-b 2 --json " + json_out);
  REQUIRE(res.code == 0);
  const nlohmann::json j = nlohmann::json::parse(scenesep_test::slurp(json_out));

  // Against the eval report's own stage 1 -> 2 transitions: same numbers.
  const nlohmann::json report =
      nlohmann::json::parse(scenesep_test::slurp(report_dir() + "/report.json"));
  const nlohmann::json& want = report.at("kinds").at("none").at("transitions").at(0);
  for (const char* t : {"W2C", "C2C", "C2W", "W2W"}) {
    CHECK(j.at(t).at("count") == want.at(t).at("count"));
    CHECK(j.at(t).at("ratio_pct").get<double>() ==
          doctest::Approx(want.at(t).at("ratio_pct").get<double>()));
  }

  // A stage compared against itself has no W2C/C2W mass.
  CliResult self = run_cli("analyze " + traces + " " + traces +
                           " --stage-a 2 --stage-b 2 --json " + json_out);
  REQUIRE(self.code == 0);
  const nlohmann::json js = nlohmann::json::parse(scenesep_test::slurp(json_out));
  CHECK(js.at("W2C").at("count").get<int>() == 0);
  CHECK(js.at("C2W").at("count").get<int>() == 0);
  CHECK(run_cli("analyze " + traces + " " + traces + " --stage-a 4").code == 2);
  CHECK(run_cli("analyze missing.jsonl " + traces).code == 1);
}

TEST_CASE("train rejects misaligned scene lengths") {
  const std::string bad = root().file("data_bad");
  REQUIRE(run_cli("synth --out " + bad + " --n 1 --seed 3 --duration 0.083").code == 0);
  CliResult res = run_cli("train uss --data " + bad + " --out " + root().file("ck_bad") +
                          " --steps 1");
  CHECK(res.code == 1);
  CHECK(res.output.find("hop-aligned") != std::string::npos);
  fs::remove_all(bad);
}

// tools/main.cpp

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

// Command-line front end: synth / train / eval / analyze.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "scenesep/checkpoint.hpp"
#include "scenesep/config.hpp"
#include "scenesep/dpc.hpp"
#include "scenesep/embedders.hpp"
#include "scenesep/metrics.hpp"
#include "scenesep/pipeline.hpp"
#include "scenesep/sce.hpp"
#include "scenesep/separator.hpp"
#include "scenesep/synth.hpp"
#include "scenesep/trainer.hpp"

namespace {

using scenesep::Archive;
using scenesep::Config;
using scenesep::DpcModel;
using scenesep::EmbeddingKind;
using scenesep::SceModel;
using scenesep::SceneRecord;
using scenesep::TrainConfig;
using scenesep::TrainStats;
using scenesep::TransitionReport;
using scenesep::TseModel;
using scenesep::UssModel;

// Model construction seeds are derived from the run seed so that every
// component gets an independent stream.
constexpr std::uint64_t kUssSeedOffset = 1;
constexpr std::uint64_t kTseSeedOffset = 2;
constexpr std::uint64_t kDpcUssSeedOffset = 3;
constexpr std::uint64_t kDpcTseSeedOffset = 4;
constexpr std::uint64_t kSceSeedOffset = 5;

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Round-trippable double formatting for config logs.
std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

// Every run serializes its resolved configuration next to its outputs so a
// run is reproducible from the log alone.
void write_run_config(const Config& resolved, const std::string& path) {
  write_text_file(path, resolved.serialize());
}

std::vector<SceneRecord> load_scenes(const std::string& dir, std::int64_t skip,
                                     std::int64_t take) {
  std::vector<SceneRecord> scenes = scenesep::load_dataset(dir);
  if (skip > 0) {
    if (static_cast<std::size_t>(skip) >= scenes.size()) {
      scenes.clear();
    } else {
      scenes.erase(scenes.begin(), scenes.begin() + skip);
    }
  }
  if (take >= 0 && static_cast<std::size_t>(take) < scenes.size()) {
    scenes.resize(static_cast<std::size_t>(take));
  }
  if (scenes.empty()) throw std::runtime_error("no scenes selected from " + dir);
  return scenes;
}

// The separator resynthesizes (frames-1)*hop + window samples, so scene
// lengths must land on a whole STFT frame for losses and SDR to line up.
void check_hop_alignment(const std::vector<SceneRecord>& scenes) {
  const scenesep::tg::StftConfig stft;
  for (const SceneRecord& rec : scenes) {
    const std::int64_t n = rec.spec.samples();
    if (n < stft.window || (n - stft.window) % stft.hop != 0) {
      throw std::runtime_error(
          "scene length " + std::to_string(n) + " is not hop-aligned; pick a duration whose " +
          "sample count is " + std::to_string(stft.window) + " plus a multiple of " +
          std::to_string(stft.hop));
    }
  }
}

std::string ckpt_file(const std::string& dir, const std::string& stem) {
  return dir + "/" + stem + ".ckpt";
}

void require_checkpoint(const std::string& target, const std::string& path,
                        const std::string& dep) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("train " + target + ": missing dependency " + path + "; train '" +
                             dep + "' first");
  }
}

UssModel load_uss(const std::string& dir, std::uint64_t seed) {
  UssModel model(seed + kUssSeedOffset);
  Archive a = Archive::load(ckpt_file(dir, "uss"));
  model.check_meta(a.meta);
  model.params().load_from(a);
  return model;
}

TseModel load_tse(const std::string& dir, std::uint64_t seed) {
  TseModel model(seed + kTseSeedOffset);
  Archive a = Archive::load(ckpt_file(dir, "tse"));
  model.check_meta(a.meta);
  model.params().load_from(a);
  return model;
}

DpcModel load_dpc(const std::string& dir, const std::string& stem, std::uint64_t seed,
                  std::uint64_t offset) {
  DpcModel model;
  model.init(seed + offset);
  Archive a = Archive::load(ckpt_file(dir, stem));
  model.check_meta(a.meta);
  model.params().load_from(a);
  return model;
}

SceModel load_sce(const std::string& dir, EmbeddingKind kind, std::uint64_t seed) {
  SceModel model;
  model.init(seed + kSceSeedOffset);
  Archive a = Archive::load(ckpt_file(dir, std::string("sce_") + scenesep::kind_name(kind)));
  model.check_meta(a.meta);
  model.params().load_from(a);
  return model;
}

void save_model(const scenesep::ParamRegistry& params,
                std::map<std::string, std::string> meta, const Config& run,
                const std::string& path) {
  Archive a = params.to_archive();
  // Training provenance rides along; check_meta only requires model keys.
  meta["train_config"] = run.serialize();
  a.meta = std::move(meta);
  a.save(path);
}

// --------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::string config;
  std::int64_t n = 8;
  std::uint64_t seed = 0;
  double duration = 2.0;
};

int cmd_synth(const SynthArgs& args, const Config& cfg) {
  const std::int64_t n = cfg.get_int("n", args.n);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const double duration = cfg.get_double("duration", 2.0);
  const std::string out = cfg.get("out", args.out);
  if (out.empty()) throw std::runtime_error("synth: --out is required");
  if (n < 1) throw std::runtime_error("synth: n must be >= 1");

  Config resolved;
  resolved.set("command", "synth");
  resolved.set("n", std::to_string(n));
  resolved.set("seed", std::to_string(seed));
  resolved.set("duration", fmt_full(duration));
  resolved.set("out", out);

  scenesep::DatasetWriter writer(out);
  for (std::int64_t i = 0; i < n; ++i) {
    SceneRecord rec;
    rec.spec = scenesep::random_spec(seed + static_cast<std::uint64_t>(i));
    rec.spec.duration = duration;
    rec.scene = scenesep::synth_scene(rec.spec);
    writer.add(rec);
  }
  writer.finish();
  write_run_config(resolved, out + "/run_synth.cfg");
  std::cout << "synth: wrote " << n << " scenes to " << out << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string target;
  std::string data;
  std::string out;
  std::string kind = "none";
  std::string config;
  std::int64_t steps = 100;
  double lr = -1.0;  // negative: use the per-target default
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  std::int64_t skip = 0;
  std::int64_t take = -1;
};

double default_lr(const std::string& target) {
  if (target == "dpc-uss" || target == "dpc-tse") return 4e-4;
  if (target == "sce") return 4e-6;
  return 1e-3;  // separator bootstrap
}

int cmd_train(const TrainArgs& args, const Config& cfg) {
  const std::string& target = args.target;
  const std::string data = cfg.has("data") ? cfg.get("data", "") : scenesep::data_root(cfg);
  const std::string out = cfg.get("out", args.out);
  const std::string kind_str = cfg.get("kind", args.kind);
  const std::int64_t steps = cfg.get_int("steps", args.steps);
  const double lr = cfg.get_double("lr", args.lr < 0 ? default_lr(target) : args.lr);
  const double weight_decay = cfg.get_double("weight_decay", args.weight_decay);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::int64_t skip = cfg.get_int("skip", args.skip);
  const std::int64_t take = cfg.get_int("take", args.take);
  if (out.empty()) throw std::runtime_error("train: --out is required");

  std::filesystem::create_directories(out);
  std::string run_stem = "train_" + target;
  if (target == "sce") run_stem += "_" + kind_str;

  Config resolved;
  resolved.set("command", "train");
  resolved.set("target", target);
  resolved.set("data", data);
  resolved.set("out", out);
  resolved.set("steps", std::to_string(steps));
  resolved.set("lr", fmt_full(lr));
  resolved.set("weight_decay", fmt_full(weight_decay));
  resolved.set("seed", std::to_string(seed));
  resolved.set("skip", std::to_string(skip));
  resolved.set("take", std::to_string(take));
  if (target == "sce") resolved.set("kind", kind_str);

  TrainConfig tc;
  tc.steps = steps;
  tc.lr = lr;
  tc.weight_decay = weight_decay;
  tc.loss_csv = out + "/" + run_stem + ".csv";

  const std::vector<SceneRecord> scenes = load_scenes(data, skip, take);
  check_hop_alignment(scenes);

  TrainStats stats;
  if (target == "uss") {
    UssModel uss(seed + kUssSeedOffset);
    stats = scenesep::train_uss(uss, scenes, tc);
    save_model(uss.params(), uss.meta(), resolved, ckpt_file(out, "uss"));
  } else if (target == "tse") {
    require_checkpoint(target, ckpt_file(out, "uss"), "uss");
    UssModel uss = load_uss(out, seed);
    TseModel tse(seed + kTseSeedOffset);
    stats = scenesep::train_tse(tse, uss, scenes, tc);
    save_model(tse.params(), tse.meta(), resolved, ckpt_file(out, "tse"));
  } else if (target == "dpc-uss") {
    require_checkpoint(target, ckpt_file(out, "uss"), "uss");
    UssModel uss = load_uss(out, seed);
    DpcModel dpc;
    dpc.init(seed + kDpcUssSeedOffset);
    stats = scenesep::train_dpc(dpc, uss, nullptr, scenes, tc);
    save_model(dpc.params(), dpc.meta(), resolved, ckpt_file(out, "dpc_uss"));
  } else if (target == "dpc-tse") {
    require_checkpoint(target, ckpt_file(out, "uss"), "uss");
    require_checkpoint(target, ckpt_file(out, "tse"), "tse");
    UssModel uss = load_uss(out, seed);
    TseModel tse = load_tse(out, seed);
    DpcModel dpc;
    dpc.init(seed + kDpcTseSeedOffset);
    stats = scenesep::train_dpc(dpc, uss, &tse, scenes, tc);
    save_model(dpc.params(), dpc.meta(), resolved, ckpt_file(out, "dpc_tse"));
  } else if (target == "sce") {
    require_checkpoint(target, ckpt_file(out, "uss"), "uss");
    require_checkpoint(target, ckpt_file(out, "tse"), "tse");
    require_checkpoint(target, ckpt_file(out, "dpc_uss"), "dpc-uss");
    UssModel uss = load_uss(out, seed);
    TseModel tse = load_tse(out, seed);
    DpcModel dpc = load_dpc(out, "dpc_uss", seed, kDpcUssSeedOffset);
    const EmbeddingKind kind = scenesep::kind_from_name(kind_str);
    SceModel sce;
    sce.init(seed + kSceSeedOffset);
    stats = scenesep::train_sce(sce, uss, tse, dpc, scenes, kind, tc);
    std::map<std::string, std::string> meta = sce.meta();
    meta["kind"] = kind_str;
    save_model(sce.params(), meta, resolved, ckpt_file(out, "sce_" + kind_str));
  } else {
    throw std::runtime_error("train: unknown target " + target);
  }

  write_run_config(resolved, out + "/run_" + run_stem + ".cfg");
  const std::size_t window = std::min<std::size_t>(5, stats.losses.size());
  std::cout << "train " << target << ": " << steps << " steps, loss "
            << fmt3(stats.mean_head(window)) << " -> " << fmt3(stats.mean_tail(window)) << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string data;
  std::string ckpt;
  std::string out;
  std::string kinds = "none";
  std::string wav_dir;
  std::string config;
  std::uint64_t seed = 0;
  std::int64_t skip = 0;
  std::int64_t take = -1;
};

nlohmann::json transition_json(const TransitionReport& rep, int from_stage) {
  nlohmann::json j;
  j["from_stage"] = from_stage;
  j["to_stage"] = from_stage + 1;
  for (int k = 0; k < 4; ++k) {
    nlohmann::json cell;
    cell["count"] = rep.count[static_cast<std::size_t>(k)];
    cell["ratio_pct"] = rep.ratio_pct[static_cast<std::size_t>(k)];
    cell["delta_ca_sdri"] = rep.delta_ca_sdri[static_cast<std::size_t>(k)];
    j[scenesep::transition_name(static_cast<scenesep::Transition>(k))] = cell;
  }
  return j;
}

std::string transition_table(const TransitionReport& rep, const std::string& title) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({title, "count", "ratio_pct", "delta_ca_sdri"});
  for (int k = 0; k < 4; ++k) {
    rows.push_back({scenesep::transition_name(static_cast<scenesep::Transition>(k)),
                    std::to_string(rep.count[static_cast<std::size_t>(k)]),
                    fmt3(rep.ratio_pct[static_cast<std::size_t>(k)]),
                    fmt3(rep.delta_ca_sdri[static_cast<std::size_t>(k)])});
  }
  return scenesep::render_table(rows);
}

int cmd_eval(const EvalArgs& args, const Config& cfg) {
  const std::string data = cfg.has("data") ? cfg.get("data", "") : scenesep::data_root(cfg);
  const std::string ckpt = cfg.get("ckpt", args.ckpt);
  const std::string out = cfg.get("out", args.out);
  const std::string kinds_str = cfg.get("kinds", args.kinds);
  const std::string wav_dir = cfg.get("wav_dir", args.wav_dir);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const std::int64_t skip = cfg.get_int("skip", args.skip);
  const std::int64_t take = cfg.get_int("take", args.take);
  if (ckpt.empty()) throw std::runtime_error("eval: --ckpt is required");
  if (out.empty()) throw std::runtime_error("eval: --out is required");
  const std::vector<std::string> kind_names = split_csv(kinds_str);
  if (kind_names.empty()) throw std::runtime_error("eval: no kinds given");

  std::filesystem::create_directories(out);
  Config resolved;
  resolved.set("command", "eval");
  resolved.set("data", data);
  resolved.set("ckpt", ckpt);
  resolved.set("out", out);
  resolved.set("kinds", kinds_str);
  resolved.set("seed", std::to_string(seed));
  resolved.set("skip", std::to_string(skip));
  resolved.set("take", std::to_string(take));
  if (!wav_dir.empty()) resolved.set("wav_dir", wav_dir);

  const std::vector<SceneRecord> scenes = load_scenes(data, skip, take);
  check_hop_alignment(scenes);
  const UssModel uss = load_uss(ckpt, seed);
  const TseModel tse = load_tse(ckpt, seed);
  const DpcModel dpc_uss = load_dpc(ckpt, "dpc_uss", seed, kDpcUssSeedOffset);
  const DpcModel dpc_tse = load_dpc(ckpt, "dpc_tse", seed, kDpcTseSeedOffset);

  std::vector<std::vector<std::string>> grid;
  grid.push_back({"kind", "stage", "ca_sdri_db", "acc_mix_pct", "snri_db"});
  nlohmann::json report;
  report["n_scenes"] = scenes.size();
  report["kinds"] = nlohmann::json::object();
  std::string transitions_text;
  std::size_t total_failures = 0;

  for (const std::string& kind_str : kind_names) {
    const EmbeddingKind kind = scenesep::kind_from_name(kind_str);
    const SceModel sce = load_sce(ckpt, kind, seed);
    const scenesep::Pipeline pipe(uss, tse, dpc_uss, dpc_tse, sce, kind);
    std::string kind_wavs;
    if (!wav_dir.empty()) {
      kind_wavs = wav_dir + "/" + kind_str;
      std::filesystem::create_directories(kind_wavs);
    }
    const scenesep::EvalResult result = scenesep::evaluate(pipe, scenes, kind_wavs);
    scenesep::save_traces(out + "/traces_" + kind_str + ".jsonl", result.rows);

    nlohmann::json jk;
    jk["stages"] = nlohmann::json::array();
    for (int s = 0; s < 3; ++s) {
      const scenesep::StageSummary& sum = result.stages[static_cast<std::size_t>(s)];
      grid.push_back({kind_str, std::to_string(s + 1), fmt3(sum.ca_sdri), fmt3(sum.acc_mix),
                      fmt3(sum.mean_snri)});
      nlohmann::json js;
      js["stage"] = s + 1;
      js["ca_sdri"] = sum.ca_sdri;
      js["acc_mix"] = sum.acc_mix;
      js["mean_snri"] = sum.mean_snri;
      jk["stages"].push_back(js);
    }
    jk["transitions"] = nlohmann::json::array();
    for (int t = 0; t < 2; ++t) {
      const TransitionReport& rep = result.transitions[static_cast<std::size_t>(t)];
      jk["transitions"].push_back(transition_json(rep, t + 1));
      transitions_text += transition_table(
          rep, kind_str + " " + std::to_string(t + 1) + "->" + std::to_string(t + 2));
      transitions_text += "\n";
    }
    jk["failures"] = result.failures;
    report["kinds"][kind_str] = jk;
    total_failures += result.failures.size();
    for (const std::string& f : result.failures) std::cerr << "eval: " << kind_str << ": " << f << "\n";
  }

  const std::string grid_text = scenesep::render_table(grid);
  const std::string text = grid_text + "\n" + transitions_text;
  write_text_file(out + "/report.txt", text);
  write_text_file(out + "/report.json", report.dump(2) + "\n");
  write_run_config(resolved, out + "/run_eval.cfg");
  std::cout << text;
  if (total_failures > 0) {
    std::cerr << "eval: " << total_failures << " mixture evaluations failed\n";
    return 1;
  }
  return 0;
}

// --------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string trace_a;
  std::string trace_b;
  int stage_a = 1;
  int stage_b = 2;
  std::string json_out;
};

int cmd_analyze(const AnalyzeArgs& args) {
  const std::vector<scenesep::TraceRow> rows_a = scenesep::load_traces(args.trace_a);
  const std::vector<scenesep::TraceRow> rows_b = scenesep::load_traces(args.trace_b);
  const TransitionReport rep = scenesep::transition_report(
      scenesep::stage_slice(rows_a, args.stage_a), scenesep::stage_slice(rows_b, args.stage_b));
  const std::string title =
      "stage " + std::to_string(args.stage_a) + " -> stage " + std::to_string(args.stage_b);
  std::cout << transition_table(rep, title);
  if (!args.json_out.empty()) {
    nlohmann::json j;
    j["stage_a"] = args.stage_a;
    j["stage_b"] = args.stage_b;
    j["trace_a"] = args.trace_a;
    j["trace_b"] = args.trace_b;
    for (int k = 0; k < 4; ++k) {
      nlohmann::json cell;
      cell["count"] = rep.count[static_cast<std::size_t>(k)];
      cell["ratio_pct"] = rep.ratio_pct[static_cast<std::size_t>(k)];
      cell["delta_ca_sdri"] = rep.delta_ca_sdri[static_cast<std::size_t>(k)];
      j[scenesep::transition_name(static_cast<scenesep::Transition>(k))] = cell;
    }
    write_text_file(args.json_out, j.dump(2) + "\n");
  }
  return 0;
}

// Applies "--config file < explicit flags" precedence into one Config.
Config make_config(const std::string& config_path) {
  if (config_path.empty()) return Config{};
  return Config::load_file(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-stage spatial semantic segmentation workbench"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "synthesize a toy scene dataset");
  CLI::Option* synth_n = synth->add_option("--n", synth_args.n, "scene count");
  CLI::Option* synth_seed = synth->add_option("--seed", synth_args.seed, "base scene seed");
  CLI::Option* synth_dur =
      synth->add_option("--duration", synth_args.duration, "scene length in seconds");
  synth->add_option("--out", synth_args.out, "output dataset directory");
  synth->add_option("--config", synth_args.config, "key=value config file");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train one pipeline component");
  train->add_option("target", train_args.target, "uss | tse | dpc-uss | dpc-tse | sce")
      ->required()
      ->check(CLI::IsMember({"uss", "tse", "dpc-uss", "dpc-tse", "sce"}));
  CLI::Option* train_data = train->add_option("--data", train_args.data, "dataset directory");
  train->add_option("--out", train_args.out, "checkpoint directory");
  CLI::Option* train_steps = train->add_option("--steps", train_args.steps, "optimizer steps");
  CLI::Option* train_lr = train->add_option("--lr", train_args.lr, "learning rate");
  CLI::Option* train_wd =
      train->add_option("--weight-decay", train_args.weight_decay, "AdamW weight decay");
  CLI::Option* train_seed = train->add_option("--seed", train_args.seed, "model init seed");
  CLI::Option* train_kind =
      train->add_option("--kind", train_args.kind, "sce clue kind: none | m2d | clap-text | clap-audio");
  CLI::Option* train_skip = train->add_option("--skip", train_args.skip, "skip first N scenes");
  CLI::Option* train_take = train->add_option("--take", train_args.take, "use at most N scenes");
  train->add_option("--config", train_args.config, "key=value config file");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "run the three-stage pipeline over a dataset");
  CLI::Option* eval_data = eval->add_option("--data", eval_args.data, "dataset directory");
  eval->add_option("--ckpt", eval_args.ckpt, "checkpoint directory");
  eval->add_option("--out", eval_args.out, "report directory");
  CLI::Option* eval_kinds =
      eval->add_option("--kinds", eval_args.kinds, "comma-separated clue kinds");
  CLI::Option* eval_wavs =
      eval->add_option("--wav-dir", eval_args.wav_dir, "dump per-stage slot waveforms here");
  CLI::Option* eval_seed = eval->add_option("--seed", eval_args.seed, "model construction seed");
  CLI::Option* eval_skip = eval->add_option("--skip", eval_args.skip, "skip first N scenes");
  CLI::Option* eval_take = eval->add_option("--take", eval_args.take, "use at most N scenes");
  eval->add_option("--config", eval_args.config, "key=value config file");

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "per-source transitions between two traces");
  analyze->add_option("trace_a", analyze_args.trace_a, "trace JSONL for side A")->required();
  analyze->add_option("trace_b", analyze_args.trace_b, "trace JSONL for side B")->required();
  analyze->add_option("--stage-a", analyze_args.stage_a, "stage of side A (1-3)")
      ->check(CLI::Range(1, 3));
  analyze->add_option("--stage-b", analyze_args.stage_b, "stage of side B (1-3)")
      ->check(CLI::Range(1, 3));
  analyze->add_option("--json", analyze_args.json_out, "also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      Config cfg = make_config(synth_args.config);
      if (synth_n->count()) cfg.set("n", std::to_string(synth_args.n));
      if (synth_seed->count()) cfg.set("seed", std::to_string(synth_args.seed));
      if (synth_dur->count()) cfg.set("duration", fmt_full(synth_args.duration));
      if (!synth_args.out.empty()) cfg.set("out", synth_args.out);
      return cmd_synth(synth_args, cfg);
    }
    if (train->parsed()) {
      Config cfg = make_config(train_args.config);
      if (train_data->count()) cfg.set("data", train_args.data);
      if (!train_args.out.empty()) cfg.set("out", train_args.out);
      if (train_steps->count()) cfg.set("steps", std::to_string(train_args.steps));
      if (train_lr->count()) cfg.set("lr", fmt_full(train_args.lr));
      if (train_wd->count()) cfg.set("weight_decay", fmt_full(train_args.weight_decay));
      if (train_seed->count()) cfg.set("seed", std::to_string(train_args.seed));
      if (train_kind->count()) cfg.set("kind", train_args.kind);
      if (train_skip->count()) cfg.set("skip", std::to_string(train_args.skip));
      if (train_take->count()) cfg.set("take", std::to_string(train_args.take));
      return cmd_train(train_args, cfg);
    }
    if (eval->parsed()) {
      Config cfg = make_config(eval_args.config);
      if (eval_data->count()) cfg.set("data", eval_args.data);
      if (!eval_args.ckpt.empty()) cfg.set("ckpt", eval_args.ckpt);
      if (!eval_args.out.empty()) cfg.set("out", eval_args.out);
      if (eval_kinds->count()) cfg.set("kinds", eval_args.kinds);
      if (eval_wavs->count()) cfg.set("wav_dir", eval_args.wav_dir);
      if (eval_seed->count()) cfg.set("seed", std::to_string(eval_args.seed));
      if (eval_skip->count()) cfg.set("skip", std::to_string(eval_args.skip));
      if (eval_take->count()) cfg.set("take", std::to_string(eval_args.take));
      return cmd_eval(eval_args, cfg);
    }
    if (analyze->parsed()) return cmd_analyze(analyze_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}

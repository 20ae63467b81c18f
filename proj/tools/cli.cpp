// Copyright 2026 The Jointcast Authors
//
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

#include "cli.hpp"

#include "jointcast/ad/checkpoint.hpp"
#include "jointcast/error.hpp"
#include "jointcast/forecaster.hpp"
#include "jointcast/random.hpp"
#include "jointcast/report.hpp"
#include "jointcast/scenario_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <set>

namespace jointcast::cli
{
namespace
{

using nlohmann::json;

std::string fixed6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void check_keys(const json & obj, const std::set<std::string> & allowed, const std::string & where)
{
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto & item : obj.items()) {
    if (!allowed.count(item.key())) throw UsageError("config: unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
void read(const json & obj, const char * key, T & dst, const std::string & where)
{
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception &) {
    throw UsageError("config: '" + where + "." + key + "' has the wrong type");
  }
}

struct Corpus
{
  std::vector<PredictionWindow> windows;
  std::vector<SceneSample> scenes;
};

Corpus load_corpus(const RunConfig & cfg, Split split)
{
  if (cfg.manifest.empty()) throw UsageError(cfg.subcommand + ": --manifest is required");
  const Manifest m = load_manifest(cfg.manifest);
  Corpus c;
  for (const Scenario & s : load_split(m, split)) {
    for (SceneSample & scene : build_scenes(s)) {
      c.windows.insert(c.windows.end(), scene.windows.begin(), scene.windows.end());
      c.scenes.push_back(std::move(scene));
    }
  }
  return c;
}

Split split_flag(const RunConfig & cfg)
{
  try {
    return parse_split(cfg.split);
  } catch (const SchemaError &) {
    throw UsageError("--split must be train, val or test, got '" + cfg.split + "'");
  }
}

struct LoadedModel
{
  ad::ParamStore store;
  model::Forecaster net;
};

LoadedModel load_model(const RunConfig & cfg)
{
  if (cfg.checkpoint.empty()) throw UsageError(cfg.subcommand + ": --checkpoint is required");
  ad::LoadedCheckpoint ck = ad::load_checkpoint(cfg.checkpoint);
  LoadedModel lm{std::move(ck.store), {}};
  lm.net = model::Forecaster::bind(lm.store, train::model_config_from_metadata(ck.metadata));
  return lm;
}

int cmd_gen(const RunConfig & cfg, std::ostream & out)
{
  if (!(cfg.val_fraction >= 0.0) || !(cfg.test_fraction >= 0.0) || cfg.val_fraction + cfg.test_fraction > 1.0) {
    throw UsageError("gen: val and test fractions must be non-negative and sum to at most 1");
  }
  synth::GenConfig g = cfg.gen;
  g.seed = derive_seed(cfg.seed, kGenStream);
  const std::vector<Scenario> corpus = synth::generate_corpus(g);
  const int n = static_cast<int>(corpus.size());
  const int n_test = static_cast<int>(std::lround(n * cfg.test_fraction));
  const int n_val = std::min(n - n_test, static_cast<int>(std::lround(n * cfg.val_fraction)));

  Manifest m;
  m.base_dir = cfg.output_dir;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const Split split = i >= n - n_test ? Split::kTest : i >= n - n_test - n_val ? Split::kVal : Split::kTrain;
    const std::filesystem::path rel = std::filesystem::path("scenarios") / (corpus[static_cast<std::size_t>(i)].scenario_id + ".json");
    save_scenario(corpus[static_cast<std::size_t>(i)], cfg.output_dir / rel);
    m.entries.push_back({rel, split});
    ++counts[static_cast<int>(split)];
  }
  save_manifest(m, cfg.output_dir / "manifest.json");
  out << "generated " << n << " scenarios (train " << counts[0] << ", val " << counts[1] << ", test " << counts[2]
      << ") in " << cfg.output_dir.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig & cfg, std::ostream & out)
{
  train::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, kTrainStream);
  train::validate(tc);
  const Corpus corpus = load_corpus(cfg, Split::kTrain);
  std::vector<model::SceneTensors> scenes;
  for (const auto & s : corpus.scenes) scenes.push_back(model::prepare_scene(s));
  if (scenes.empty()) throw UsageError("train: the train split yields no prediction windows");

  train::TrainHooks hooks;
  hooks.failure_checkpoint = cfg.output_dir / "checkpoint_last_good.jckp";
  const int every = std::max(1, cfg.log_every);
  hooks.on_step = [&out, every, &tc](int step, const train::LossBreakdown & b) {
    if (step % every == 0 || step + 1 == tc.max_steps) {
      out << "step " << step << " l_gpn " << fixed6(b.l_gpn) << " l_int " << fixed6(b.l_int) << " l_traj "
          << fixed6(b.l_traj) << " l_final " << fixed6(b.l_final) << "\n";
    }
  };
  const train::TrainResult res = train::train(scenes, tc, hooks);
  ad::save_checkpoint(res.store, train::checkpoint_metadata(tc), cfg.output_dir / "checkpoint.jckp");
  write_text_file(cfg.output_dir / "loss_log.csv", train::format_loss_log(res.log));
  out << "trained " << tc.max_steps << " steps on " << scenes.size() << " scenes; checkpoint "
      << (cfg.output_dir / "checkpoint.jckp").string() << "\n";
  return 0;
}

report::EvalOptions eval_options(const RunConfig & cfg)
{
  report::EvalOptions eo;
  eo.n_samples = cfg.n_samples;
  eo.tau = cfg.tau.value_or(model::tau_for_samples(cfg.n_samples));
  if (!(eo.tau >= 0.0)) throw UsageError("eval: --tau must be non-negative");
  if (cfg.oracle_fps) {
    eo.intent.mode = model::IntentMode::kOracle;
    eo.intent.refresh_period = model::refresh_period_for_fps(*cfg.oracle_fps);
  }
  eo.seed = derive_seed(cfg.seed, kEvalStream);
  return eo;
}

int cmd_eval(const RunConfig & cfg, std::ostream & out)
{
  if (cfg.n_samples < 1) throw UsageError("eval: --n must be at least 1");
  const report::EvalOptions eo = eval_options(cfg);
  const LoadedModel lm = load_model(cfg);
  const Corpus corpus = load_corpus(cfg, split_flag(cfg));
  const std::string text = report::format_dump(report::evaluate(lm.store, lm.net, corpus.scenes, eo));
  const std::filesystem::path dump_path = cfg.output_dir / "predictions.jsonl";
  write_text_file(dump_path, text);
  // The report is always produced from the dump text so that `report` reproduces it exactly.
  const auto records = report::parse_dump(text, dump_path.string());
  const report::Report rep = report::slice_and_report(records, corpus.windows);
  report::write_report(rep, cfg.output_dir / "report");
  out << report::format_metrics_csv(rep);
  return 0;
}

int cmd_report(const RunConfig & cfg, std::ostream & out)
{
  if (cfg.dump.empty()) throw UsageError("report: --dump is required");
  const Corpus corpus = load_corpus(cfg, split_flag(cfg));
  const auto records = report::parse_dump(read_text_file(cfg.dump), cfg.dump.string());
  const report::Report rep = report::slice_and_report(records, corpus.windows);
  report::write_report(rep, cfg.output_dir / "report");
  out << report::format_metrics_csv(rep);
  return 0;
}

int cmd_ablate(const RunConfig & cfg, std::ostream & out)
{
  const LoadedModel lm = load_model(cfg);
  const Corpus corpus = load_corpus(cfg, split_flag(cfg));
  std::vector<report::AblationRow> rows;
  for (double fps : model::kOracleFps) {
    RunConfig c = cfg;
    c.n_samples = 1;
    c.tau = model::kSingleShotTau;
    c.oracle_fps = fps;
    const report::EvalOptions eo = eval_options(c);
    const auto records = report::evaluate(lm.store, lm.net, corpus.scenes, eo);
    const report::Report rep = report::slice_and_report(records, corpus.windows);
    rows.push_back({fps, eo.intent.refresh_period, rep.rows});
  }
  const std::string table = report::format_ablation_csv(rows);
  write_text_file(cfg.output_dir / "ablation_freq.csv", table);
  out << table;
  return 0;
}

std::string config_path_from_argv(int argc, const char * const * argv)
{
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace

void apply_config_json(const std::string & text, RunConfig & cfg)
{
  const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw SchemaError("config: not valid JSON");
  check_keys(j, {"seed", "output_dir", "manifest", "checkpoint", "dump", "split", "gen", "train", "eval"}, "$");
  read(j, "seed", cfg.seed, "$");
  std::string s;
  if (j.contains("output_dir")) read(j, "output_dir", s, "$"), cfg.output_dir = s;
  if (j.contains("manifest")) read(j, "manifest", s, "$"), cfg.manifest = s;
  if (j.contains("checkpoint")) read(j, "checkpoint", s, "$"), cfg.checkpoint = s;
  if (j.contains("dump")) read(j, "dump", s, "$"), cfg.dump = s;
  read(j, "split", cfg.split, "$");
  if (j.contains("gen")) {
    const json & g = j["gen"];
    check_keys(g, {"scenarios", "duration_s", "vehicles", "pedestrians", "turn_prob", "stop_prob", "lane_change_prob",
                   "cross_prob", "lane_width", "arm_length", "val_fraction", "test_fraction"},
               "gen");
    read(g, "scenarios", cfg.gen.n_scenarios, "gen");
    read(g, "duration_s", cfg.gen.duration_s, "gen");
    read(g, "vehicles", cfg.gen.n_vehicles, "gen");
    read(g, "pedestrians", cfg.gen.n_pedestrians, "gen");
    read(g, "turn_prob", cfg.gen.turn_prob, "gen");
    read(g, "stop_prob", cfg.gen.stop_prob, "gen");
    read(g, "lane_change_prob", cfg.gen.lane_change_prob, "gen");
    read(g, "cross_prob", cfg.gen.cross_prob, "gen");
    read(g, "lane_width", cfg.gen.map.lane_width, "gen");
    read(g, "arm_length", cfg.gen.map.arm_length, "gen");
    read(g, "val_fraction", cfg.val_fraction, "gen");
    read(g, "test_fraction", cfg.test_fraction, "gen");
  }
  if (j.contains("train")) {
    const json & t = j["train"];
    check_keys(t, {"steps", "batch", "lr", "lambda1", "lambda2", "lambda3", "alpha1", "alpha2", "augment", "clip_norm",
                   "attention_scale", "log_every"},
               "train");
    read(t, "steps", cfg.train.max_steps, "train");
    read(t, "batch", cfg.train.batch, "train");
    read(t, "lr", cfg.train.lr, "train");
    read(t, "lambda1", cfg.train.lambda1, "train");
    read(t, "lambda2", cfg.train.lambda2, "train");
    read(t, "lambda3", cfg.train.lambda3, "train");
    read(t, "alpha1", cfg.train.alpha1, "train");
    read(t, "alpha2", cfg.train.alpha2, "train");
    read(t, "augment", cfg.train.augment, "train");
    read(t, "clip_norm", cfg.train.clip_norm, "train");
    read(t, "attention_scale", cfg.attention_scale, "train");
    read(t, "log_every", cfg.log_every, "train");
  }
  if (j.contains("eval")) {
    const json & e = j["eval"];
    check_keys(e, {"n", "tau", "oracle_fps"}, "eval");
    read(e, "n", cfg.n_samples, "eval");
    if (e.contains("tau")) {
      double tau = 0.0;
      read(e, "tau", tau, "eval");
      cfg.tau = tau;
    }
    if (e.contains("oracle_fps")) {
      double fps = 0.0;
      read(e, "oracle_fps", fps, "eval");
      cfg.oracle_fps = fps;
    }
  }
}

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  RunConfig cfg;
  try {
    const std::string config_path = config_path_from_argv(argc, argv);
    if (!config_path.empty()) apply_config_json(read_text_file(config_path), cfg);
    if (const char * env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
  } catch (const Error & e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  }

  CLI::App app{"Joint intention and trajectory forecasting on synthetic traffic scenes", "jointcast"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  std::string out_dir;
  std::string manifest;
  std::string checkpoint;
  std::string dump;
  app.add_option("--config", config_file, "JSON config file; flags override its values");
  app.add_option("--seed", cfg.seed, "Global seed; components use derive_seed(seed, k)");
  app.add_option("--out", out_dir, "Output directory (default: $" + std::string(kOutputDirEnv) + " or ./jointcast_out)");

  CLI::App * gen = app.add_subcommand("gen", "Generate a synthetic corpus and manifest");
  gen->add_option("--scenarios", cfg.gen.n_scenarios, "Number of scenarios");
  gen->add_option("--duration", cfg.gen.duration_s, "Scenario duration in seconds (>= 8)");
  gen->add_option("--vehicles", cfg.gen.n_vehicles, "Vehicles per scenario");
  gen->add_option("--pedestrians", cfg.gen.n_pedestrians, "Pedestrians per scenario");
  gen->add_option("--turn-prob", cfg.gen.turn_prob, "Probability that a vehicle turns");
  gen->add_option("--stop-prob", cfg.gen.stop_prob, "Probability that a vehicle stops (a share park)");
  gen->add_option("--lane-change-prob", cfg.gen.lane_change_prob, "Probability of a lane change");
  gen->add_option("--cross-prob", cfg.gen.cross_prob, "Probability that a walking pedestrian crosses");
  gen->add_option("--lane-width", cfg.gen.map.lane_width, "Lane width in metres");
  gen->add_option("--arm-length", cfg.gen.map.arm_length, "Intersection arm length in metres");
  gen->add_option("--val-fraction", cfg.val_fraction, "Share of scenarios tagged val");
  gen->add_option("--test-fraction", cfg.test_fraction, "Share of scenarios tagged test");

  CLI::App * tr = app.add_subcommand("train", "Train a model on the train split");
  tr->add_option("--manifest", manifest, "Corpus manifest");
  tr->add_option("--steps", cfg.train.max_steps, "Optimizer steps");
  tr->add_option("--batch", cfg.train.batch, "Scenes per step");
  tr->add_option("--lr", cfg.train.lr, "Adam learning rate");
  tr->add_option("--lambda1", cfg.train.lambda1, "Goal loss weight");
  tr->add_option("--lambda2", cfg.train.lambda2, "Intention loss weight (0 disables intention supervision)");
  tr->add_option("--lambda3", cfg.train.lambda3, "Trajectory loss weight");
  tr->add_option("--alpha1", cfg.train.alpha1, "KL weight inside the goal loss");
  tr->add_option("--alpha2", cfg.train.alpha2, "Goal reconstruction weight inside the goal loss");
  tr->add_option("--augment", cfg.train.augment, "Replication of lane-change / turn scenes");
  tr->add_option("--clip-norm", cfg.train.clip_norm, "Global gradient norm clip (0 disables)");
  tr->add_option("--attention-scale", cfg.attention_scale, "dimension | degree");
  tr->add_option("--log-every", cfg.log_every, "Print losses every k steps");

  CLI::App * ev = app.add_subcommand("eval", "Forecast a split, write the prediction dump and report");
  ev->add_option("--manifest", manifest, "Corpus manifest");
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint");
  ev->add_option("--split", cfg.split, "train | val | test");
  ev->add_option("--n", cfg.n_samples, "Samples per agent (tau defaults to 0 for 1, 1.1 otherwise)");
  ev->add_option("--tau", cfg.tau, "Override the latent sampling scale");
  ev->add_option("--oracle-fps", cfg.oracle_fps, "Feed ground-truth intentions refreshed at this rate");

  CLI::App * ab = app.add_subcommand("ablate-freq", "ADE versus oracle intention refresh rate");
  ab->add_option("--manifest", manifest, "Corpus manifest");
  ab->add_option("--checkpoint", checkpoint, "Model checkpoint");
  ab->add_option("--split", cfg.split, "train | val | test");

  CLI::App * rp = app.add_subcommand("report", "Rebuild report tables from a prediction dump");
  rp->add_option("--manifest", manifest, "Corpus manifest");
  rp->add_option("--dump", dump, "Prediction dump (JSON Lines)");
  rp->add_option("--split", cfg.split, "train | val | test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!manifest.empty()) cfg.manifest = manifest;
    if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
    if (!dump.empty()) cfg.dump = dump;
    if (cfg.attention_scale == "degree") {
      cfg.train.model.scale = graph::AttentionScale::kDegree;
    } else if (cfg.attention_scale == "dimension") {
      cfg.train.model.scale = graph::AttentionScale::kDimension;
    } else {
      throw UsageError("--attention-scale must be 'dimension' or 'degree'");
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.subcommand == "gen") return cmd_gen(cfg, out);
    if (cfg.subcommand == "train") return cmd_train(cfg, out);
    if (cfg.subcommand == "eval") return cmd_eval(cfg, out);
    if (cfg.subcommand == "ablate-freq") return cmd_ablate(cfg, out);
    return cmd_report(cfg, out);
  } catch (const Error & e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kIo);
  }
}

}  // namespace jointcast::cli

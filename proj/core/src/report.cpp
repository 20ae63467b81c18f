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

#include "jointcast/report.hpp"

#include "jointcast/error.hpp"
#include "jointcast/random.hpp"
#include "jointcast/scenario_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace jointcast::report
{

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<DumpRecord> to_records(const model::ForecastResult & f)
{
  std::vector<DumpRecord> out;
  for (const auto & a : f.agents) {
    for (std::size_t s = 0; s < a.samples.size(); ++s) {
      DumpRecord r;
      r.scenario_id = f.scenario_id;
      r.agent_id = a.agent_id;
      r.anchor_t = f.anchor_t;
      r.kind = a.kind;
      r.n_samples = f.n_samples;
      r.tau = f.tau;
      r.sample = static_cast<int>(s);
      r.goal = a.samples[s].goal;
      r.positions = a.samples[s].positions;
      r.intents = a.samples[s].intents;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string format_dump(std::span<const DumpRecord> records)
{
  std::string out;
  for (const auto & r : records) {
    ordered_json j;
    j["scenario_id"] = r.scenario_id;
    j["agent_id"] = r.agent_id;
    j["anchor_t"] = r.anchor_t;
    j["kind"] = kind_name(r.kind);
    j["n"] = r.n_samples;
    j["tau"] = r.tau;
    j["sample"] = r.sample;
    j["goal"] = {r.goal.x, r.goal.y};
    ordered_json pos = ordered_json::array();
    for (const auto & p : r.positions) pos.push_back({p.x, p.y});
    j["positions"] = std::move(pos);
    ordered_json intents = ordered_json::array();
    for (const auto & d : r.intents) intents.push_back(d);
    j["intents"] = std::move(intents);
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace
{

Vec2 read_vec2(const json & j, const std::string & where)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError(where + ": expected [x, y]");
  }
  const Vec2 v{j[0].get<double>(), j[1].get<double>()};
  if (!v.finite()) throw SchemaError(where + ": non-finite coordinate");
  return v;
}

template <typename T>
T field(const json & j, const char * key, const std::string & where)
{
  if (!j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw SchemaError(where + ": field '" + key + "' has the wrong type");
  }
}

DumpRecord parse_record(const json & j, const std::string & where)
{
  if (!j.is_object()) throw SchemaError(where + ": record must be an object");
  DumpRecord r;
  r.scenario_id = field<std::string>(j, "scenario_id", where);
  r.agent_id = field<std::string>(j, "agent_id", where);
  r.anchor_t = field<int>(j, "anchor_t", where);
  const std::string kind = field<std::string>(j, "kind", where);
  if (kind == kind_name(AgentKind::kVehicle)) {
    r.kind = AgentKind::kVehicle;
  } else if (kind == kind_name(AgentKind::kPedestrian)) {
    r.kind = AgentKind::kPedestrian;
  } else {
    throw SchemaError(where + ": unknown kind '" + kind + "'");
  }
  r.n_samples = field<int>(j, "n", where);
  r.tau = field<double>(j, "tau", where);
  r.sample = field<int>(j, "sample", where);
  if (r.n_samples < 1 || r.sample < 0 || r.sample >= r.n_samples) {
    throw SchemaError(where + ": sample index out of range");
  }
  if (!j.contains("goal")) throw SchemaError(where + ": missing field 'goal'");
  r.goal = read_vec2(j["goal"], where + ".goal");
  const json & pos = j.contains("positions") ? j["positions"] : json();
  if (!pos.is_array() || pos.size() != kFutFrames) {
    throw SchemaError(where + ": 'positions' must hold " + std::to_string(kFutFrames) + " points");
  }
  for (int m = 0; m < kFutFrames; ++m) r.positions[m] = read_vec2(pos[m], where + ".positions");
  const json & intents = j.contains("intents") ? j["intents"] : json();
  if (!intents.is_array() || intents.size() != kFutFrames) {
    throw SchemaError(where + ": 'intents' must hold " + std::to_string(kFutFrames) + " distributions");
  }
  for (int m = 0; m < kFutFrames; ++m) {
    const json & d = intents[m];
    if (!d.is_array() || d.size() != static_cast<std::size_t>(action_count(r.kind))) {
      throw SchemaError(where + ": intent distribution width must be " + std::to_string(action_count(r.kind)));
    }
    for (const auto & p : d) {
      if (!p.is_number()) throw SchemaError(where + ": intent probabilities must be numbers");
      r.intents[m].push_back(p.get<double>());
    }
  }
  return r;
}

std::string fixed6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double round6(double v)
{
  return std::round(v * 1e6) / 1e6;
}

using WindowKey = std::tuple<std::string, std::string, int>;

}  // namespace

std::vector<DumpRecord> parse_dump(std::string_view text, std::string_view source)
{
  std::vector<DumpRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw SchemaError(where + ": malformed JSON record");
    out.push_back(parse_record(j, where));
  }
  return out;
}

std::vector<DumpRecord> evaluate(const ad::ParamStore & store, const model::Forecaster & net,
                                 std::span<const SceneSample> scenes, const EvalOptions & opts)
{
  std::vector<DumpRecord> out;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    std::mt19937_64 rng(derive_seed(opts.seed, k));
    const model::SceneTensors t = model::prepare_scene(scenes[k]);
    const model::ForecastResult f = model::forecast(store, net, t, opts.n_samples, opts.tau, opts.intent, rng);
    std::vector<DumpRecord> recs = to_records(f);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return out;
}

const SliceRow & Report::row(metrics::EvalSlice s) const
{
  for (const auto & r : rows) {
    if (r.slice == s) return r;
  }
  throw UsageError("slice '" + std::string(metrics::slice_name(s)) + "' is not part of this report");
}

Report slice_and_report(std::span<const DumpRecord> dump, std::span<const PredictionWindow> windows,
                        std::span<const metrics::EvalSlice> slices, int n_samples)
{
  std::map<WindowKey, std::size_t> corpus;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    corpus.emplace(WindowKey{windows[i].scenario_id, windows[i].agent_id, windows[i].anchor_t}, i);
  }
  std::map<WindowKey, std::vector<const DumpRecord *>> groups;
  for (const auto & r : dump) {
    const WindowKey key{r.scenario_id, r.agent_id, r.anchor_t};
    if (!corpus.count(key)) {
      throw SchemaError("dump record " + r.scenario_id + "/" + r.agent_id + "@" + std::to_string(r.anchor_t) +
                        " has no matching corpus window");
    }
    groups[key].push_back(&r);
  }

  Report rep;
  rep.n_samples = n_samples;
  for (metrics::EvalSlice s : slices) rep.rows.push_back({s, 0, 0.0, 0.0, 0.0, 0.0});

  bool first = true;
  for (auto & [key, recs] : groups) {
    const int n = recs.front()->n_samples;
    if (first) {
      if (rep.n_samples == 0) rep.n_samples = n;
      rep.tau = recs.front()->tau;
      first = false;
    }
    if (n != rep.n_samples || static_cast<int>(recs.size()) != n) {
      throw SchemaError("dump window " + std::get<0>(key) + "/" + std::get<1>(key) + "@" +
                        std::to_string(std::get<2>(key)) + " has " + std::to_string(recs.size()) +
                        " samples, expected " + std::to_string(rep.n_samples));
    }
    std::vector<const DumpRecord *> by_sample(static_cast<std::size_t>(n), nullptr);
    for (const auto * r : recs) {
      if (by_sample[static_cast<std::size_t>(r->sample)] != nullptr) {
        throw SchemaError("dump window " + std::get<0>(key) + "/" + std::get<1>(key) + ": duplicate sample index");
      }
      by_sample[static_cast<std::size_t>(r->sample)] = r;
    }

    const PredictionWindow & w = windows[corpus.at(key)];
    if (by_sample.front()->kind != w.kind) {
      throw SchemaError("dump window " + std::get<0>(key) + "/" + std::get<1>(key) + ": agent kind disagrees with corpus");
    }
    std::array<Vec2, kFutFrames> gt{};
    std::array<int, kFutFrames> gt_intent{};
    for (int m = 0; m < kFutFrames; ++m) {
      gt[m] = w.fut[m].position;
      gt_intent[m] = action_index(w.fut_intent[m]);
    }

    std::vector<std::vector<Vec2>> preds;
    std::vector<std::vector<int>> labels;
    std::size_t best = 0;
    double best_ade = 0.0;
    for (std::size_t s = 0; s < by_sample.size(); ++s) {
      const DumpRecord & r = *by_sample[s];
      preds.emplace_back(r.positions.begin(), r.positions.end());
      std::vector<int> lab;
      for (const auto & d : r.intents) lab.push_back(metrics::argmax(d));
      labels.push_back(std::move(lab));
      const double ade = metrics::ade_fde(preds.back(), gt).ade;
      if (s == 0 || ade < best_ade) {
        best = s;
        best_ade = ade;
      }
    }
    const metrics::AdeFde single = metrics::ade_fde(preds.front(), gt);
    const metrics::AdeFde multi = metrics::min_ade_fde_n(preds, gt);
    for (auto & row : rep.rows) {
      if (!metrics::in_slice(w, row.slice)) continue;
      row.windows += 1;
      row.ade += single.ade;
      row.fde += single.fde;
      row.min_ade += multi.ade;
      row.min_fde += multi.fde;
    }

    // Intention scoring over frames whose label is one of the kind's intent classes.
    const int classes = intent_class_count(w.kind);
    std::vector<int> frames;
    for (int m = 0; m < kFutFrames; ++m) {
      if (gt_intent[m] < classes) frames.push_back(m);
    }
    const bool veh = w.kind == AgentKind::kVehicle;
    (veh ? rep.vehicle_single : rep.pedestrian_single).add(labels, gt_intent, metrics::AccuracyMode::kSingle);
    (veh ? rep.vehicle_best : rep.pedestrian_best).add(labels, gt_intent, metrics::AccuracyMode::kBestSample);
    auto & conf = veh ? rep.vehicle_confusion : rep.pedestrian_confusion;
    auto & conf_best = veh ? rep.vehicle_confusion_best : rep.pedestrian_confusion_best;
    for (int m : frames) {
      if (labels.front()[m] < classes) conf.add(gt_intent[m], labels.front()[m]);
      if (labels[best][m] < classes) conf_best.add(gt_intent[m], labels[best][m]);
    }
  }

  for (auto & row : rep.rows) {
    if (row.windows == 0) continue;
    const auto c = static_cast<double>(row.windows);
    row.ade /= c;
    row.fde /= c;
    row.min_ade /= c;
    row.min_fde /= c;
  }
  return rep;
}

std::string format_metrics_csv(const Report & r)
{
  std::string out = "slice,present,windows,ade,fde,min_ade,min_fde\n";
  for (const auto & row : r.rows) {
    out += std::string(metrics::slice_name(row.slice)) + "," + (row.present() ? "1" : "0") + "," +
           std::to_string(row.windows);
    if (row.present()) {
      out += "," + fixed6(row.ade) + "," + fixed6(row.fde) + "," + fixed6(row.min_ade) + "," + fixed6(row.min_fde);
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  return out;
}

std::string format_horizon_csv(const Report & r)
{
  std::string out = "frame,horizon_s,vehicle_single,vehicle_best,pedestrian_single,pedestrian_best\n";
  const auto vs = r.vehicle_single.accuracy();
  const auto vb = r.vehicle_best.accuracy();
  const auto ps = r.pedestrian_single.accuracy();
  const auto pb = r.pedestrian_best.accuracy();
  auto cell = [](const metrics::HorizonAccuracy & h, const std::vector<double> & a, std::size_t m) {
    return h.total()[m] > 0 ? fixed6(a[m]) : std::string();
  };
  for (std::size_t m = 0; m < vs.size(); ++m) {
    out += std::to_string(m + 1) + "," + fixed6(static_cast<double>(m + 1) / kFps) + "," +
           cell(r.vehicle_single, vs, m) + "," + cell(r.vehicle_best, vb, m) + "," +
           cell(r.pedestrian_single, ps, m) + "," + cell(r.pedestrian_best, pb, m) + "\n";
  }
  return out;
}

std::string format_confusion_csv(const metrics::ConfusionMatrix & c)
{
  std::string out = "gt\\pred";
  for (int p = 0; p < c.classes(); ++p) out += "," + std::string(action_name(make_action(c.kind(), p)));
  out += "\n";
  for (int g = 0; g < c.classes(); ++g) {
    out += std::string(action_name(make_action(c.kind(), g)));
    for (int p = 0; p < c.classes(); ++p) out += "," + std::to_string(c.at(g, p));
    out += "\n";
  }
  return out;
}

std::string format_summary_json(const Report & r)
{
  ordered_json j;
  j["n_samples"] = r.n_samples;
  j["tau"] = round6(r.tau);
  ordered_json slices = ordered_json::object();
  for (const auto & row : r.rows) {
    ordered_json s;
    s["present"] = row.present();
    s["windows"] = row.windows;
    if (row.present()) {
      s["ade"] = round6(row.ade);
      s["fde"] = round6(row.fde);
      s["min_ade"] = round6(row.min_ade);
      s["min_fde"] = round6(row.min_fde);
    }
    slices[std::string(metrics::slice_name(row.slice))] = std::move(s);
  }
  j["slices"] = std::move(slices);
  auto mean_acc = [](const metrics::HorizonAccuracy & h) -> ordered_json {
    long long c = 0;
    long long t = 0;
    for (std::size_t m = 0; m < h.total().size(); ++m) {
      c += h.correct()[m];
      t += h.total()[m];
    }
    if (t == 0) return nullptr;
    return round6(static_cast<double>(c) / static_cast<double>(t));
  };
  j["intent_accuracy"] = {{"vehicle_single", mean_acc(r.vehicle_single)},
                          {"vehicle_best", mean_acc(r.vehicle_best)},
                          {"pedestrian_single", mean_acc(r.pedestrian_single)},
                          {"pedestrian_best", mean_acc(r.pedestrian_best)}};
  return j.dump(2) + "\n";
}

void write_report(const Report & r, const std::filesystem::path & dir)
{
  write_text_file(dir / "metrics.csv", format_metrics_csv(r));
  write_text_file(dir / "horizon_accuracy.csv", format_horizon_csv(r));
  write_text_file(dir / "confusion_vehicle.csv", format_confusion_csv(r.vehicle_confusion));
  write_text_file(dir / "confusion_vehicle_best.csv", format_confusion_csv(r.vehicle_confusion_best));
  write_text_file(dir / "confusion_pedestrian.csv", format_confusion_csv(r.pedestrian_confusion));
  write_text_file(dir / "confusion_pedestrian_best.csv", format_confusion_csv(r.pedestrian_confusion_best));
  write_text_file(dir / "summary.json", format_summary_json(r));
}

std::string format_ablation_csv(std::span<const AblationRow> rows)
{
  std::string out = "fps,period_frames,slice,windows,ade,fde\n";
  for (const auto & a : rows) {
    for (const auto & row : a.rows) {
      out += fixed6(a.fps) + "," + std::to_string(a.period) + "," + std::string(metrics::slice_name(row.slice)) +
             "," + std::to_string(row.windows) + "," + (row.present() ? fixed6(row.ade) : "") + "," +
             (row.present() ? fixed6(row.fde) : "") + "\n";
    }
  }
  return out;
}

}  // namespace jointcast::report

/*
 Copyright 2026 The stagetune Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "stagetune/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(fmt::format("{}: {}", path.empty() ? "/" : path, msg));
}

/// Object accessor that remembers which keys were read so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "/" + key; }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& get(const std::string& key) {
    if (!has(key)) fail(at(key), "missing required key");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) { return has(key) ? as_number(j_.at(key), at(key)) : fallback; }
  int integer(const std::string& key, int fallback) { return has(key) ? as_int(j_.at(key), at(key)) : fallback; }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? as_string(j_.at(key), at(key)) : fallback;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(at(item.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }
  static int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }
  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }
  template <std::size_t N>
  static std::array<double, N> as_array(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != N) fail(path, fmt::format("expected an array of {} numbers", N));
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = as_number(v[i], fmt::format("{}/{}", path, i));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int parse_channel(const json& v, const std::string& path) {
  const auto c = channel_from_name(Section::as_string(v, path));
  if (!c) fail(path, "unknown channel (expected x, y, z, roll, pitch or yaw)");
  return *c;
}

Loop parse_loop(const std::string& name, const std::string& path) {
  const auto l = loop_from_name(name);
  if (!l) fail(path, fmt::format("unknown loop '{}'", name));
  return *l;
}

/// Parameter indices addressed by a block name ("yaw") or a parameter name
/// ("yaw.kp").
std::vector<int> addressed(const std::string& name, const std::string& path) {
  if (const auto i = ParamVector::index_of(name)) return {*i};
  const Loop l = parse_loop(name, path);
  return {ParamVector::index(l, 0), ParamVector::index(l, 1), ParamVector::index(l, 2)};
}

void parse_bounds(const json& j, const std::string& path, ParamBox& box) {
  Section s(j, path);
  for (Loop l : kAllLoops) {
    const std::string key(loop_name(l));
    if (!s.has(key)) continue;
    Section b(s.get(key), s.at(key));
    const auto lo = Section::as_array<3>(b.get("min"), b.at("min"));
    const auto hi = Section::as_array<3>(b.get("max"), b.at("max"));
    b.finish();
    box.lo.set_gains(l, {lo[0], lo[1], lo[2]});
    box.hi.set_gains(l, {hi[0], hi[1], hi[2]});
  }
  s.finish();
}

json bounds_to_json(const ParamBox& box) {
  json out = json::object();
  for (Loop l : kAllLoops) {
    const Gains lo = box.lo.gains(l), hi = box.hi.gains(l);
    out[std::string(loop_name(l))] = {{"min", {lo.kp, lo.ki, lo.kd}}, {"max", {hi.kp, hi.ki, hi.kd}}};
  }
  return out;
}

void parse_plant(const json& j, RunConfig& c) {
  Section s(j, "/plant");
  auto& p = c.plant;
  if (s.has("inertia")) p.inertia = Section::as_array<6>(s.get("inertia"), s.at("inertia"));
  if (s.has("linear_damping")) p.linear_damping = Section::as_array<6>(s.get("linear_damping"), s.at("linear_damping"));
  if (s.has("quadratic_damping")) {
    p.quadratic_damping = Section::as_array<6>(s.get("quadratic_damping"), s.at("quadratic_damping"));
  }
  p.weight = s.number("weight", p.weight);
  p.buoyancy = s.number("buoyancy", p.buoyancy);
  p.restoring_offset = s.number("restoring_offset", p.restoring_offset);
  p.force_limit = s.number("force_limit", p.force_limit);
  p.torque_limit = s.number("torque_limit", p.torque_limit);
  c.settings.integrator.substeps = s.integer("integrator_substeps", c.settings.integrator.substeps);
  s.finish();
}

void parse_controller(const json& j, RunConfig& c) {
  Section s(j, "/controller");
  c.settings.sample_period = s.number("sample_period", c.settings.sample_period);
  if (s.has("bounds")) parse_bounds(s.get("bounds"), s.at("bounds"), c.bounds);
  s.finish();
}

WaypointReference parse_waypoints(Section& s, WaypointReference ref) {
  const bool square = s.has("trajectory");
  const bool listed = s.has("waypoints");
  if (square == listed) fail(s.path(), "give exactly one of 'trajectory' or 'waypoints'");
  if (square) {
    if (Section::as_string(s.get("trajectory"), s.at("trajectory")) != "square") {
      fail(s.at("trajectory"), "only the 'square' trajectory is built in");
    }
    ref.waypoints = square_waypoints(s.number("side", 3.0));
  } else {
    const json& w = s.get("waypoints");
    if (!w.is_array()) fail(s.at("waypoints"), "expected an array of 6-vectors");
    ref.waypoints.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      ref.waypoints.push_back(Section::as_array<6>(w[i], fmt::format("{}/{}", s.at("waypoints"), i)));
    }
  }
  ref.reach_radius = s.number("reach_radius", ref.reach_radius);
  const std::string metric = s.string("distance", "position");
  if (metric == "position") {
    ref.metric = DistanceMetric::Position;
  } else if (metric == "full") {
    ref.metric = DistanceMetric::Full;
  } else {
    fail(s.at("distance"), "expected 'position' or 'full'");
  }
  return ref;
}

json waypoints_to_json(const WaypointReference& ref) {
  json w = json::array();
  for (const auto& p : ref.waypoints) w.push_back(p);
  return {{"waypoints", w},
          {"reach_radius", ref.reach_radius},
          {"distance", ref.metric == DistanceMetric::Position ? "position" : "full"}};
}

TaskSpec parse_task(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string type = Section::as_string(s.get("type"), s.at("type"));
  TaskSpec task;
  if (type == "step") {
    StepTask t;
    t.channel = parse_channel(s.get("channel"), s.at("channel"));
    t.amplitude = Section::as_number(s.get("amplitude"), s.at("amplitude"));
    t.step_time = s.number("step_time", t.step_time);
    t.duration = s.number("duration", t.duration);
    task = t;
  } else if (type == "waypoint") {
    WaypointTask t;
    t.reference = parse_waypoints(s, t.reference);
    t.max_duration = s.number("max_duration", t.max_duration);
    task = t;
  } else {
    fail(s.at("type"), "expected 'step' or 'waypoint'");
  }
  s.finish();
  return task;
}

json task_to_json(const TaskSpec& task) {
  if (const auto* t = std::get_if<StepTask>(&task)) {
    return {{"type", "step"},
            {"channel", std::string(channel_name(t->channel))},
            {"amplitude", t->amplitude},
            {"step_time", t->step_time},
            {"duration", t->duration}};
  }
  const auto& w = std::get<WaypointTask>(task);
  json out = waypoints_to_json(w.reference);
  out["type"] = "waypoint";
  out["max_duration"] = w.max_duration;
  return out;
}

ObjectiveSpec parse_objective(const json& j, const std::string& path) {
  Section s(j, path);
  ObjectiveSpec o;
  const std::string metric = Section::as_string(s.get("metric"), s.at("metric"));
  if (metric == "iae") {
    o.metric = Metric::Iae;
  } else if (metric == "etx_iae") {
    o.metric = Metric::EtxIae;
  } else {
    fail(s.at("metric"), "expected 'iae' or 'etx_iae'");
  }
  const json& ch = s.get("channels");
  if (!ch.is_array()) fail(s.at("channels"), "expected an array of channel names");
  for (std::size_t i = 0; i < ch.size(); ++i) o.channels.push_back(parse_channel(ch[i], fmt::format("{}/{}", s.at("channels"), i)));
  s.finish();
  return o;
}

json objective_to_json(const ObjectiveSpec& o) {
  json ch = json::array();
  for (int c : o.channels) ch.push_back(std::string(channel_name(c)));
  return {{"metric", o.metric == Metric::Iae ? "iae" : "etx_iae"}, {"channels", ch}};
}

void parse_bo(const json& j, const std::string& path, BoConfig& bo) {
  Section s(j, path);
  bo.max_evaluations = s.integer("max_iterations", bo.max_evaluations);
  bo.initial_design = s.integer("initial_design", bo.initial_design);
  bo.exploration_fraction = s.number("exploration", bo.exploration_fraction);
  bo.candidates_per_dim = s.integer("candidates_per_dim", bo.candidates_per_dim);
  bo.polish_count = s.integer("polish", bo.polish_count);
  bo.refit_every = s.integer("refit_every", bo.refit_every);
  bo.refit_warmup = s.integer("refit_warmup", bo.refit_warmup);
  s.finish();
}

json bo_to_json(const BoConfig& bo, bool with_cap) {
  json out = {{"initial_design", bo.initial_design},
              {"exploration", bo.exploration_fraction},
              {"candidates_per_dim", bo.candidates_per_dim},
              {"polish", bo.polish_count},
              {"refit_every", bo.refit_every},
              {"refit_warmup", bo.refit_warmup}};
  if (with_cap) out["max_iterations"] = bo.max_evaluations;
  return out;
}

ThresholdSpec parse_threshold(const json& v, const std::string& path, double margin) {
  if (v.is_null()) return {ThresholdMode::None, 0.0, margin};
  if (v.is_number()) return {ThresholdMode::Fixed, v.get<double>(), margin};
  if (v.is_string() && v.get<std::string>() == "critical_damping") return {ThresholdMode::CriticalDamping, 0.0, margin};
  fail(path, "expected null, a number or \"critical_damping\"");
}

json threshold_to_json(const ThresholdSpec& t) {
  switch (t.mode) {
    case ThresholdMode::None:
      return nullptr;
    case ThresholdMode::Fixed:
      return t.value;
    case ThresholdMode::CriticalDamping:
      return "critical_damping";
  }
  return nullptr;
}

/// Per-parameter values from an object keyed by block or parameter name. A
/// block takes a number (all three gains) or a 3-array; a parameter takes a
/// number. With allow_from_stage, {"from_stage": k} is accepted as well.
void parse_assignments(const json& j, const std::string& path, bool allow_from_stage,
                       const std::function<void(int, const FixedValue&, const std::string&)>& assign) {
  Section s(j, path);
  for (const auto& item : j.items()) {
    const std::string key = item.key();
    const std::string at = s.at(key);
    s.has(key);
    const auto indices = addressed(key, at);
    const json& v = item.value();
    if (v.is_number()) {
      for (int i : indices) assign(i, v.get<double>(), at);
    } else if (v.is_array()) {
      if (indices.size() != 3) fail(at, "an array value needs a block name");
      const auto a = Section::as_array<3>(v, at);
      for (std::size_t g = 0; g < 3; ++g) assign(indices[g], a[g], at);
    } else if (allow_from_stage && v.is_object()) {
      Section f(v, at);
      const int stage = Section::as_int(f.get("from_stage"), f.at("from_stage"));
      f.finish();
      for (int i : indices) assign(i, FromStage{stage}, at);
    } else {
      fail(at, allow_from_stage ? "expected a number, a 3-array or {\"from_stage\": k}" : "expected a number or a 3-array");
    }
  }
}

StageSpec parse_stage(const json& j, const std::string& path, const RunConfig& c) {
  Section s(j, path);
  StageSpec st;
  st.name = Section::as_string(s.get("name"), s.at("name"));
  st.fixed.fill(true);
  st.fixed_values.fill(FixedValue{0.0});

  const json& free = s.get("free");
  if (!free.is_array() || free.empty()) fail(s.at("free"), "expected a non-empty array of block or parameter names");
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::string at = fmt::format("{}/{}", s.at("free"), k);
    for (int i : addressed(Section::as_string(free[k], at), at)) {
      if (!st.fixed[static_cast<std::size_t>(i)]) fail(at, fmt::format("{} listed twice", ParamVector::name(i)));
      st.fixed[static_cast<std::size_t>(i)] = false;
    }
  }
  if (s.has("fixed")) {
    parse_assignments(s.get("fixed"), s.at("fixed"), true, [&](int i, const FixedValue& v, const std::string& at) {
      if (!st.fixed[static_cast<std::size_t>(i)]) fail(at, fmt::format("{} is free in this stage", ParamVector::name(i)));
      st.fixed_values[static_cast<std::size_t>(i)] = v;
    });
  }

  st.box = c.bounds;
  if (s.has("box")) parse_bounds(s.get("box"), s.at("box"), st.box);
  st.task = parse_task(s.get("task"), s.at("task"));
  st.objective = parse_objective(s.get("objective"), s.at("objective"));
  if (s.has("bo")) parse_bo(s.get("bo"), s.at("bo"), st.bo);
  const double margin = s.number("threshold_margin", 0.2);
  st.threshold = s.has("threshold") ? parse_threshold(s.get("threshold"), s.at("threshold"), margin)
                                    : ThresholdSpec{ThresholdMode::None, 0.0, margin};
  if (s.has("warm_start")) {
    ParamVector w;
    parse_assignments(s.get("warm_start"), s.at("warm_start"), false,
                      [&](int i, const FixedValue& v, const std::string&) { w[i] = std::get<double>(v); });
    st.warm_start = w;
  }
  s.finish();
  return st;
}

json stage_to_json(const StageSpec& st) {
  json free = json::array();
  json fixed = json::object();
  for (int i = 0; i < ParamVector::kSize; ++i) {
    const auto& v = st.fixed_values[static_cast<std::size_t>(i)];
    if (!st.fixed[static_cast<std::size_t>(i)]) {
      free.push_back(ParamVector::name(i));
    } else if (const auto* r = std::get_if<FromStage>(&v)) {
      fixed[ParamVector::name(i)] = {{"from_stage", r->stage}};
    } else {
      fixed[ParamVector::name(i)] = std::get<double>(v);
    }
  }
  json out = {{"name", st.name},
              {"free", free},
              {"fixed", fixed},
              {"box", bounds_to_json(st.box)},
              {"task", task_to_json(st.task)},
              {"objective", objective_to_json(st.objective)},
              {"bo", bo_to_json(st.bo, true)},
              {"threshold", threshold_to_json(st.threshold)},
              {"threshold_margin", st.threshold.margin}};
  if (st.warm_start) {
    json w = json::object();
    for (int i = 0; i < ParamVector::kSize; ++i) w[ParamVector::name(i)] = (*st.warm_start)[i];
    out["warm_start"] = w;
  }
  return out;
}

std::uint64_t parse_seed(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer seed");
  return v.get<std::uint64_t>();
}

void parse_pipeline(const json& j, RunConfig& c) {
  Section s(j, "/pipeline");
  PipelineSpec p;
  p.name = s.string("name", "pipeline");
  p.seed = s.has("seed") ? parse_seed(s.get("seed"), s.at("seed")) : 0;
  p.global_box = c.bounds;
  p.episode = c.settings;
  const json& stages = s.get("stages");
  if (!stages.is_array()) fail(s.at("stages"), "expected an array of stages");
  for (std::size_t k = 0; k < stages.size(); ++k) {
    p.stages.push_back(parse_stage(stages[k], fmt::format("{}/{}", s.at("stages"), k), c));
  }
  s.finish();
  c.pipeline = std::move(p);
}

void parse_benchmark(const json& j, RunConfig& c) {
  Section s(j, "/benchmark");
  BenchmarkSpec b;
  b.box = c.bounds;
  b.episode = c.settings;
  if (s.has("seeds")) {
    const json& seeds = s.get("seeds");
    if (!seeds.is_array()) fail(s.at("seeds"), "expected an array of seeds");
    b.seeds.clear();
    for (std::size_t k = 0; k < seeds.size(); ++k) b.seeds.push_back(parse_seed(seeds[k], fmt::format("{}/{}", s.at("seeds"), k)));
  }
  if (s.has("variants")) {
    const json& vs = s.get("variants");
    if (!vs.is_array()) fail(s.at("variants"), "expected an array of variant names");
    b.variants.clear();
    for (std::size_t k = 0; k < vs.size(); ++k) {
      const std::string at = fmt::format("{}/{}", s.at("variants"), k);
      const auto v = variant_from_name(Section::as_string(vs[k], at));
      if (!v) fail(at, "expected 'individual' or 'simultaneous'");
      b.variants.push_back(*v);
    }
  }
  if (s.has("caps")) {
    Section caps(s.get("caps"), s.at("caps"));
    b.simultaneous_cap = caps.integer("simultaneous", b.simultaneous_cap);
    if (caps.has("individual")) {
      const auto a = Section::as_array<6>(caps.get("individual"), caps.at("individual"));
      for (std::size_t k = 0; k < 6; ++k) {
        if (a[k] != std::floor(a[k])) fail(caps.at("individual"), "caps must be integers");
        b.individual_caps[k] = static_cast<int>(a[k]);
      }
    }
    caps.finish();
  }
  const double margin = s.number("threshold_margin", b.step_threshold.margin);
  b.step_threshold.margin = margin;
  if (s.has("step_threshold")) b.step_threshold = parse_threshold(s.get("step_threshold"), s.at("step_threshold"), margin);
  if (s.has("trajectory_threshold")) {
    const auto t = parse_threshold(s.get("trajectory_threshold"), s.at("trajectory_threshold"), 0.0);
    if (t.mode == ThresholdMode::CriticalDamping) fail(s.at("trajectory_threshold"), "expected null or a number");
    if (t.mode == ThresholdMode::Fixed) b.trajectory_threshold = t.value;
  }
  if (s.has("trajectory")) {
    Section t(s.get("trajectory"), s.at("trajectory"));
    b.trajectory = parse_waypoints(t, b.trajectory);
    t.finish();
  }
  b.trajectory_duration = s.number("trajectory_duration", b.trajectory_duration);
  b.step_duration = s.number("step_duration", b.step_duration);
  if (s.has("amplitudes")) {
    Section a(s.get("amplitudes"), s.at("amplitudes"));
    b.attitude_amplitude = a.number("attitude", b.attitude_amplitude);
    b.position_amplitude = a.number("position", b.position_amplitude);
    a.finish();
  }
  if (s.has("bo")) parse_bo(s.get("bo"), s.at("bo"), b.bo);
  b.jobs = s.integer("jobs", b.jobs);
  s.finish();
  c.benchmark = std::move(b);
}

json benchmark_to_json(const BenchmarkSpec& b) {
  json variants = json::array();
  for (Variant v : b.variants) variants.push_back(std::string(variant_name(v)));
  json traj = waypoints_to_json(b.trajectory);
  return {{"seeds", b.seeds},
          {"variants", variants},
          {"caps", {{"simultaneous", b.simultaneous_cap}, {"individual", b.individual_caps}}},
          {"step_threshold", threshold_to_json(b.step_threshold)},
          {"threshold_margin", b.step_threshold.margin},
          {"trajectory_threshold", b.trajectory_threshold ? json(*b.trajectory_threshold) : json(nullptr)},
          {"trajectory", traj},
          {"trajectory_duration", b.trajectory_duration},
          {"step_duration", b.step_duration},
          {"amplitudes", {{"attitude", b.attitude_amplitude}, {"position", b.position_amplitude}}},
          {"bo", bo_to_json(b.bo, false)},
          {"jobs", b.jobs}};
}

}  // namespace

void RunConfig::validate() const {
  plant.validate();
  bounds.validate();
  if (!(settings.sample_period > 0.0) || !std::isfinite(settings.sample_period)) {
    throw ConfigError("/controller/sample_period: must be positive");
  }
  if (settings.integrator.substeps < 1) throw ConfigError("/plant/integrator_substeps: must be >= 1");
  if (pipeline) pipeline->validate();
  if (benchmark) benchmark->validate();
  if (episode) {
    episode->objective.validate();
    if (const auto* w = std::get_if<WaypointTask>(&episode->task)) w->reference.validate();
    make_episode(episode->task, ParamVector{}, settings);
    if (episode->objective.metric == Metric::EtxIae) {
      const double horizon = std::holds_alternative<StepTask>(episode->task)
                                 ? std::get<StepTask>(episode->task).duration
                                 : std::get<WaypointTask>(episode->task).max_duration;
      if (horizon > kMaxExpHorizon) throw ConfigError("/episode: eTxIAE horizon too long");
    }
  }
}

RunConfig parse_config(const json& doc) {
  Section root(doc, "");
  RunConfig c;
  // Plant and controller first: later sections inherit bounds and timing.
  if (root.has("plant")) parse_plant(root.get("plant"), c);
  if (root.has("controller")) parse_controller(root.get("controller"), c);
  if (root.has("pipeline")) parse_pipeline(root.get("pipeline"), c);
  if (root.has("benchmark")) parse_benchmark(root.get("benchmark"), c);
  if (root.has("episode")) {
    Section e(root.get("episode"), "/episode");
    c.episode = EpisodeSection{parse_task(e.get("task"), e.at("task")), parse_objective(e.get("objective"), e.at("objective"))};
    e.finish();
  }
  c.output_dir = root.string("output_dir", c.output_dir);
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  const auto& p = c.plant;
  json out = {
      {"plant",
       {{"inertia", p.inertia},
        {"linear_damping", p.linear_damping},
        {"quadratic_damping", p.quadratic_damping},
        {"weight", p.weight},
        {"buoyancy", p.buoyancy},
        {"restoring_offset", p.restoring_offset},
        {"force_limit", p.force_limit},
        {"torque_limit", p.torque_limit},
        {"integrator_substeps", c.settings.integrator.substeps}}},
      {"controller", {{"sample_period", c.settings.sample_period}, {"bounds", bounds_to_json(c.bounds)}}},
      {"output_dir", c.output_dir}};
  if (c.pipeline) {
    json stages = json::array();
    for (const auto& st : c.pipeline->stages) stages.push_back(stage_to_json(st));
    out["pipeline"] = {{"name", c.pipeline->name}, {"seed", c.pipeline->seed}, {"stages", stages}};
  }
  if (c.benchmark) out["benchmark"] = benchmark_to_json(*c.benchmark);
  if (c.episode) out["episode"] = {{"task", task_to_json(c.episode->task)}, {"objective", objective_to_json(c.episode->objective)}};
  return out;
}

}  // namespace stagetune

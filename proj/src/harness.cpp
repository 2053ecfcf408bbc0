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

#include "stagetune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

constexpr int kGainCount = 3;

void set_block(ParamBox& box, Loop loop, const Gains& lo, const Gains& hi) {
  box.lo.set_gains(loop, lo);
  box.hi.set_gains(loop, hi);
}

std::vector<int> position_channels() { return {0, 1, 2}; }

StageSpec base_stage(const BenchmarkSpec& spec) {
  StageSpec st;
  st.box = spec.box;
  st.bo = spec.bo;
  st.fixed.fill(true);
  st.fixed_values.fill(FixedValue{0.0});
  return st;
}

}  // namespace

std::string_view variant_name(Variant v) { return v == Variant::Individual ? "individual" : "simultaneous"; }

std::optional<Variant> variant_from_name(std::string_view name) {
  if (name == "individual") return Variant::Individual;
  if (name == "simultaneous") return Variant::Simultaneous;
  return std::nullopt;
}

ParamBox benchmark_box() {
  ParamBox box;
  for (Loop l : {Loop::Roll, Loop::Pitch, Loop::Yaw}) set_block(box, l, {0, 0, 0}, {5, 5, 5});
  for (Loop l : {Loop::X, Loop::Y}) set_block(box, l, {150, 0, 75}, {250, 10, 150});
  set_block(box, Loop::Z, {145, 0, 95}, {155, 5, 105});
  return box;
}

std::vector<Channels6> square_waypoints(double side) {
  const double h = 0.5 * side;
  const double xy[8][2] = {{h, 0}, {side, 0}, {side, h}, {side, side}, {h, side}, {0, side}, {0, h}, {0, 0}};
  std::vector<Channels6> out;
  for (const auto& p : xy) out.push_back({p[0], p[1], 0, 0, 0, 0});
  return out;
}

void BenchmarkSpec::validate() const {
  if (seeds.empty()) throw ConfigError("benchmark: seed list is empty");
  if (variants.empty()) throw ConfigError("benchmark: no variants selected");
  if (simultaneous_cap < 1) throw ConfigError("benchmark: simultaneous cap must be positive");
  for (int c : individual_caps) {
    if (c < 1) throw ConfigError("benchmark: individual caps must be positive");
  }
  trajectory.validate();
  for (const auto& w : trajectory.waypoints) {
    for (int c = 2; c < 6; ++c) {
      if (w[static_cast<std::size_t>(c)] != 0.0) {
        throw ConfigError("benchmark: trajectory waypoints must keep z and attitude at 0");
      }
    }
  }
  if (trajectory_duration > kMaxExpHorizon) {
    throw ConfigError(fmt::format("benchmark: trajectory duration exceeds {} s", kMaxExpHorizon));
  }
  if (step_threshold.mode == ThresholdMode::Fixed && !std::isfinite(step_threshold.value)) {
    throw ConfigError("benchmark: step threshold must be finite");
  }
  if (trajectory_threshold && !std::isfinite(*trajectory_threshold)) {
    throw ConfigError("benchmark: trajectory threshold must be finite");
  }
  if (jobs < 1) throw ConfigError("benchmark: jobs must be >= 1");
  for (Variant v : variants) build_benchmark(v, *this, seeds.front()).validate();
}

PipelineSpec build_benchmark(Variant variant, const BenchmarkSpec& spec, std::uint64_t seed) {
  PipelineSpec p;
  p.name = std::string(variant_name(variant));
  p.global_box = spec.box;
  p.episode = spec.episode;
  p.seed = seed;

  if (variant == Variant::Simultaneous) {
    StageSpec st = base_stage(spec);
    st.name = "all";
    st.fixed.fill(false);
    st.task = WaypointTask{spec.trajectory, spec.trajectory_duration};
    st.objective = {Metric::EtxIae, position_channels()};
    st.bo.max_evaluations = spec.simultaneous_cap;
    if (spec.trajectory_threshold) st.threshold = {ThresholdMode::Fixed, *spec.trajectory_threshold, 0.0};
    p.stages.push_back(std::move(st));
    return p;
  }

  std::array<int, 6> tuned_in{};
  for (std::size_t s = 0; s < kIndividualOrder.size(); ++s) {
    const Loop loop = kIndividualOrder[s];
    StageSpec st = base_stage(spec);
    st.name = std::string(loop_name(loop));
    for (int g = 0; g < kGainCount; ++g) st.fixed[static_cast<std::size_t>(ParamVector::index(loop, g))] = false;
    if (!is_angular(loop)) {
      for (Loop prior : {Loop::Roll, Loop::Pitch, Loop::Yaw}) {
        const int from = tuned_in[static_cast<std::size_t>(prior)];
        if (from == 0) continue;
        for (int g = 0; g < kGainCount; ++g) {
          st.fixed_values[static_cast<std::size_t>(ParamVector::index(prior, g))] = FromStage{from};
        }
      }
    }
    const int channel = loop_channel(loop);
    StepTask task;
    task.channel = channel;
    task.amplitude = is_angular(loop) ? spec.attitude_amplitude : spec.position_amplitude;
    task.duration = spec.step_duration;
    st.task = task;
    st.objective = {Metric::Iae, {channel}};
    st.bo.max_evaluations = spec.individual_caps[s];
    st.threshold = spec.step_threshold;
    tuned_in[static_cast<std::size_t>(loop)] = static_cast<int>(s) + 1;
    p.stages.push_back(std::move(st));
  }
  return p;
}

ParamVector manual_baseline(const ParamBox& box) { return box.midpoint(); }

FinalEvaluation evaluate_final(const ParamVector& params, const BenchmarkSpec& spec, const AuvPlant& plant) {
  FinalEvaluation out;
  const EpisodeSpec episode = make_episode(WaypointTask{spec.trajectory, spec.trajectory_duration}, params, spec.episode);
  out.trail = run_episode(episode, plant);
  out.completed = out.trail.completed;
  out.diverged = out.trail.diverged;
  if (out.diverged) {
    out.cost = divergence_sentinel(0.0);
    out.completion_time = spec.trajectory_duration;
  } else {
    const auto channels = position_channels();
    out.cost = etx_iae(out.trail, channels);
    out.completion_time = out.trail.completion_time;
  }
  return out;
}

Stats summarize(const std::vector<double>& values) {
  Stats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

double relative_delta(double simultaneous, double individual) {
  if (simultaneous == 0.0) throw std::domain_error("relative_delta: simultaneous value is zero");
  return (simultaneous - individual) / simultaneous;
}

const VariantSummary* ComparisonReport::summary(Variant v) const {
  for (const auto& s : summaries) {
    if (s.variant == v) return &s;
  }
  return nullptr;
}

namespace {

SeedRun run_replicate(Variant variant, std::uint64_t seed, const BenchmarkSpec& spec, const AuvPlant& plant,
                      const EvaluationObserver& observer) {
  SeedRun run;
  run.variant = variant;
  run.seed = seed;
  const auto started = std::chrono::steady_clock::now();
  int counted = 0;
  auto audit = [&](const EvaluationEvent& e) {
    ++counted;
    if (observer) observer(e);
  };
  try {
    run.tune = run_pipeline(build_benchmark(variant, spec, seed), plant, audit);
    run.audited_episodes = counted;
    for (const auto& st : run.tune.stages) {
      run.samples += st.evaluations;
    }
    run.tuning_hours = run.tune.simulated_seconds / 3600.0;
    if (!run.tune.completed) {
      run.failure = run.tune.failure;
    } else if (run.samples != run.audited_episodes) {
      run.failure = fmt::format("sample count {} disagrees with {} audited episodes", run.samples,
                                run.audited_episodes);
    } else {
      run.final = evaluate_final(run.tune.best, spec, plant);
      run.ok = true;
    }
  } catch (const std::exception& e) {
    run.audited_episodes = counted;
    run.failure = e.what();
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

}  // namespace

ComparisonReport compare(const BenchmarkSpec& spec, const AuvPlant& plant, const EvaluationObserver& observer) {
  spec.validate();
  ComparisonReport report;

  struct Job {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant v : spec.variants) {
    for (std::uint64_t s : spec.seeds) jobs.push_back({v, s});
  }
  report.runs.resize(jobs.size());

  if (spec.jobs <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      report.runs[i] = run_replicate(jobs[i].variant, jobs[i].seed, spec, plant, observer);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        report.runs[i] = run_replicate(jobs[i].variant, jobs[i].seed, spec, plant, observer);
      }
    };
    std::vector<std::future<void>> workers;
    const int n = std::min<int>(spec.jobs, static_cast<int>(jobs.size()));
    for (int t = 0; t < n; ++t) workers.push_back(std::async(std::launch::async, worker));
    for (auto& w : workers) w.get();
  }

  for (Variant v : spec.variants) {
    VariantSummary s;
    s.variant = v;
    std::vector<double> cost, time, hours, samples;
    for (const auto& r : report.runs) {
      if (r.variant != v) continue;
      if (!r.ok) {
        ++s.failed;
        report.warnings.push_back(fmt::format("{} seed {} excluded: {}", variant_name(v), r.seed, r.failure));
        continue;
      }
      cost.push_back(r.final.cost);
      time.push_back(r.final.completion_time);
      hours.push_back(r.tuning_hours);
      samples.push_back(r.samples);
    }
    s.cost = summarize(cost);
    s.completion_time = summarize(time);
    s.tuning_hours = summarize(hours);
    s.samples = summarize(samples);
    report.summaries.push_back(s);
  }

  report.manual = evaluate_final(manual_baseline(spec.box), spec, plant);

  const auto* ind = report.summary(Variant::Individual);
  const auto* sim = report.summary(Variant::Simultaneous);
  if (ind && sim && ind->samples.count > 0 && sim->samples.count > 0) {
    report.tuning_time_delta = relative_delta(sim->tuning_hours.mean, ind->tuning_hours.mean);
    report.samples_delta = relative_delta(sim->samples.mean, ind->samples.mean);
  }
  return report;
}

}  // namespace stagetune

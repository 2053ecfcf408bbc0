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

#include "stagetune/multistage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "stagetune/errors.hpp"
#include "stagetune/rng.hpp"

namespace stagetune {
namespace {

constexpr double kSentinelCap = 1e300;

int sample_count(double duration, double period, const std::string& what) {
  const double k = duration / period;
  const double rounded = std::round(k);
  if (!(duration > 0.0) || rounded < 1.0 || std::abs(k - rounded) > 1e-9 * std::max(1.0, k)) {
    throw ConfigError(fmt::format("{}: duration {} s is not a positive multiple of the sample period {} s", what,
                                  duration, period));
  }
  return static_cast<int>(rounded);
}

std::vector<std::string> names_of(const std::vector<int>& indices) {
  std::vector<std::string> out;
  for (int i : indices) out.push_back(ParamVector::name(i));
  return out;
}

}  // namespace

std::vector<int> StageSpec::free_indices() const {
  std::vector<int> out;
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

int StageSpec::free_count() const { return static_cast<int>(free_indices().size()); }

void PipelineSpec::validate() const {
  global_box.validate();
  if (!(episode.sample_period > 0.0)) throw ConfigError("sample period must be positive");
  if (episode.integrator.substeps < 1) throw ConfigError("integrator substeps must be >= 1");
  const int n_stages = static_cast<int>(stages.size());
  if (n_stages < 1 || n_stages > 6) {
    throw ConfigError(fmt::format("pipeline needs between 1 and 6 stages (one per plant input), got {}", n_stages));
  }

  std::array<int, ParamVector::kSize> freed_by{};
  freed_by.fill(0);
  std::vector<int> overlapping;
  for (int s = 0; s < n_stages; ++s) {
    const StageSpec& st = stages[static_cast<std::size_t>(s)];
    const auto label = fmt::format("stage {} ({})", s + 1, st.name);
    const auto free = st.free_indices();
    if (free.empty()) throw ConfigError(fmt::format("{}: no free parameters", label));
    for (int i : free) {
      auto& owner = freed_by[static_cast<std::size_t>(i)];
      if (owner != 0 && std::find(overlapping.begin(), overlapping.end(), i) == overlapping.end()) {
        overlapping.push_back(i);
      }
      if (owner == 0) owner = s + 1;
    }

    st.box.validate();
    for (int i : free) {
      if (st.box.lo[i] < global_box.lo[i] || st.box.hi[i] > global_box.hi[i]) {
        throw ConfigError(fmt::format("{}: box for {} is not inside the global box", label, ParamVector::name(i)));
      }
    }

    for (int i = 0; i < ParamVector::kSize; ++i) {
      if (!st.fixed[static_cast<std::size_t>(i)]) continue;
      const auto& v = st.fixed_values[static_cast<std::size_t>(i)];
      if (const auto* ref = std::get_if<FromStage>(&v)) {
        if (ref->stage < 1 || ref->stage > s) {
          throw ConfigError(fmt::format("{}: {} refers to stage {}, which does not precede it", label,
                                        ParamVector::name(i), ref->stage));
        }
        if (stages[static_cast<std::size_t>(ref->stage - 1)].fixed[static_cast<std::size_t>(i)]) {
          throw ConfigError(fmt::format("{}: {} refers to stage {}, which does not tune it", label,
                                        ParamVector::name(i), ref->stage));
        }
      } else if (!std::isfinite(std::get<double>(v))) {
        throw ConfigError(fmt::format("{}: fixed value for {} is not finite", label, ParamVector::name(i)));
      }
    }

    if (const auto* step = std::get_if<StepTask>(&st.task)) {
      if (step->channel < 0 || step->channel >= 6) throw ConfigError(fmt::format("{}: step channel out of range", label));
      if (!std::isfinite(step->amplitude) || !(step->step_time >= 0.0)) {
        throw ConfigError(fmt::format("{}: invalid step amplitude or step time", label));
      }
      sample_count(step->duration, episode.sample_period, label);
    } else {
      const auto& wp = std::get<WaypointTask>(st.task);
      wp.reference.validate();
      sample_count(wp.max_duration, episode.sample_period, label);
    }

    st.objective.validate();
    if (st.objective.metric == Metric::Iae && std::holds_alternative<StepTask>(st.task) &&
        st.objective.channels.size() != 1) {
      throw ConfigError(fmt::format("{}: IAE on a step task must use exactly one channel", label));
    }
    if (st.objective.metric == Metric::EtxIae) {
      const double horizon = std::visit(
          [](const auto& t) {
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, StepTask>) {
              return t.duration;
            } else {
              return t.max_duration;
            }
          },
          st.task);
      if (horizon > kMaxExpHorizon) {
        throw ConfigError(fmt::format("{}: eTxIAE horizon {} s exceeds {} s", label, horizon, kMaxExpHorizon));
      }
    }

    if (st.threshold.mode == ThresholdMode::Fixed && !std::isfinite(st.threshold.value)) {
      throw ConfigError(fmt::format("{}: threshold must be finite", label));
    }
    if (st.threshold.mode == ThresholdMode::CriticalDamping) {
      if (!std::holds_alternative<StepTask>(st.task)) {
        throw ConfigError(fmt::format("{}: critical-damping threshold needs a step task", label));
      }
      if (free.size() != 3 || free[0] % 3 != 0 || free[2] != free[0] + 2) {
        throw ConfigError(fmt::format("{}: critical-damping threshold needs exactly one free loop", label));
      }
      if (!(st.threshold.margin >= 0.0)) throw ConfigError(fmt::format("{}: threshold margin must be >= 0", label));
    }

    if (st.warm_start) {
      for (int i : free) {
        const double w = (*st.warm_start)[i];
        if (!(w >= st.box.lo[i] && w <= st.box.hi[i])) {
          throw ConfigError(fmt::format("{}: warm start for {} outside the stage box", label, ParamVector::name(i)));
        }
      }
    }

    BoConfig probe = stage_bo_config(st, s, seed);
    probe.validate();
  }

  int total = 0;
  for (const auto& st : stages) total += st.free_count();
  if (!overlapping.empty()) {
    const auto names = fmt::format("{}", fmt::join(names_of(overlapping), ", "));
    if (total > ParamVector::kSize) {
      throw ConfigError(fmt::format("free parameters sum to {} > {}; freed by more than one stage: {}", total,
                                    ParamVector::kSize, names));
    }
    throw ConfigError(fmt::format("parameters freed by more than one stage: {}", names));
  }
}

std::vector<double> reduce(const ParamVector& full, const StageSpec& stage) {
  std::vector<double> out;
  for (int i : stage.free_indices()) out.push_back(full[i]);
  return out;
}

ParamVector embed(std::span<const double> reduced, const StageSpec& stage, const ParamVector& fixed_reference) {
  const auto free = stage.free_indices();
  if (reduced.size() != free.size()) throw std::invalid_argument("embed: reduced vector has wrong size");
  ParamVector full = fixed_reference;
  for (std::size_t k = 0; k < free.size(); ++k) full[free[k]] = reduced[k];
  return full;
}

ParamVector resolve_fixed(const StageSpec& stage, const std::vector<ParamVector>& optima) {
  ParamVector out;
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (!stage.fixed[static_cast<std::size_t>(i)]) continue;
    const auto& v = stage.fixed_values[static_cast<std::size_t>(i)];
    if (const auto* ref = std::get_if<FromStage>(&v)) {
      if (ref->stage < 1 || ref->stage > static_cast<int>(optima.size())) {
        throw ConfigError(fmt::format("{} refers to stage {}, which has not run", ParamVector::name(i), ref->stage));
      }
      out[i] = optima[static_cast<std::size_t>(ref->stage - 1)][i];
    } else {
      out[i] = std::get<double>(v);
    }
  }
  return out;
}

EpisodeSpec make_episode(const TaskSpec& task, const ParamVector& params, const EpisodeSettings& settings) {
  EpisodeSpec spec;
  spec.sample_period = settings.sample_period;
  spec.integrator = settings.integrator;
  spec.x0 = Vector::Zero(AuvPlant::kStateDim);
  spec.params = params;
  if (const auto* step = std::get_if<StepTask>(&task)) {
    StepReference ref;
    ref.channel = step->channel;
    ref.amplitude = step->amplitude;
    ref.step_time = step->step_time;
    spec.reference = ref;
    spec.max_samples = sample_count(step->duration, settings.sample_period, "step task");
  } else {
    const auto& wp = std::get<WaypointTask>(task);
    spec.reference = wp.reference;
    spec.max_samples = sample_count(wp.max_duration, settings.sample_period, "waypoint task");
  }
  return spec;
}

std::optional<double> reference_step_iae(const StageSpec& stage, const AuvPlant& plant) {
  const auto* step = std::get_if<StepTask>(&stage.task);
  if (!step) return std::nullopt;
  const auto free = stage.free_indices();
  if (free.size() != 3 || free[0] % 3 != 0 || free[2] != free[0] + 2) return std::nullopt;
  const int dof = loop_channel(static_cast<Loop>(free[0] / 3));
  const double m = plant.parameters().inertia[static_cast<std::size_t>(dof)];
  const double omega = std::sqrt((stage.box.hi[free[0]] + plant.restoring_stiffness(dof)) / m);
  if (!(omega > 0.0)) return std::nullopt;
  return 2.0 * std::abs(step->amplitude) / omega;
}

BoConfig stage_bo_config(const StageSpec& stage, int index, std::uint64_t pipeline_seed) {
  BoConfig cfg = stage.bo;
  const auto free = stage.free_indices();
  cfg.dimension = static_cast<int>(free.size());
  cfg.lower.clear();
  cfg.upper.clear();
  for (int i : free) {
    cfg.lower.push_back(stage.box.lo[i]);
    cfg.upper.push_back(stage.box.hi[i]);
  }
  cfg.seed = derive_seed(pipeline_seed, fmt::format("stage/{}/{}", index + 1, stage.name));
  cfg.threshold.reset();
  if (stage.threshold.mode == ThresholdMode::Fixed) cfg.threshold = stage.threshold.value;
  if (stage.warm_start) cfg.warm_start = reduce(*stage.warm_start, stage);
  return cfg;
}

double divergence_sentinel(double largest_finite) {
  if (!(largest_finite > 0.0) || !std::isfinite(largest_finite)) return kSentinelCap;
  return std::min(largest_finite * 10.0, kSentinelCap);
}

StageResult solve_stage(const StageSpec& stage, int index, const AuvPlant& plant,
                        const std::vector<ParamVector>& optima, const EpisodeSettings& settings,
                        std::uint64_t pipeline_seed, const EvaluationObserver& observer) {
  StageResult result;
  result.free_indices = stage.free_indices();
  const ParamVector fixed_reference = resolve_fixed(stage, optima);
  BoConfig cfg = stage_bo_config(stage, index, pipeline_seed);
  result.seed = cfg.seed;

  if (stage.threshold.mode == ThresholdMode::CriticalDamping) {
    if (const auto reference = reference_step_iae(stage, plant)) cfg.threshold = (1.0 + stage.threshold.margin) * *reference;
  }
  result.threshold = cfg.threshold;

  double largest_finite = 0.0;
  auto objective = [&](std::span<const double> reduced) {
    const ParamVector full = embed(reduced, stage, fixed_reference);
    const Trail trail = run_episode(make_episode(stage.task, full, settings), plant);
    result.simulated_seconds += trail.completion_time;
    double cost = trail.diverged ? std::numeric_limits<double>::quiet_NaN() : evaluate(stage.objective, trail);
    if (!std::isfinite(cost)) {
      ++result.diverged_episodes;
      cost = divergence_sentinel(largest_finite);
    } else {
      largest_finite = std::max(largest_finite, cost);
    }
    if (observer) observer({index, &stage, &full, &fixed_reference, &trail, cost});
    return cost;
  };

  BoResult bo = run_bo(objective, cfg);
  result.fragment = bo.best_point;
  result.best_full = embed(bo.best_point, stage, fixed_reference);
  result.best_cost = bo.best_cost;
  result.trace = std::move(bo.trace);
  return result;
}

namespace {

StageReport make_stage_report(int index, const StageSpec& stage, const StageResult& r) {
  StageReport s;
  s.index = index + 1;
  s.name = stage.name;
  s.free_indices = r.free_indices;
  s.evaluations = r.trace.evaluations();
  s.best_cost = r.best_cost;
  s.fragment = r.fragment;
  s.threshold_reached = r.trace.threshold_reached;
  s.threshold = r.threshold;
  s.wall_seconds = r.trace.wall_seconds;
  s.simulated_seconds = r.simulated_seconds;
  s.diverged_episodes = r.diverged_episodes;
  s.seed = r.seed;
  s.trace = r.trace;
  return s;
}

}  // namespace

TuneReport run_pipeline(const PipelineSpec& pipeline, const AuvPlant& plant, const EvaluationObserver& observer) {
  pipeline.validate();
  const auto started = std::chrono::steady_clock::now();
  TuneReport report;
  report.pipeline = pipeline.name;
  report.seed = pipeline.seed;

  std::vector<ParamVector> optima;
  for (std::size_t s = 0; s < pipeline.stages.size(); ++s) {
    const StageSpec& stage = pipeline.stages[s];
    try {
      StageResult r = solve_stage(stage, static_cast<int>(s), plant, optima, pipeline.episode, pipeline.seed, observer);
      optima.push_back(r.best_full);
      report.stages.push_back(make_stage_report(static_cast<int>(s), stage, r));
    } catch (const BoAborted& e) {
      StageResult partial;
      partial.free_indices = stage.free_indices();
      partial.trace = e.trace;
      report.stages.push_back(make_stage_report(static_cast<int>(s), stage, partial));
      report.completed = false;
      report.failure = fmt::format("stage {} ({}): {}", s + 1, stage.name, e.what());
      break;
    }
  }

  if (report.completed) {
    report.best = optima.back();
    for (std::size_t s = 0; s < pipeline.stages.size(); ++s) {
      for (int i : pipeline.stages[s].free_indices()) report.best[i] = optima[s][i];
    }
  }
  for (const auto& s : report.stages) {
    report.total_evaluations += s.evaluations;
    report.simulated_seconds += s.simulated_seconds;
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

BudgetReport budget_accounting(const PipelineSpec& pipeline) {
  BudgetReport b;
  std::array<int, ParamVector::kSize> freed{};
  for (const auto& st : pipeline.stages) {
    const int n = st.free_count();
    b.dimensions.push_back(n);
    b.total_dimensions += n;
    b.evaluation_budget += st.bo.max_evaluations;
    b.staged_complexity += std::ldexp(1.0, n);
    for (int i : st.free_indices()) ++freed[static_cast<std::size_t>(i)];
  }
  b.exhaustive = std::all_of(freed.begin(), freed.end(), [](int c) { return c == 1; });
  b.monolithic_complexity = std::ldexp(1.0, ParamVector::kSize);
  if (b.exhaustive && b.total_dimensions != ParamVector::kSize) {
    throw std::logic_error("exhaustive pipeline must free exactly n_xi parameters");
  }
  return b;
}

}  // namespace stagetune

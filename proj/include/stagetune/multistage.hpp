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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stagetune/bo.hpp"
#include "stagetune/control.hpp"
#include "stagetune/episode.hpp"
#include "stagetune/metrics.hpp"
#include "stagetune/plant.hpp"

namespace stagetune {

/// Fixed value taken from the optimum of an earlier stage (1-based index).
struct FromStage {
  int stage = 1;
  bool operator==(const FromStage&) const = default;
};

using FixedValue = std::variant<double, FromStage>;

struct StepTask {
  int channel = 5;
  double amplitude = 0.0;
  double step_time = 0.0;
  double duration = 20.0;
};

struct WaypointTask {
  WaypointReference reference;
  double max_duration = 100.0;
};

using TaskSpec = std::variant<StepTask, WaypointTask>;

enum class ThresholdMode { None, Fixed, CriticalDamping };

/// Stop criterion for a stage's BO run. CriticalDamping uses (1 + margin)
/// times reference_step_iae() of the stage.
struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::None;
  double value = 0.0;
  double margin = 0.2;
};

struct EpisodeSettings {
  double sample_period = 0.1;
  IntegratorConfig integrator;
};

struct StageSpec {
  std::string name;
  std::array<bool, ParamVector::kSize> fixed{};  // diagonal of P^i, true = fixed
  std::array<FixedValue, ParamVector::kSize> fixed_values{};
  ParamBox box;  // restricted search box; only free coordinates are used
  TaskSpec task;
  ObjectiveSpec objective;
  BoConfig bo;  // dimension, bounds, seed and threshold are set per run
  ThresholdSpec threshold;
  std::optional<ParamVector> warm_start;

  std::vector<int> free_indices() const;
  int free_count() const;
};

struct PipelineSpec {
  std::string name;
  std::vector<StageSpec> stages;
  ParamBox global_box;
  EpisodeSettings episode;
  std::uint64_t seed = 0;

  /// Checks every cross-field constraint; throws ConfigError naming the
  /// offending stage and coordinates.
  void validate() const;
};

/// Free coordinates of `full`, in parameter order.
std::vector<double> reduce(const ParamVector& full, const StageSpec& stage);

/// Full vector with free coordinates from `reduced` and fixed ones from
/// `fixed_reference`.
ParamVector embed(std::span<const double> reduced, const StageSpec& stage, const ParamVector& fixed_reference);

/// The fixed-value vector of a stage with FromStage entries resolved against
/// the optima of completed stages (optima[k-1] for stage k). Free
/// coordinates are left at zero.
ParamVector resolve_fixed(const StageSpec& stage, const std::vector<ParamVector>& optima);

/// Episode for a stage task at the zero initial state.
EpisodeSpec make_episode(const TaskSpec& task, const ParamVector& params, const EpisodeSettings& settings);

/// IAE of the critically damped second-order response to the stage's step,
/// 2|A| / w_n, with w_n^2 = (kp_max + k_r) / M for the linearized channel of
/// the single free loop. nullopt unless the stage is a one-loop step task.
std::optional<double> reference_step_iae(const StageSpec& stage, const AuvPlant& plant);

/// BO configuration used for stage `index` (0-based) of a pipeline seeded
/// with `pipeline_seed`.
BoConfig stage_bo_config(const StageSpec& stage, int index, std::uint64_t pipeline_seed);

struct EvaluationEvent {
  int stage_index = 0;
  const StageSpec* stage = nullptr;
  const ParamVector* evaluated = nullptr;
  const ParamVector* fixed_reference = nullptr;
  const Trail* trail = nullptr;
  double cost = 0.0;
};

/// Called once per objective evaluation.
using EvaluationObserver = std::function<void(const EvaluationEvent&)>;

struct StageResult {
  std::vector<int> free_indices;
  std::vector<double> fragment;
  ParamVector best_full;
  double best_cost = 0.0;
  BoTrace trace;
  std::optional<double> threshold;
  int diverged_episodes = 0;
  double simulated_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Cost assigned to a diverged episode: ten times the largest finite cost
/// seen so far in the stage, capped at 1e300 (the cap alone if none seen).
double divergence_sentinel(double largest_finite);

/// One subtask: BO over the free coordinates with fixed coordinates held at
/// their resolved values for every evaluation.
StageResult solve_stage(const StageSpec& stage, int index, const AuvPlant& plant,
                        const std::vector<ParamVector>& optima, const EpisodeSettings& settings,
                        std::uint64_t pipeline_seed, const EvaluationObserver& observer = {});

struct StageReport {
  int index = 0;  // 1-based
  std::string name;
  std::vector<int> free_indices;
  int evaluations = 0;
  double best_cost = 0.0;
  std::vector<double> fragment;
  bool threshold_reached = false;
  std::optional<double> threshold;
  double wall_seconds = 0.0;
  double simulated_seconds = 0.0;
  int diverged_episodes = 0;
  std::uint64_t seed = 0;
  BoTrace trace;
};

struct TuneReport {
  std::string pipeline;
  std::uint64_t seed = 0;
  std::vector<StageReport> stages;
  ParamVector best;
  int total_evaluations = 0;
  double wall_seconds = 0.0;
  double simulated_seconds = 0.0;
  bool completed = true;
  std::string failure;
};

/// Runs the stages in order, feeding each optimum forward. A failing stage
/// ends the run with completed = false and the partial report.
TuneReport run_pipeline(const PipelineSpec& pipeline, const AuvPlant& plant, const EvaluationObserver& observer = {});

struct BudgetReport {
  std::vector<int> dimensions;
  int total_dimensions = 0;
  bool exhaustive = false;  // every parameter freed in exactly one stage
  long long evaluation_budget = 0;  // sum of per-stage iteration caps
  double staged_complexity = 0.0;      // sum_i 2^{n_i}
  double monolithic_complexity = 0.0;  // 2^{n_xi}
};

BudgetReport budget_accounting(const PipelineSpec& pipeline);

}  // namespace stagetune

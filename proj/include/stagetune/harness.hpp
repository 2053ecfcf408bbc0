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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stagetune/multistage.hpp"

namespace stagetune {

enum class Variant { Individual, Simultaneous };

std::string_view variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);

/// Search space of the benchmark: attitude gains in [0, 5]^3, x and y in
/// [150, 250] x [0, 10] x [75, 150], z in [145, 155] x [0, 5] x [95, 105].
ParamBox benchmark_box();

/// Square in the horizontal plane starting and ending at the origin: four
/// corners plus the four edge midpoints, with z and attitude held at zero.
std::vector<Channels6> square_waypoints(double side = 3.0);

/// Stage order of the individual variant.
inline constexpr std::array<Loop, 6> kIndividualOrder{Loop::Yaw, Loop::Roll, Loop::Pitch,
                                                      Loop::X,   Loop::Y,    Loop::Z};

struct BenchmarkSpec {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  std::vector<Variant> variants{Variant::Individual, Variant::Simultaneous};
  int simultaneous_cap = 1000;
  std::array<int, 6> individual_caps{200, 200, 200, 100, 100, 100};  // in stage order
  ThresholdSpec step_threshold{ThresholdMode::CriticalDamping, 0.0, 0.2};
  std::optional<double> trajectory_threshold;
  WaypointReference trajectory{square_waypoints(), 0.25, DistanceMetric::Position};
  double trajectory_duration = 100.0;
  double step_duration = 20.0;
  double attitude_amplitude = 0.08726646259971647;  // 5 degrees
  double position_amplitude = 3.0;
  ParamBox box = benchmark_box();
  EpisodeSettings episode;
  BoConfig bo;  // acquisition and refit settings shared by every stage
  int jobs = 1;  // concurrent replicates

  void validate() const;
};

/// Simultaneous: one stage, all 18 gains free, eTxIAE on the trajectory.
/// Individual: six single-loop stages on step tasks scored by IAE; later
/// position stages take the attitude gains from the stages that tuned them.
PipelineSpec build_benchmark(Variant variant, const BenchmarkSpec& spec, std::uint64_t seed);

/// Gains at the centre of the box.
ParamVector manual_baseline(const ParamBox& box);

struct FinalEvaluation {
  double cost = 0.0;  // eTxIAE on the position channels
  double completion_time = 0.0;
  bool completed = false;
  bool diverged = false;
  Trail trail;
};

/// One trajectory episode with the given gains. A diverged episode is scored
/// with the divergence cap and a completion time of the full horizon.
FinalEvaluation evaluate_final(const ParamVector& params, const BenchmarkSpec& spec, const AuvPlant& plant);

struct SeedRun {
  Variant variant = Variant::Individual;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  TuneReport tune;
  FinalEvaluation final;
  int samples = 0;            // sum of trace lengths
  int audited_episodes = 0;   // counted by the compare instrument
  double tuning_hours = 0.0;  // simulated episode time
  double wall_seconds = 0.0;
};

struct Stats {
  double mean = 0.0;
  std::optional<double> stddev;  // sample deviation; empty for one value
  int count = 0;
};

Stats summarize(const std::vector<double>& values);

struct VariantSummary {
  Variant variant = Variant::Individual;
  Stats cost;
  Stats completion_time;
  Stats tuning_hours;
  Stats samples;
  int failed = 0;
};

struct ComparisonReport {
  std::vector<SeedRun> runs;  // variant-major, seeds in spec order
  std::vector<VariantSummary> summaries;
  FinalEvaluation manual;
  // (simultaneous - individual) / simultaneous of the means, when both ran.
  std::optional<double> tuning_time_delta;
  std::optional<double> samples_delta;
  std::vector<std::string> warnings;

  const VariantSummary* summary(Variant v) const;
};

/// Runs every (variant, seed) replicate, evaluates each tuned controller on
/// the trajectory and aggregates. Replicates may run on `spec.jobs` threads;
/// the observer, if given, must then be thread-safe.
ComparisonReport compare(const BenchmarkSpec& spec, const AuvPlant& plant, const EvaluationObserver& observer = {});

double relative_delta(double simultaneous, double individual);

}  // namespace stagetune

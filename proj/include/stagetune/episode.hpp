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
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "stagetune/control.hpp"
#include "stagetune/plant.hpp"

namespace stagetune {

using Channels6 = std::array<double, 6>;

/// Step on one channel; every other channel holds its baseline.
struct StepReference {
  Channels6 baseline{};
  double amplitude = 0.0;
  double step_time = 0.0;
  int channel = 0;

  Channels6 at(double t) const;
};

/// R0 for t < t_e, R0 + R_A for t >= t_e, on the stimulated channel.
double step_signal(const StepReference& ref, double t);

enum class DistanceMetric { Position, Full };

/// Sequence of full 6-DOF set-points traversed in order.
struct WaypointReference {
  std::vector<Channels6> waypoints;
  double reach_radius = 0.25;
  DistanceMetric metric = DistanceMetric::Position;

  void validate() const;
  double distance(const Vector& y, const Channels6& waypoint) const;
};

/// Index after testing `y` against waypoint `current`: current + 1 if the
/// distance is strictly below the reach radius, otherwise unchanged.
int advance_waypoint(const WaypointReference& ref, const Vector& y, int current);

using Reference = std::variant<StepReference, WaypointReference>;

struct EpisodeSpec {
  double sample_period = 0.1;
  int max_samples = 200;
  Vector x0;
  Reference reference;
  ParamVector params;
  IntegratorConfig integrator;

  void validate(const SystemModel& plant) const;
};

/// Sampled closed-loop record of one episode.
struct Trail {
  std::vector<double> time;
  std::vector<Channels6> y;
  std::vector<Channels6> u;
  std::vector<Channels6> ref;
  bool completed = false;
  bool diverged = false;
  double completion_time = 0.0;
  std::string failure;

  std::size_t size() const { return time.size(); }
  bool empty() const { return time.empty(); }
};

/// Closed-loop simulation: one controller update per sample period, inputs
/// held between samples, plant integrated with RK4 at T / substeps. Waypoint
/// episodes stop at the first sample where the last waypoint is reached; step
/// episodes always run max_samples periods. Numerical failures end the
/// episode with `diverged` set and the partial trail kept.
Trail run_episode(const EpisodeSpec& spec, const SystemModel& plant);

/// CSV with header t,y1..y6,u1..u6,ref1..ref6, one row per sample.
void write_trail_csv(std::ostream& out, const Trail& trail);

}  // namespace stagetune

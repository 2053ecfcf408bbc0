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

#include "stagetune/episode.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

Channels6 to_channels(const Vector& v) {
  Channels6 c{};
  for (int i = 0; i < 6; ++i) c[static_cast<std::size_t>(i)] = v[i];
  return c;
}

Vector to_vector(const Channels6& c) {
  Vector v(6);
  for (int i = 0; i < 6; ++i) v[i] = c[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

Channels6 StepReference::at(double t) const {
  Channels6 r = baseline;
  r[static_cast<std::size_t>(channel)] = step_signal(*this, t);
  return r;
}

double step_signal(const StepReference& ref, double t) {
  const double r0 = ref.baseline[static_cast<std::size_t>(ref.channel)];
  return t < ref.step_time ? r0 : r0 + ref.amplitude;
}

void WaypointReference::validate() const {
  if (waypoints.empty()) throw ConfigError("waypoint reference needs at least one waypoint");
  if (!(reach_radius > 0.0)) throw ConfigError("waypoint reach radius must be positive");
  for (const auto& w : waypoints) {
    for (double v : w) {
      if (!std::isfinite(v)) throw ConfigError("waypoint coordinates must be finite");
    }
  }
}

double WaypointReference::distance(const Vector& y, const Channels6& w) const {
  const int n = metric == DistanceMetric::Position ? 3 : 6;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = y[i] - w[static_cast<std::size_t>(i)];
    s += d * d;
  }
  return std::sqrt(s);
}

int advance_waypoint(const WaypointReference& ref, const Vector& y, int current) {
  if (current < 0 || current >= static_cast<int>(ref.waypoints.size())) {
    throw std::out_of_range("advance_waypoint: index out of range");
  }
  return ref.distance(y, ref.waypoints[static_cast<std::size_t>(current)]) < ref.reach_radius ? current + 1
                                                                                               : current;
}

void EpisodeSpec::validate(const SystemModel& plant) const {
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw ConfigError("episode sample period must be positive");
  }
  if (max_samples < 1) throw ConfigError("episode needs max_samples >= 1");
  if (integrator.substeps < 1) throw ConfigError("integrator substeps must be >= 1");
  if (plant.measurement_dim() != 6 || plant.input_dim() != 6) {
    throw ConfigError("six-loop controller needs a plant with 6 outputs and 6 inputs");
  }
  if (x0.size() != plant.state_dim() || !x0.allFinite()) {
    throw ConfigError("episode initial state has wrong size or non-finite entries");
  }
  if (const auto* step = std::get_if<StepReference>(&reference)) {
    if (step->channel < 0 || step->channel >= 6) throw ConfigError("step channel out of range");
    const Vector y0 = plant.measure(x0);
    for (int c = 0; c < 6; ++c) {
      if (y0[c] != step->baseline[static_cast<std::size_t>(c)]) {
        throw ConfigError("step task requires x0 to match the reference baseline R0");
      }
    }
  } else {
    std::get<WaypointReference>(reference).validate();
  }
}

Trail run_episode(const EpisodeSpec& spec, const SystemModel& plant) {
  spec.validate(plant);
  const double period = spec.sample_period;
  const double h = spec.integrator.step(period);
  const auto* step_ref = std::get_if<StepReference>(&spec.reference);
  const auto* wp_ref = std::get_if<WaypointReference>(&spec.reference);
  const int n_waypoints = wp_ref ? static_cast<int>(wp_ref->waypoints.size()) : 0;

  Trail trail;
  trail.time.reserve(static_cast<std::size_t>(spec.max_samples) + 1);
  trail.y.reserve(trail.time.capacity());
  trail.u.reserve(trail.time.capacity());
  trail.ref.reserve(trail.time.capacity());

  DecentralizedPid pid(period, plant.input_limits());
  Vector x = spec.x0;
  pid.reset(plant.measure(x));
  int waypoint = 0;

  try {
    for (int k = 0; k <= spec.max_samples; ++k) {
      const double t = k * period;
      const Vector y = plant.measure(x);

      bool done = false;
      Channels6 ref{};
      if (step_ref) {
        ref = step_ref->at(t);
      } else {
        waypoint = advance_waypoint(*wp_ref, y, waypoint);
        done = waypoint == n_waypoints;
        ref = wp_ref->waypoints[static_cast<std::size_t>(done ? n_waypoints - 1 : waypoint)];
      }

      const Vector u = pid.step(spec.params, y, to_vector(ref));
      trail.time.push_back(t);
      trail.y.push_back(to_channels(y));
      trail.u.push_back(to_channels(u));
      trail.ref.push_back(ref);
      trail.completion_time = t;

      if (done) {
        trail.completed = true;
        break;
      }
      if (k == spec.max_samples) {
        trail.completed = step_ref != nullptr;
        break;
      }
      for (int s = 0; s < spec.integrator.substeps; ++s) x = rk4_step(plant, x, u, h);
    }
  } catch (const NumericDomainError& e) {
    trail.diverged = true;
    trail.completed = false;
    trail.failure = e.what();
  } catch (const SingularityError& e) {
    trail.diverged = true;
    trail.completed = false;
    trail.failure = e.what();
  }
  return trail;
}

void write_trail_csv(std::ostream& out, const Trail& trail) {
  out << "t";
  for (const char* prefix : {"y", "u", "ref"}) {
    for (int i = 1; i <= 6; ++i) out << ',' << prefix << i;
  }
  out << '\n';
  for (std::size_t k = 0; k < trail.size(); ++k) {
    out << fmt::format("{}", trail.time[k]);
    for (const auto* row : {&trail.y[k], &trail.u[k], &trail.ref[k]}) {
      for (double v : *row) out << fmt::format(",{}", v);
    }
    out << '\n';
  }
}

}  // namespace stagetune

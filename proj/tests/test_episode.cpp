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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "stagetune/episode.hpp"
#include "stagetune/errors.hpp"
#include "stagetune/metrics.hpp"

using namespace stagetune;

namespace {

// Six decoupled first-order channels x' = -a x + b u, fully measured.
LinearSystem first_order(double a, double b = 1.0) {
  return LinearSystem(-a * Eigen::MatrixXd::Identity(6, 6), b * Eigen::MatrixXd::Identity(6, 6), {0, 1, 2, 3, 4, 5});
}

LinearSystem integrators() { return first_order(0.0); }

EpisodeSpec step_spec(int channel, double amplitude, int samples) {
  EpisodeSpec spec;
  spec.max_samples = samples;
  spec.x0 = Vector::Zero(12);
  StepReference ref;
  ref.channel = channel;
  ref.amplitude = amplitude;
  spec.reference = ref;
  return spec;
}

}  // namespace

TEST_CASE("step signal switches at the step time") {
  StepReference ref;
  ref.baseline[2] = 1.0;
  ref.channel = 2;
  ref.amplitude = 0.5;
  ref.step_time = 3.0;
  CHECK(step_signal(ref, 2.999) == 1.0);
  CHECK(step_signal(ref, 3.0) == 1.5);
  const Channels6 r = ref.at(4.0);
  CHECK(r[2] == 1.5);
  CHECK(r[0] == 0.0);
}

TEST_CASE("zero gains leave the vehicle at rest and the step IAE is |A| K T") {
  const AuvPlant plant;
  for (int ch : {0, 2, 3, 5}) {
    const auto spec = step_spec(ch, -0.7, 150);
    const Trail trail = run_episode(spec, plant);
    CHECK(trail.size() == 151);
    CHECK(trail.completed);
    CHECK_FALSE(trail.diverged);
    CHECK(trail.completion_time == doctest::Approx(15.0));
    CHECK(iae(trail, ch) == doctest::Approx(0.7 * 15.0).epsilon(1e-12));
    for (const auto& y : trail.y) {
      for (double v : y) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("proportional control of a first-order lag follows the discrete closed form") {
  // Input held over each period: x_{k+1} = e^{-aT} x_k + (b/a)(1 - e^{-aT}) u_k, u_k = kp (A - x_k).
  const double a = 0.5, b = 2.0, kp = 3.0, amp = 2.0, period = 0.1;
  const LinearSystem plant = first_order(a, b);
  EpisodeSpec spec = step_spec(4, amp, 100);
  spec.x0 = Vector::Zero(6);
  spec.params.set_gains(Loop::Pitch, {kp, 0.0, 0.0});
  const Trail trail = run_episode(spec, plant);
  REQUIRE(trail.size() == 101);
  const double phi = std::exp(-a * period), gamma = b / a * (1.0 - phi);
  double x = 0.0;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    CHECK(trail.y[k][4] == doctest::Approx(x).epsilon(1e-9));
    CHECK(trail.u[k][4] == doctest::Approx(kp * (amp - x)).epsilon(1e-9));
    CHECK(trail.ref[k][4] == amp);
    x = phi * x + gamma * kp * (amp - x);
  }
}

TEST_CASE("proportional control of an integrator is geometric") {
  const LinearSystem plant = integrators();
  EpisodeSpec spec = step_spec(1, 2.0, 40);
  spec.x0 = Vector::Zero(6);
  spec.params.set_gains(Loop::Y, {3.0, 0.0, 0.0});
  const Trail trail = run_episode(spec, plant);
  const double rho = 1.0 - 3.0 * 0.1;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    CHECK(trail.y[k][1] == doctest::Approx(2.0 * (1.0 - std::pow(rho, static_cast<double>(k)))).epsilon(1e-12));
  }
}

TEST_CASE("trail timestamps are exactly kT") {
  const AuvPlant plant;
  const Trail trail = run_episode(step_spec(5, 0.1, 200), plant);
  REQUIRE(trail.size() == 201);
  for (std::size_t k = 0; k < trail.size(); ++k) CHECK(trail.time[k] == static_cast<double>(k) * 0.1);
  CHECK(trail.completion_time == doctest::Approx(20.0));
}

TEST_CASE("identical episodes give identical trails") {
  const AuvPlant plant;
  EpisodeSpec spec = step_spec(3, 0.1, 100);
  spec.params.set_gains(Loop::Roll, {4.0, 1.0, 2.0});
  const Trail a = run_episode(spec, plant), b = run_episode(spec, plant);
  CHECK(a.y == b.y);
  CHECK(a.u == b.u);
}

TEST_CASE("a single waypoint at the start completes at the first sample") {
  const AuvPlant plant;
  EpisodeSpec spec;
  spec.x0 = Vector::Zero(12);
  WaypointReference ref;
  ref.waypoints = {Channels6{0.1, 0, 0, 0, 0, 0}};
  spec.reference = ref;
  const Trail trail = run_episode(spec, plant);
  CHECK(trail.completed);
  CHECK(trail.size() == 1);
  CHECK(trail.completion_time == 0.0);
}

TEST_CASE("waypoints advance at most once per sample and completion stops the episode") {
  const LinearSystem plant = integrators();
  EpisodeSpec spec;
  spec.max_samples = 100;
  spec.x0 = Vector::Zero(6);
  WaypointReference ref;
  ref.waypoints = {Channels6{}, Channels6{}, Channels6{}};
  spec.reference = ref;
  const Trail trail = run_episode(spec, plant);
  CHECK(trail.completed);
  CHECK(trail.size() == 3);
  CHECK(trail.completion_time == doctest::Approx(0.2));
}

TEST_CASE("reach test is strict") {
  WaypointReference ref;
  ref.reach_radius = 0.25;
  ref.waypoints = {Channels6{0.25, 0, 0, 0, 0, 0}};
  const Vector at_origin = Vector::Zero(6);
  CHECK(advance_waypoint(ref, at_origin, 0) == 0);
  Vector close = at_origin;
  close[0] = 1e-9;
  CHECK(advance_waypoint(ref, close, 0) == 1);
  CHECK_THROWS(advance_waypoint(ref, at_origin, 1));
}

TEST_CASE("distance metric selects position or full pose") {
  WaypointReference ref;
  ref.waypoints = {Channels6{}};
  Vector y = Vector::Zero(6);
  y[5] = 3.0;
  y[1] = 4.0;
  CHECK(ref.distance(y, ref.waypoints[0]) == doctest::Approx(4.0));
  ref.metric = DistanceMetric::Full;
  CHECK(ref.distance(y, ref.waypoints[0]) == doctest::Approx(5.0));
}

TEST_CASE("unreached waypoints run the full horizon") {
  const AuvPlant plant;
  EpisodeSpec spec;
  spec.max_samples = 80;
  spec.x0 = Vector::Zero(12);
  WaypointReference ref;
  ref.waypoints = {Channels6{5, 0, 0, 0, 0, 0}};
  spec.reference = ref;
  const Trail trail = run_episode(spec, plant);
  CHECK_FALSE(trail.completed);
  CHECK_FALSE(trail.diverged);
  CHECK(trail.size() == 81);
  CHECK(trail.completion_time == doctest::Approx(8.0));
}

TEST_CASE("tracking the square with reasonable gains completes") {
  const AuvPlant plant;
  EpisodeSpec spec;
  spec.max_samples = 1000;
  spec.x0 = Vector::Zero(12);
  WaypointReference ref;
  ref.waypoints = {Channels6{1.5, 0, 0, 0, 0, 0}, Channels6{3, 0, 0, 0, 0, 0}, Channels6{3, 3, 0, 0, 0, 0}};
  spec.reference = ref;
  spec.params.set_gains(Loop::X, {200, 0, 100});
  spec.params.set_gains(Loop::Y, {200, 0, 100});
  spec.params.set_gains(Loop::Z, {150, 0, 100});
  const Trail trail = run_episode(spec, plant);
  CHECK(trail.completed);
  CHECK(trail.completion_time < 100.0);
  const auto& last = trail.y.back();
  CHECK(std::hypot(last[0] - 3.0, last[1] - 3.0, last[2]) < 0.25);
}

TEST_CASE("divergence keeps the partial trail") {
  const LinearSystem plant = first_order(-60.0);
  EpisodeSpec spec = step_spec(0, 1.0, 200);
  spec.x0 = Vector::Zero(6);
  spec.params.set_gains(Loop::X, {1.0, 0.0, 0.0});
  const Trail trail = run_episode(spec, plant);
  CHECK(trail.diverged);
  CHECK_FALSE(trail.completed);
  CHECK_FALSE(trail.failure.empty());
  CHECK(trail.size() > 1);
  CHECK(trail.size() < 201);
  CHECK(trail.y.size() == trail.size());
  CHECK(trail.u.size() == trail.size());
}

TEST_CASE("step baseline must equal the initial measurement") {
  const AuvPlant plant;
  EpisodeSpec spec = step_spec(0, 1.0, 10);
  spec.x0[0] = 0.5;
  CHECK_THROWS_AS(run_episode(spec, plant), ConfigError);
  auto ref = std::get<StepReference>(spec.reference);
  ref.baseline[0] = 0.5;
  spec.reference = ref;
  CHECK_NOTHROW(run_episode(spec, plant));

  EpisodeSpec bad = step_spec(6, 1.0, 10);
  CHECK_THROWS_AS(run_episode(bad, plant), ConfigError);
  bad = step_spec(0, 1.0, 0);
  CHECK_THROWS_AS(run_episode(bad, plant), ConfigError);
  bad = step_spec(0, 1.0, 10);
  bad.x0 = Vector::Zero(6);
  CHECK_THROWS_AS(run_episode(bad, plant), ConfigError);
}

TEST_CASE("trail csv has one header and one row per sample") {
  const AuvPlant plant;
  const Trail trail = run_episode(step_spec(1, 1.0, 5), plant);
  std::ostringstream out;
  write_trail_csv(out, trail);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("t,y1,y2,y3,y4,y5,y6,u1,", 0) == 0);
  CHECK(line.find("ref6") != std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 18);
  }
  CHECK(rows == 6);
}

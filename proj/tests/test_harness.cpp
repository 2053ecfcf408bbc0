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

#include "doctest.h"
#include "stagetune/errors.hpp"
#include "stagetune/harness.hpp"

using namespace stagetune;

namespace {

BenchmarkSpec tiny_spec() {
  BenchmarkSpec spec;
  spec.seeds = {1, 2};
  spec.simultaneous_cap = 36;
  spec.individual_caps = {6, 6, 6, 6, 6, 6};
  spec.step_threshold = {ThresholdMode::None, 0.0, 0.0};
  spec.bo.candidates_per_dim = 20;
  return spec;
}

}  // namespace

TEST_CASE("benchmark search box") {
  const ParamBox box = benchmark_box();
  CHECK_NOTHROW(box.validate());
  for (Loop l : {Loop::Roll, Loop::Pitch, Loop::Yaw}) {
    CHECK(box.lo.gains(l).kp == 0.0);
    CHECK(box.hi.gains(l).kd == 5.0);
  }
  for (Loop l : {Loop::X, Loop::Y}) {
    CHECK(box.lo.gains(l).kp == 150.0);
    CHECK(box.hi.gains(l).kp == 250.0);
    CHECK(box.hi.gains(l).ki == 10.0);
    CHECK(box.lo.gains(l).kd == 75.0);
    CHECK(box.hi.gains(l).kd == 150.0);
  }
  CHECK(box.lo.gains(Loop::Z).kp == 145.0);
  CHECK(box.hi.gains(Loop::Z).ki == 5.0);
  CHECK(box.hi.gains(Loop::Z).kd == 105.0);
}

TEST_CASE("manual baseline is the box centre") {
  const ParamVector m = manual_baseline(benchmark_box());
  CHECK(m.gains(Loop::Yaw).kp == 2.5);
  CHECK(m.gains(Loop::X).kp == 200.0);
  CHECK(m.gains(Loop::X).ki == 5.0);
  CHECK(m.gains(Loop::X).kd == 112.5);
  CHECK(m.gains(Loop::Z).kp == 150.0);
  CHECK(m.gains(Loop::Z).kd == 100.0);
}

TEST_CASE("square trajectory returns to the origin in the horizontal plane") {
  const auto w = square_waypoints(4.0);
  REQUIRE(w.size() == 8);
  CHECK(w[0][0] == 2.0);
  CHECK(w[3][0] == 4.0);
  CHECK(w[3][1] == 4.0);
  CHECK(w.back()[0] == 0.0);
  CHECK(w.back()[1] == 0.0);
  for (const auto& p : w) {
    for (int c = 2; c < 6; ++c) CHECK(p[static_cast<std::size_t>(c)] == 0.0);
  }
  for (std::size_t i = 1; i < w.size(); ++i) {
    CHECK(std::hypot(w[i][0] - w[i - 1][0], w[i][1] - w[i - 1][1]) == doctest::Approx(2.0));
  }
}

TEST_CASE("individual variant: six single-loop step stages in tuning order") {
  const BenchmarkSpec spec;
  const PipelineSpec p = build_benchmark(Variant::Individual, spec, 9);
  CHECK_NOTHROW(p.validate());
  REQUIRE(p.stages.size() == 6);
  const char* names[] = {"yaw", "roll", "pitch", "x", "y", "z"};
  for (std::size_t s = 0; s < 6; ++s) {
    const StageSpec& st = p.stages[s];
    CHECK(st.name == names[s]);
    CHECK(st.free_count() == 3);
    CHECK(st.bo.max_evaluations == spec.individual_caps[s]);
    const auto& task = std::get<StepTask>(st.task);
    const Loop loop = kIndividualOrder[s];
    CHECK(task.channel == loop_channel(loop));
    CHECK(st.objective.metric == Metric::Iae);
    CHECK(st.objective.channels == std::vector<int>{loop_channel(loop)});
    CHECK(std::abs(task.amplitude) == (is_angular(loop) ? spec.attitude_amplitude : spec.position_amplitude));
    CHECK(st.threshold.mode == ThresholdMode::CriticalDamping);
  }
  // Attitude stages fix everything else at zero.
  for (std::size_t s = 0; s < 3; ++s) {
    for (const auto& v : p.stages[s].fixed_values) CHECK(std::holds_alternative<double>(v));
  }
  // Position stages take attitude gains from the stages that tuned them.
  for (std::size_t s = 3; s < 6; ++s) {
    const StageSpec& st = p.stages[s];
    CHECK(std::get<FromStage>(st.fixed_values[ParamVector::index(Loop::Yaw, 0)]).stage == 1);
    CHECK(std::get<FromStage>(st.fixed_values[ParamVector::index(Loop::Roll, 1)]).stage == 2);
    CHECK(std::get<FromStage>(st.fixed_values[ParamVector::index(Loop::Pitch, 2)]).stage == 3);
    for (Loop other : {Loop::X, Loop::Y, Loop::Z}) {
      if (other == kIndividualOrder[s]) continue;
      CHECK(std::get<double>(st.fixed_values[ParamVector::index(other, 0)]) == 0.0);
    }
  }
}

TEST_CASE("simultaneous variant: one stage over all gains on the trajectory") {
  BenchmarkSpec spec;
  spec.trajectory_threshold = 5.0;
  const PipelineSpec p = build_benchmark(Variant::Simultaneous, spec, 2);
  REQUIRE(p.stages.size() == 1);
  const StageSpec& st = p.stages[0];
  CHECK(st.free_count() == 18);
  CHECK(st.bo.max_evaluations == 1000);
  CHECK(st.objective.metric == Metric::EtxIae);
  CHECK(st.objective.channels == std::vector<int>{0, 1, 2});
  const auto& task = std::get<WaypointTask>(st.task);
  CHECK(task.reference.waypoints.size() == 8);
  CHECK(task.max_duration == 100.0);
  CHECK(st.threshold.mode == ThresholdMode::Fixed);
  CHECK(st.threshold.value == 5.0);
}

TEST_CASE("zero gains never finish the trajectory; the manual baseline does") {
  const BenchmarkSpec spec;
  const AuvPlant plant;
  const FinalEvaluation zero = evaluate_final(ParamVector{}, spec, plant);
  CHECK_FALSE(zero.completed);
  CHECK_FALSE(zero.diverged);
  CHECK(zero.completion_time == doctest::Approx(100.0));
  const FinalEvaluation manual = evaluate_final(manual_baseline(spec.box), spec, plant);
  CHECK(manual.completed);
  CHECK(manual.completion_time < 100.0);
  CHECK(manual.cost < zero.cost);
}

TEST_CASE("summary statistics use the sample deviation") {
  const Stats s = summarize({1.0, 2.0, 3.0, 6.0});
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(3.0));
  REQUIRE(s.stddev.has_value());
  CHECK(*s.stddev == doctest::Approx(std::sqrt(14.0 / 3.0)));
  const Stats one = summarize({4.0});
  CHECK(one.mean == 4.0);
  CHECK_FALSE(one.stddev.has_value());
  CHECK(summarize({}).count == 0);
}

TEST_CASE("relative delta") {
  CHECK(relative_delta(10.0, 4.0) == doctest::Approx(0.6));
  CHECK(relative_delta(10.0, 12.0) == doctest::Approx(-0.2));
  CHECK_THROWS(relative_delta(0.0, 1.0));
}

TEST_CASE("variant names") {
  CHECK(variant_from_name("individual") == Variant::Individual);
  CHECK(variant_from_name(variant_name(Variant::Simultaneous)) == Variant::Simultaneous);
  CHECK_FALSE(variant_from_name("both").has_value());
}

TEST_CASE("benchmark validation") {
  BenchmarkSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.seeds.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.trajectory.waypoints[2][2] = 1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.individual_caps[4] = 3;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.trajectory_duration = 800.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.jobs = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("small comparison: accounting, audit and thread independence") {
  const BenchmarkSpec spec = tiny_spec();
  const AuvPlant plant;
  const ComparisonReport a = compare(spec, plant);
  REQUIRE(a.runs.size() == 4);
  CHECK(a.warnings.empty());
  for (const auto& r : a.runs) {
    CHECK(r.ok);
    CHECK(r.samples == r.audited_episodes);
    CHECK(r.samples == (r.variant == Variant::Individual ? 36 : 36));
    CHECK(r.tuning_hours > 0.0);
  }
  const auto* ind = a.summary(Variant::Individual);
  const auto* sim = a.summary(Variant::Simultaneous);
  REQUIRE(ind);
  REQUIRE(sim);
  CHECK(ind->cost.count == 2);
  CHECK(ind->tuning_hours.mean == doctest::Approx(36 * 20.0 / 3600.0));
  REQUIRE(a.tuning_time_delta.has_value());
  CHECK(*a.tuning_time_delta == doctest::Approx(relative_delta(sim->tuning_hours.mean, ind->tuning_hours.mean)));
  CHECK(a.samples_delta == doctest::Approx(0.0));
  CHECK(a.manual.completed);

  BenchmarkSpec threaded = spec;
  threaded.jobs = 2;
  const ComparisonReport b = compare(threaded, plant);
  REQUIRE(b.runs.size() == a.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].variant == b.runs[i].variant);
    CHECK(a.runs[i].seed == b.runs[i].seed);
    CHECK(a.runs[i].tune.best == b.runs[i].tune.best);
    CHECK(a.runs[i].final.cost == b.runs[i].final.cost);
  }
}

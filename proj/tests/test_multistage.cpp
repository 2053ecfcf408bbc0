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
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stagetune/errors.hpp"
#include "stagetune/harness.hpp"
#include "stagetune/multistage.hpp"

using namespace stagetune;

namespace {

StageSpec loop_stage(const std::string& name, Loop loop, int evals = 6) {
  StageSpec st;
  st.name = name;
  st.fixed.fill(true);
  st.fixed_values.fill(0.0);
  for (int g = 0; g < 3; ++g) st.fixed[static_cast<std::size_t>(ParamVector::index(loop, g))] = false;
  st.box = benchmark_box();
  StepTask step;
  step.channel = loop_channel(loop);
  step.amplitude = is_angular(loop) ? 0.1 : 1.0;
  step.duration = 10.0;
  st.task = step;
  st.objective = {Metric::Iae, {loop_channel(loop)}};
  st.bo.max_evaluations = evals;
  st.bo.candidates_per_dim = 50;
  st.bo.polish_count = 1;
  return st;
}

PipelineSpec two_stage() {
  PipelineSpec p;
  p.name = "pair";
  p.seed = 3;
  p.global_box = benchmark_box();
  p.stages.push_back(loop_stage("yaw", Loop::Yaw));
  StageSpec roll = loop_stage("roll", Loop::Roll);
  for (int g = 0; g < 3; ++g) roll.fixed_values[static_cast<std::size_t>(ParamVector::index(Loop::Yaw, g))] = FromStage{1};
  p.stages.push_back(roll);
  return p;
}

std::string validation_message(const PipelineSpec& p) {
  try {
    p.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("reduce and embed are inverse on the free coordinates") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> val(-10, 10);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    StageSpec st;
    for (auto&& f : st.fixed) f = coin(gen);
    ParamVector full, ref;
    for (int i = 0; i < ParamVector::kSize; ++i) {
      full[i] = val(gen);
      ref[i] = val(gen);
    }
    const auto reduced = reduce(full, st);
    CHECK(static_cast<int>(reduced.size()) == st.free_count());
    const ParamVector back = embed(reduced, st, ref);
    for (int i = 0; i < ParamVector::kSize; ++i) {
      CHECK(back[i] == (st.fixed[static_cast<std::size_t>(i)] ? ref[i] : full[i]));
    }
    CHECK(reduce(back, st) == reduced);
  }
  StageSpec st;
  CHECK_THROWS(embed(std::vector<double>{1.0}, st, ParamVector{}));
}

TEST_CASE("fixed values resolve constants and earlier optima") {
  StageSpec st = loop_stage("x", Loop::X);
  st.fixed_values[0] = 1.5;
  st.fixed_values[7] = FromStage{2};
  ParamVector a, b;
  b[7] = 4.25;
  const ParamVector r = resolve_fixed(st, {a, b});
  CHECK(r[0] == 1.5);
  CHECK(r[7] == 4.25);
  CHECK(r[9] == 0.0);
  CHECK_THROWS_AS(resolve_fixed(st, {a}), ConfigError);
}

TEST_CASE("fixed coordinates hold their resolved values in every evaluation") {
  const PipelineSpec p = two_stage();
  const AuvPlant plant;
  int events = 0, violations = 0;
  std::vector<int> per_stage(2, 0);
  const TuneReport report = run_pipeline(p, plant, [&](const EvaluationEvent& e) {
    ++events;
    ++per_stage[static_cast<std::size_t>(e.stage_index)];
    for (int i = 0; i < ParamVector::kSize; ++i) {
      if (e.stage->fixed[static_cast<std::size_t>(i)] && (*e.evaluated)[i] != (*e.fixed_reference)[i]) ++violations;
    }
  });
  REQUIRE(report.completed);
  CHECK(violations == 0);
  CHECK(events == report.total_evaluations);
  CHECK(per_stage[0] == report.stages[0].evaluations);
  CHECK(per_stage[1] == report.stages[1].evaluations);
  CHECK(report.stages.size() == 2);

  // Stage 2 ran with stage 1's yaw optimum; the final vector overlays both.
  const auto& yaw = report.stages[0].fragment;
  const auto& roll = report.stages[1].fragment;
  for (int g = 0; g < 3; ++g) {
    CHECK(report.best[ParamVector::index(Loop::Yaw, g)] == yaw[static_cast<std::size_t>(g)]);
    CHECK(report.best[ParamVector::index(Loop::Roll, g)] == roll[static_cast<std::size_t>(g)]);
  }
  CHECK(report.best[ParamVector::index(Loop::X, 0)] == 0.0);
  CHECK(report.simulated_seconds == doctest::Approx(10.0 * report.total_evaluations));
}

TEST_CASE("pipeline runs are reproducible") {
  const PipelineSpec p = two_stage();
  const AuvPlant plant;
  const TuneReport a = run_pipeline(p, plant);
  const TuneReport b = run_pipeline(p, plant);
  CHECK(a.best == b.best);
  CHECK(a.stages[1].best_cost == b.stages[1].best_cost);
  CHECK(a.stages[0].seed != a.stages[1].seed);
}

TEST_CASE("overlapping free sets are rejected with the offending names") {
  PipelineSpec p = two_stage();
  p.stages[1] = loop_stage("yaw-again", Loop::Yaw);
  const std::string msg = validation_message(p);
  CHECK(msg.find("sum to") == std::string::npos);
  CHECK(msg.find("more than one stage: yaw.kp, yaw.ki, yaw.kd") != std::string::npos);
  p.stages.push_back(loop_stage("x", Loop::X));
  StageSpec wide = loop_stage("wide", Loop::Z);
  for (int i = 0; i < ParamVector::kSize; ++i) wide.fixed[static_cast<std::size_t>(i)] = false;
  wide.bo.max_evaluations = 40;
  wide.threshold = {};
  p.stages.push_back(wide);
  const std::string msg2 = validation_message(p);
  CHECK(msg2.find("sum to 27 > 18") != std::string::npos);
  CHECK(msg2.find("yaw.kp, yaw.ki, yaw.kd") != std::string::npos);
  CHECK(msg2.find("x.kp") != std::string::npos);
  CHECK(msg2.find("roll.kp") == std::string::npos);
}

TEST_CASE("structural validation") {
  PipelineSpec p = two_stage();
  CHECK(validation_message(p).empty());

  PipelineSpec fwd = p;
  fwd.stages[0].fixed_values[0] = FromStage{2};
  CHECK(validation_message(fwd).find("does not precede") != std::string::npos);

  PipelineSpec untuned = p;
  untuned.stages[1].fixed_values[9] = FromStage{1};
  CHECK(validation_message(untuned).find("does not tune") != std::string::npos);

  PipelineSpec empty = p;
  empty.stages[1].fixed.fill(true);
  CHECK(validation_message(empty).find("no free parameters") != std::string::npos);

  PipelineSpec none = p;
  none.stages.clear();
  CHECK_FALSE(validation_message(none).empty());

  PipelineSpec seven = p;
  while (seven.stages.size() < 7) seven.stages.push_back(loop_stage("s", Loop::Z));
  CHECK(validation_message(seven).find("between 1 and 6") != std::string::npos);

  PipelineSpec outside = p;
  outside.stages[0].box.hi[ParamVector::index(Loop::Yaw, 0)] = 50.0;
  CHECK(validation_message(outside).find("global box") != std::string::npos);

  PipelineSpec odd = p;
  std::get<StepTask>(odd.stages[0].task).duration = 10.05;
  CHECK(validation_message(odd).find("multiple of the sample period") != std::string::npos);

  PipelineSpec multi = p;
  multi.stages[0].objective.channels = {5, 3};
  CHECK(validation_message(multi).find("exactly one channel") != std::string::npos);

  PipelineSpec long_exp = p;
  long_exp.stages[0].objective.metric = Metric::EtxIae;
  std::get<StepTask>(long_exp.stages[0].task).duration = 800.0;
  CHECK(validation_message(long_exp).find("exceeds") != std::string::npos);

  PipelineSpec cd = p;
  cd.stages[0].threshold.mode = ThresholdMode::CriticalDamping;
  CHECK(validation_message(cd).empty());
  cd.stages[0].fixed[ParamVector::index(Loop::Z, 0)] = false;
  cd.stages[0].box.lo[ParamVector::index(Loop::Z, 0)] = 150.0;
  CHECK(validation_message(cd).find("one free loop") != std::string::npos);

  PipelineSpec cap = p;
  cap.stages[0].bo.max_evaluations = 2;
  CHECK(validation_message(cap).find("initial design") != std::string::npos);

  PipelineSpec warm = p;
  ParamVector w;
  w[ParamVector::index(Loop::Yaw, 0)] = 99.0;
  warm.stages[0].warm_start = w;
  CHECK(validation_message(warm).find("warm start") != std::string::npos);
}

TEST_CASE("reference step IAE equals the integral of a critically damped response") {
  const AuvPlant plant;
  const StageSpec yaw = loop_stage("yaw", Loop::Yaw);
  const StageSpec pitch = loop_stage("pitch", Loop::Pitch);
  const StageSpec z = loop_stage("z", Loop::Z);
  for (const auto* st : {&yaw, &pitch, &z}) {
    const auto& step = std::get<StepTask>(st->task);
    const int dof = step.channel;
    const double kp = st->box.hi[ParamVector::index(channel_loop(dof), 0)];
    const double w = std::sqrt((kp + plant.restoring_stiffness(dof)) / plant.parameters().inertia[static_cast<std::size_t>(dof)]);
    const double a = std::abs(step.amplitude);
    // Error of x'' + 2 w x' + w^2 x = w^2 A from rest: A (1 + w t) e^{-w t}.
    const double expect = oracle::simpson([&](double t) { return a * (1.0 + w * t) * std::exp(-w * t); }, 0.0, 60.0 / w, 1e-12, 40);
    const auto got = reference_step_iae(*st, plant);
    REQUIRE(got.has_value());
    CHECK(*got == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(*reference_step_iae(yaw, plant) == doctest::Approx(2.0 * 0.1 / 1.0));

  StageSpec wp = yaw;
  wp.task = WaypointTask{{square_waypoints(), 0.25, DistanceMetric::Position}, 100.0};
  CHECK_FALSE(reference_step_iae(wp, plant).has_value());
}

TEST_CASE("stage configuration carries the box, seed and threshold") {
  StageSpec st = loop_stage("yaw", Loop::Yaw);
  st.threshold = {ThresholdMode::Fixed, 0.7, 0.0};
  const BoConfig a = stage_bo_config(st, 0, 11);
  CHECK(a.dimension == 3);
  CHECK(a.lower == std::vector<double>{0, 0, 0});
  CHECK(a.upper == std::vector<double>{5, 5, 5});
  CHECK(a.threshold == 0.7);
  CHECK(a.seed != stage_bo_config(st, 1, 11).seed);
  CHECK(a.seed != stage_bo_config(st, 0, 12).seed);
  st.name = "other";
  CHECK(a.seed != stage_bo_config(st, 0, 11).seed);
}

TEST_CASE("critical-damping threshold is applied and can stop a stage early") {
  PipelineSpec p = two_stage();
  p.stages.resize(1);
  p.stages[0].bo.max_evaluations = 40;
  p.stages[0].threshold = {ThresholdMode::CriticalDamping, 0.0, 5.0};
  const AuvPlant plant;
  const TuneReport r = run_pipeline(p, plant);
  REQUIRE(r.stages[0].threshold.has_value());
  CHECK(*r.stages[0].threshold == doctest::Approx(6.0 * 0.2));
  CHECK(r.stages[0].threshold_reached);
  CHECK(r.stages[0].best_cost <= *r.stages[0].threshold);
  CHECK(r.stages[0].evaluations < 40);
}

TEST_CASE("divergence sentinel") {
  CHECK(divergence_sentinel(0.0) == 1e300);
  CHECK(divergence_sentinel(3.0) == 30.0);
  CHECK(divergence_sentinel(1e299 * 5) == 1e300);
  CHECK(divergence_sentinel(INFINITY) == 1e300);
}

TEST_CASE("make_episode derives the sample count") {
  const EpisodeSettings s;
  const EpisodeSpec e = make_episode(StepTask{2, 1.0, 0.0, 3.0}, ParamVector{}, s);
  CHECK(e.max_samples == 30);
  CHECK(e.x0.size() == 12);
  CHECK_THROWS_AS(make_episode(StepTask{2, 1.0, 0.0, 0.35 + 1e-3}, ParamVector{}, s), ConfigError);
}

TEST_CASE("budget accounting for the benchmark pipelines") {
  BenchmarkSpec spec;
  const BudgetReport ind = budget_accounting(build_benchmark(Variant::Individual, spec, 1));
  CHECK(ind.dimensions == std::vector<int>{3, 3, 3, 3, 3, 3});
  CHECK(ind.total_dimensions == 18);
  CHECK(ind.exhaustive);
  CHECK(ind.staged_complexity == 48.0);
  CHECK(ind.monolithic_complexity == 262144.0);
  CHECK(ind.evaluation_budget == 900);

  const BudgetReport sim = budget_accounting(build_benchmark(Variant::Simultaneous, spec, 1));
  CHECK(sim.dimensions == std::vector<int>{18});
  CHECK(sim.exhaustive);
  CHECK(sim.staged_complexity == 262144.0);
  CHECK(sim.evaluation_budget == 1000);

  PipelineSpec partial = two_stage();
  const BudgetReport b = budget_accounting(partial);
  CHECK_FALSE(b.exhaustive);
  CHECK(b.total_dimensions == 6);
  CHECK(b.staged_complexity == 16.0);
}

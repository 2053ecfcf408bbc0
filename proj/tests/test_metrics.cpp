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
#include <functional>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stagetune/errors.hpp"
#include "stagetune/metrics.hpp"

using namespace stagetune;

namespace {

// Trail whose error on channel `ch` is e(t), sampled every `dt` on [0, t_end].
Trail synthetic(const std::function<double(double)>& e, double dt, double t_end, int ch = 0) {
  Trail trail;
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    Channels6 y{}, ref{};
    ref[static_cast<std::size_t>(ch)] = 1.0;
    y[static_cast<std::size_t>(ch)] = 1.0 + e(t);
    trail.time.push_back(t);
    trail.y.push_back(y);
    trail.ref.push_back(ref);
    trail.u.push_back({});
  }
  return trail;
}

const int kCh0[] = {0};

}  // namespace

TEST_CASE("iae of analytic errors matches quadrature") {
  struct Case {
    std::function<double(double)> e;
    double t_end;
  };
  const std::vector<Case> cases{
      {[](double) { return 0.4; }, 10.0},
      {[](double t) { return std::sin(2.0 * t); }, 7.0},
      {[](double t) { return -3.0 * std::exp(-1.5 * t); }, 12.0},
      {[](double t) { return std::exp(-0.3 * t) * std::cos(4.0 * t); }, 15.0},
  };
  for (const auto& c : cases) {
    const Trail trail = synthetic(c.e, 0.01, c.t_end);
    const double expect = oracle::simpson([&](double t) { return std::abs(c.e(t)); }, 0.0, c.t_end, 1e-10, 40);
    CHECK(iae(trail, 0) == doctest::Approx(expect).epsilon(5e-3));
  }
}

TEST_CASE("constant error gives exact iae and closed-form etx_iae") {
  const Trail trail = synthetic([](double) { return 2.0; }, 0.1, 5.0);
  CHECK(iae(trail, 0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(etx_iae(trail, kCh0) == doctest::Approx(2.0 * (std::exp(5.0) - 1.0)).epsilon(5e-3));
}

TEST_CASE("etx_iae of analytic errors matches quadrature") {
  const std::vector<std::function<double(double)>> errors{
      [](double t) { return std::exp(-2.0 * t); },
      [](double t) { return std::sin(t); },
      [](double t) { return 0.1 * t; },
  };
  for (const auto& e : errors) {
    const Trail trail = synthetic(e, 0.01, 6.0);
    const double expect = oracle::simpson([&](double t) { return std::exp(t) * std::abs(e(t)); }, 0.0, 6.0, 1e-10, 40);
    CHECK(etx_iae(trail, kCh0) == doctest::Approx(expect).epsilon(5e-3));
  }
}

TEST_CASE("errors on several channels add") {
  Trail trail = synthetic([](double) { return 1.0; }, 0.1, 2.0, 1);
  for (auto& y : trail.y) y[2] = -0.5;
  const int both[] = {1, 2};
  const int one[] = {1};
  const int two[] = {2};
  CHECK(iae(trail, both) == doctest::Approx(iae(trail, one) + iae(trail, two)));
  CHECK(iae(trail, both) == doctest::Approx(3.0));
  CHECK(etx_iae(trail, both) == doctest::Approx(etx_iae(trail, one) + etx_iae(trail, two)));
  CHECK(iae(trail, 0) == 0.0);
}

TEST_CASE("single-sample trail integrates to zero") {
  const Trail trail = synthetic([](double) { return 5.0; }, 0.1, 0.0);
  CHECK(trail.size() == 1);
  CHECK(iae(trail, 0) == 0.0);
  CHECK(etx_iae(trail, kCh0) == 0.0);
}

TEST_CASE("late errors weigh exponentially more") {
  const Trail early = synthetic([](double t) { return t < 1.0 ? 1.0 : 0.0; }, 0.1, 8.0);
  const Trail late = synthetic([](double t) { return t > 7.0 ? 1.0 : 0.0; }, 0.1, 8.0);
  CHECK(iae(early, 0) == doctest::Approx(iae(late, 0)).epsilon(0.1));
  CHECK(etx_iae(late, kCh0) > 100.0 * etx_iae(early, kCh0));
}

TEST_CASE("etx_iae refuses horizons past the exponent guard") {
  Trail trail = synthetic([](double) { return 0.0; }, 10.0, 700.0);
  CHECK_NOTHROW(etx_iae(trail, kCh0));
  trail.time.back() = 700.5;
  CHECK_THROWS_AS(etx_iae(trail, kCh0), std::domain_error);
  CHECK(std::isfinite(std::exp(kMaxExpHorizon)));
}

TEST_CASE("bad channels are rejected") {
  const Trail trail = synthetic([](double) { return 1.0; }, 0.1, 1.0);
  CHECK_THROWS(iae(trail, 6));
  CHECK_THROWS(iae(trail, -1));
  CHECK_THROWS(iae(Trail{}, 0));
  ObjectiveSpec obj;
  CHECK_THROWS_AS(obj.validate(), ConfigError);
  obj.channels = {0, 0};
  CHECK_THROWS_AS(obj.validate(), ConfigError);
  obj.channels = {0, 1, 2};
  CHECK_NOTHROW(obj.validate());
}

TEST_CASE("compression preserves ordering and the minimiser") {
  CHECK(compress(0.0) == 0.0);
  CHECK(compress(std::exp(1.0) - 1.0) == doctest::Approx(1.0));
  CHECK_THROWS(compress(-1.0));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> exponent(-10, 300);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> costs(20);
    for (auto& c : costs) c = std::pow(10.0, exponent(gen) / 10.0);
    const auto raw_min = std::min_element(costs.begin(), costs.end()) - costs.begin();
    std::vector<double> squashed;
    for (double c : costs) squashed.push_back(compress(c));
    CHECK(std::min_element(squashed.begin(), squashed.end()) - squashed.begin() == raw_min);
    for (std::size_t i = 1; i < costs.size(); ++i) {
      CHECK((costs[i] < costs[i - 1]) == (squashed[i] < squashed[i - 1]));
    }
  }
}

TEST_CASE("evaluate dispatches on the metric") {
  const Trail trail = synthetic([](double) { return 1.0; }, 0.1, 3.0);
  ObjectiveSpec obj;
  obj.channels = {0};
  CHECK(evaluate(obj, trail) == doctest::Approx(3.0));
  obj.metric = Metric::EtxIae;
  CHECK(evaluate(obj, trail) == doctest::Approx(etx_iae(trail, kCh0)));
}

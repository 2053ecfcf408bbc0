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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stagetune/errors.hpp"
#include "stagetune/gp.hpp"

namespace stagetune {

struct BoConfig {
  int dimension = 1;
  std::vector<double> lower;  // search box before normalization
  std::vector<double> upper;
  int initial_design = 0;  // 0 selects max(4, 2d)
  int max_evaluations = 50;
  std::optional<double> threshold;  // stop once a raw cost <= threshold
  double exploration_fraction = 0.01;  // zeta = fraction * range of compressed costs
  int candidates_per_dim = 2000;
  int polish_count = 5;
  int refit_every = 5;
  int refit_warmup = 3;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> warm_start;  // in box coordinates

  int resolved_initial_design() const;
  void validate() const;
};

struct BoRecord {
  std::vector<double> point;  // box coordinates
  double cost = 0.0;
  double compressed = 0.0;
  double acquisition = 0.0;  // NaN for initial-design points
  double best_cost = 0.0;
};

struct BoTrace {
  std::vector<BoRecord> records;
  double wall_seconds = 0.0;
  bool threshold_reached = false;

  int evaluations() const { return static_cast<int>(records.size()); }
};

struct BoResult {
  std::vector<double> best_point;
  double best_cost = 0.0;
  BoTrace trace;
};

/// Raised when the surrogate fails irrecoverably; carries the evaluations
/// made so far.
class BoAborted : public Error {
 public:
  BoAborted(const std::string& what, BoTrace partial) : Error(what), trace(std::move(partial)) {}
  BoTrace trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Seeded Latin hypercube in [0,1]^d; the warm start, if any, replaces the
/// first point.
std::vector<Eigen::VectorXd> initial_design(const BoConfig& config);

/// Closed-form expected improvement for minimization with offset zeta.
double expected_improvement(double mean, double variance, double best, double zeta);

struct AcquisitionChoice {
  Eigen::VectorXd point;  // normalized
  double value = 0.0;
};

/// Maximizes EI over [0,1]^d: candidates_per_dim * d uniform candidates, then
/// coordinate-wise golden-section polish of the best polish_count. The
/// incumbent and zeta are taken from the model's targets.
AcquisitionChoice maximize_acquisition(const GpModel& model, const BoConfig& config, std::uint64_t seed);

/// Sequential BO: initial design, surrogate fit, then EI steps until
/// max_evaluations or the threshold is met. GP targets are compress(cost);
/// the incumbent is the minimum raw cost.
BoResult run_bo(const Objective& objective, const BoConfig& config);

/// CSV: iteration, one column per coordinate, cost, best_cost.
void write_trace_csv(std::ostream& out, const BoTrace& trace, const std::vector<std::string>& coordinate_names);

}  // namespace stagetune

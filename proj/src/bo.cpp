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

#include "stagetune/bo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "stagetune/metrics.hpp"
#include "stagetune/rng.hpp"

namespace stagetune {
namespace {

constexpr double kGolden = 0.6180339887498948482;
constexpr double kPolishRadius = 0.1;
constexpr int kPolishSweeps = 2;
constexpr int kPolishEvaluations = 8;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

Eigen::VectorXd to_box(const BoConfig& c, const Eigen::VectorXd& u) {
  Eigen::VectorXd x(c.dimension);
  for (int j = 0; j < c.dimension; ++j) {
    const auto i = static_cast<std::size_t>(j);
    x[j] = c.lower[i] + u[j] * (c.upper[i] - c.lower[i]);
  }
  return x;
}

Eigen::VectorXd from_box(const BoConfig& c, const std::vector<double>& x) {
  Eigen::VectorXd u(c.dimension);
  for (int j = 0; j < c.dimension; ++j) {
    const auto i = static_cast<std::size_t>(j);
    const double w = c.upper[i] - c.lower[i];
    u[j] = w > 0.0 ? std::clamp((x[i] - c.lower[i]) / w, 0.0, 1.0) : 0.5;
  }
  return u;
}

}  // namespace

int BoConfig::resolved_initial_design() const {
  return initial_design > 0 ? initial_design : std::max(4, 2 * dimension);
}

void BoConfig::validate() const {
  if (dimension < 1) throw ConfigError("bo: dimension must be >= 1");
  if (static_cast<int>(lower.size()) != dimension || static_cast<int>(upper.size()) != dimension) {
    throw ConfigError("bo: bounds must match dimension");
  }
  for (int j = 0; j < dimension; ++j) {
    const auto i = static_cast<std::size_t>(j);
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw ConfigError(fmt::format("bo: invalid bounds on coordinate {}", j));
    }
  }
  const int n_init = resolved_initial_design();
  if (n_init < 2) throw ConfigError("bo: initial design needs at least 2 points");
  if (max_evaluations < n_init) {
    throw ConfigError(fmt::format("bo: max_iterations ({}) below initial design size ({})", max_evaluations, n_init));
  }
  if (!std::isfinite(exploration_fraction) || exploration_fraction < 0.0) {
    throw ConfigError("bo: exploration weight must be finite and non-negative");
  }
  if (threshold && !std::isfinite(*threshold)) throw ConfigError("bo: threshold must be finite");
  if (candidates_per_dim < 1 || polish_count < 0) throw ConfigError("bo: bad acquisition settings");
  if (refit_every < 1 || refit_warmup < 0) throw ConfigError("bo: bad refit cadence");
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != dimension) throw ConfigError("bo: warm start dimension mismatch");
    for (int j = 0; j < dimension; ++j) {
      const auto i = static_cast<std::size_t>(j);
      if (!((*warm_start)[i] >= lower[i] && (*warm_start)[i] <= upper[i])) {
        throw ConfigError("bo: warm start outside the search box");
      }
    }
  }
}

std::vector<Eigen::VectorXd> initial_design(const BoConfig& config) {
  config.validate();
  const int n = config.resolved_initial_design();
  const int d = config.dimension;
  Rng rng = Rng::stream(config.seed, "bo/design");
  std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n), Eigen::VectorXd(d));
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(strata);
    for (int i = 0; i < n; ++i) {
      points[static_cast<std::size_t>(i)][j] = (strata[static_cast<std::size_t>(i)] + rng.uniform()) / n;
    }
  }
  if (config.warm_start) points.front() = from_box(config, *config.warm_start);
  return points;
}

double expected_improvement(double mean, double variance, double best, double zeta) {
  const double delta = best - mean - zeta;
  const double sigma = std::sqrt(std::max(variance, 0.0));
  if (!(sigma > 0.0)) return std::max(delta, 0.0);
  const double z = delta / sigma;
  return std::max(delta * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

AcquisitionChoice maximize_acquisition(const GpModel& model, const BoConfig& config, std::uint64_t seed) {
  if (model.size() == 0) throw std::invalid_argument("maximize_acquisition: model has no data");
  const int d = model.dim();
  const double best = model.targets().minCoeff();
  const double zeta = config.exploration_fraction * (model.targets().maxCoeff() - best);

  Rng rng(seed);
  const int m = config.candidates_per_dim * d;
  Eigen::MatrixXd candidates(d, m);
  for (int c = 0; c < m; ++c) {
    for (int j = 0; j < d; ++j) candidates(j, c) = rng.uniform();
  }
  Eigen::VectorXd mean, var;
  model.predict(candidates, mean, var);
  std::vector<double> ei(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) ei[static_cast<std::size_t>(c)] = expected_improvement(mean[c], var[c], best, zeta);

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  const int top = std::min(std::max(config.polish_count, 1), m);
  std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](int a, int b) {
    const double ea = ei[static_cast<std::size_t>(a)], eb = ei[static_cast<std::size_t>(b)];
    return ea != eb ? ea > eb : a < b;
  });

  auto acquisition = [&](const Eigen::VectorXd& u) {
    const auto p = model.predict(u);
    return expected_improvement(p.mean, p.variance, best, zeta);
  };

  AcquisitionChoice choice;
  choice.value = -1.0;
  for (int r = 0; r < top; ++r) {
    Eigen::VectorXd u = candidates.col(order[static_cast<std::size_t>(r)]);
    double value = acquisition(u);
    for (int s = 0; s < kPolishSweeps && config.polish_count > 0; ++s) {
      for (int j = 0; j < d; ++j) {
        const double centre = u[j];
        double a = std::max(0.0, centre - kPolishRadius);
        double b = std::min(1.0, centre + kPolishRadius);
        Eigen::VectorXd trial = u;
        auto eval = [&](double v) {
          trial[j] = v;
          const double e = acquisition(trial);
          if (e > value) {
            value = e;
            u[j] = v;
          }
          return e;
        };
        double c = b - kGolden * (b - a);
        double dd = a + kGolden * (b - a);
        double fc = eval(c);
        double fd = eval(dd);
        for (int i = 2; i < kPolishEvaluations; ++i) {
          if (fc >= fd) {
            b = dd;
            dd = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = eval(c);
          } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + kGolden * (b - a);
            fd = eval(dd);
          }
        }
      }
    }
    if (value > choice.value) {
      choice.value = value;
      choice.point = u;
    }
  }
  return choice;
}

BoResult run_bo(const Objective& objective, const BoConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const int d = config.dimension;

  BoResult result;
  BoTrace& trace = result.trace;
  std::vector<Eigen::VectorXd> normalized;
  double best = std::numeric_limits<double>::infinity();

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  auto evaluate = [&](const Eigen::VectorXd& u, double acquisition) {
    const Eigen::VectorXd x = to_box(config, u);
    std::vector<double> point(x.data(), x.data() + d);
    const double cost = objective(point);
    if (!std::isfinite(cost) || cost < 0.0) {
      throw std::domain_error(fmt::format("objective returned {} (must be finite and non-negative)", cost));
    }
    if (cost < best) {
      best = cost;
      result.best_point = point;
      result.best_cost = cost;
    }
    normalized.push_back(u);
    trace.records.push_back({std::move(point), cost, compress(cost), acquisition, best});
  };
  auto threshold_met = [&] { return config.threshold && best <= *config.threshold; };

  for (const auto& u : initial_design(config)) evaluate(u, std::numeric_limits<double>::quiet_NaN());

  std::optional<GpHyperparameters> hyper;
  for (int k = 0; !threshold_met() && trace.evaluations() < config.max_evaluations; ++k) {
    const int n = trace.evaluations();
    Eigen::MatrixXd inputs(d, n);
    Eigen::VectorXd targets(n);
    for (int i = 0; i < n; ++i) {
      inputs.col(i) = normalized[static_cast<std::size_t>(i)];
      targets[i] = trace.records[static_cast<std::size_t>(i)].compressed;
    }
    try {
      const bool refit = !hyper || k < config.refit_warmup || k % config.refit_every == 0;
      std::optional<GpModel> model;
      if (refit) {
        GpFitOptions fit;
        fit.seed = derive_seed(config.seed, fmt::format("bo/gp-fit/{}", k));
        fit.warm_start = hyper;
        model.emplace(fit_hyperparameters(inputs, targets, fit));
        hyper = model->hyperparameters();
      } else {
        model.emplace(inputs, targets, *hyper);
      }
      const auto choice =
          maximize_acquisition(*model, config, derive_seed(config.seed, fmt::format("bo/acquisition/{}", k)));
      evaluate(choice.point, choice.value);
    } catch (const GpError& e) {
      trace.wall_seconds = elapsed();
      throw BoAborted(fmt::format("surrogate failure after {} evaluations: {}", n, e.what()), trace);
    }
  }
  trace.threshold_reached = threshold_met();
  trace.wall_seconds = elapsed();
  return result;
}

void write_trace_csv(std::ostream& out, const BoTrace& trace, const std::vector<std::string>& names) {
  out << "iteration";
  for (const auto& n : names) out << ',' << n;
  out << ",cost,best_cost\n";
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    out << i + 1;
    for (double v : r.point) out << fmt::format(",{}", v);
    out << fmt::format(",{},{}\n", r.cost, r.best_cost);
  }
}

}  // namespace stagetune

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

#include "stagetune/plant.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericDomainError(fmt::format("non-finite {}", what));
}

}  // namespace

SystemModel::SystemModel(int state_dim, int input_dim, std::vector<int> measured_states)
    : state_dim_(state_dim), input_dim_(input_dim), measured_(std::move(measured_states)) {
  if (state_dim_ <= 0 || input_dim_ <= 0) {
    throw std::invalid_argument("SystemModel: dimensions must be positive");
  }
  if (measured_.empty() || static_cast<int>(measured_.size()) > state_dim_) {
    throw std::invalid_argument("SystemModel: need 1 <= n_y <= n_x");
  }
  std::vector<bool> used(static_cast<std::size_t>(state_dim_), false);
  for (int s : measured_) {
    if (s < 0 || s >= state_dim_) {
      throw std::invalid_argument(fmt::format("SystemModel: measured state {} out of range", s));
    }
    if (used[static_cast<std::size_t>(s)]) {
      throw std::invalid_argument(
          fmt::format("SystemModel: state {} selected by more than one row of C", s));
    }
    used[static_cast<std::size_t>(s)] = true;
  }
}

Eigen::MatrixXd SystemModel::measurement_matrix() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(measurement_dim(), state_dim_);
  for (int r = 0; r < measurement_dim(); ++r) c(r, measured_[static_cast<std::size_t>(r)]) = 1.0;
  return c;
}

Vector SystemModel::measure(const Vector& x) const {
  if (x.size() != state_dim_) throw std::invalid_argument("measure: state size mismatch");
  require_finite(x, "state");
  Vector y(measurement_dim());
  for (int r = 0; r < measurement_dim(); ++r) y[r] = x[measured_[static_cast<std::size_t>(r)]];
  return y;
}

LinearSystem::LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, std::vector<int> measured_states)
    : SystemModel(static_cast<int>(a.rows()), static_cast<int>(b.cols()), std::move(measured_states)),
      a_(std::move(a)),
      b_(std::move(b)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows()) {
    throw std::invalid_argument("LinearSystem: inconsistent A/B shapes");
  }
}

Vector LinearSystem::derivative(const Vector& x, const Vector& u) const {
  require_finite(x, "state");
  require_finite(u, "input");
  return a_ * x + b_ * u;
}

void AuvParameters::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (!(inertia[i] > 0.0) || !std::isfinite(inertia[i])) {
      throw ConfigError(fmt::format("plant.inertia[{}] must be positive, got {}", i, inertia[i]));
    }
    if (!(linear_damping[i] >= 0.0) || !std::isfinite(linear_damping[i])) {
      throw ConfigError(fmt::format("plant.linear_damping[{}] must be non-negative", i));
    }
    if (!(quadratic_damping[i] >= 0.0) || !std::isfinite(quadratic_damping[i])) {
      throw ConfigError(fmt::format("plant.quadratic_damping[{}] must be non-negative", i));
    }
  }
  if (!(weight >= 0.0) || !(buoyancy >= 0.0) || !std::isfinite(weight) || !std::isfinite(buoyancy)) {
    throw ConfigError("plant.weight and plant.buoyancy must be finite and non-negative");
  }
  if (!std::isfinite(restoring_offset)) throw ConfigError("plant.restoring_offset must be finite");
  if (!(force_limit > 0.0) || !(torque_limit > 0.0)) {
    throw ConfigError("plant.force_limit and plant.torque_limit must be positive");
  }
}

AuvPlant::AuvPlant(AuvParameters params)
    : SystemModel(kStateDim, kInputDim, {0, 1, 2, 3, 4, 5}), params_(params) {
  params_.validate();
}

std::vector<double> AuvPlant::input_limits() const {
  const double f = params_.force_limit;
  const double t = params_.torque_limit;
  return {f, f, f, t, t, t};
}

double AuvPlant::restoring_stiffness(int dof) const {
  if (dof == 3 || dof == 4) return params_.restoring_offset * params_.weight;
  return 0.0;
}

Vector AuvPlant::derivative(const Vector& x, const Vector& u) const {
  if (x.size() != kStateDim || u.size() != kInputDim) {
    throw std::invalid_argument("AuvPlant::derivative: size mismatch");
  }
  require_finite(x, "state");
  require_finite(u, "input");

  const double phi = x[3];
  const double theta = x[4];
  const double psi = x[5];
  if (std::abs(theta) >= std::numbers::pi / 2 - kPitchSingularityMargin) {
    throw SingularityError(fmt::format("pitch {} at Euler-angle singularity", theta));
  }

  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(theta), sth = std::sin(theta), tth = std::tan(theta);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);

  const double vu = x[6], vv = x[7], vw = x[8];
  const double vp = x[9], vq = x[10], vr = x[11];

  Vector dx(kStateDim);
  dx[0] = cpsi * cth * vu + (-spsi * cphi + cpsi * sth * sphi) * vv +
          (spsi * sphi + cpsi * cphi * sth) * vw;
  dx[1] = spsi * cth * vu + (cpsi * cphi + sphi * sth * spsi) * vv +
          (-cpsi * sphi + sth * spsi * cphi) * vw;
  dx[2] = -sth * vu + cth * sphi * vv + cth * cphi * vw;
  dx[3] = vp + sphi * tth * vq + cphi * tth * vr;
  dx[4] = cphi * vq - sphi * vr;
  dx[5] = (sphi * vq + cphi * vr) / cth;

  const double wb = params_.weight - params_.buoyancy;
  const double zw = params_.restoring_offset * params_.weight;
  const std::array<double, 6> restoring{wb * sth,        -wb * cth * sphi, -wb * cth * cphi,
                                        zw * cth * sphi, zw * sth,         0.0};

  for (int i = 0; i < 6; ++i) {
    const double nu = x[6 + i];
    const double damping =
        params_.linear_damping[i] * nu + params_.quadratic_damping[i] * nu * std::abs(nu);
    dx[6 + i] = (u[i] - damping - restoring[i]) / params_.inertia[i];
  }
  return dx;
}

Vector rk4_step(const SystemModel& model, const Vector& x, const Vector& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step must be positive");
  const Vector k1 = model.derivative(x, u);
  const Vector k2 = model.derivative(x + 0.5 * h * k1, u);
  const Vector k3 = model.derivative(x + 0.5 * h * k2, u);
  const Vector k4 = model.derivative(x + h * k3, u);
  Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require_finite(next, "state after integration step");
  return next;
}

}  // namespace stagetune

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
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace stagetune {

using Vector = Eigen::VectorXd;

/// Continuous-time plant x' = f(x, u) with a binary selection measurement
/// y = C x. Row r of C picks state `measured_states()[r]`; the constructor
/// rejects anything that is not a valid selection (one 1 per row, at most one
/// per column).
class SystemModel {
 public:
  SystemModel(int state_dim, int input_dim, std::vector<int> measured_states);
  virtual ~SystemModel() = default;

  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  int measurement_dim() const { return static_cast<int>(measured_.size()); }
  const std::vector<int>& measured_states() const { return measured_; }

  /// Dense form of C, n_y x n_x.
  Eigen::MatrixXd measurement_matrix() const;

  /// y = C x. Throws NumericDomainError on non-finite x.
  Vector measure(const Vector& x) const;

  virtual Vector derivative(const Vector& x, const Vector& u) const = 0;

  /// Symmetric magnitude limit per input channel; inputs are clamped to
  /// [-limit, limit] by the controller. Infinite means unsaturated.
  virtual std::vector<double> input_limits() const {
    return std::vector<double>(static_cast<std::size_t>(input_dim_),
                               std::numeric_limits<double>::infinity());
  }

 private:
  int state_dim_;
  int input_dim_;
  std::vector<int> measured_;
};

/// x' = A x + B u.
class LinearSystem final : public SystemModel {
 public:
  LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, std::vector<int> measured_states);
  Vector derivative(const Vector& x, const Vector& u) const override;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

struct AuvParameters {
  std::array<double, 6> inertia{30, 30, 30, 5, 5, 5};             // kg, kg m^2 (incl. added mass)
  std::array<double, 6> linear_damping{20, 20, 30, 3, 3, 3};      // N s/m, N m s/rad
  std::array<double, 6> quadratic_damping{15, 15, 20, 2, 2, 2};
  double weight = 294.3;       // N
  double buoyancy = 294.3;     // N
  double restoring_offset = 0.01;  // m, centre of gravity below centre of buoyancy
  double force_limit = 200.0;  // N
  double torque_limit = 50.0;  // N m

  void validate() const;
};

/// Six-DOF underwater vehicle in Fossen form with diagonal mass and damping.
///
/// State: [x, y, z, roll, pitch, yaw, u, v, w, p, q, r] (earth-fixed pose,
/// body-fixed velocities). Inputs: [Fx, Fy, Fz, T_roll, T_pitch, T_yaw] in the
/// body frame. Measured outputs: the six pose components.
///
///   eta' = J(eta) nu
///   M nu' = tau - D_l nu - D_q nu|nu| - g(eta)
///
/// with J the ZYX Euler kinematic transform and g the restoring vector for a
/// centre of gravity displaced `restoring_offset` below the centre of
/// buoyancy.
class AuvPlant final : public SystemModel {
 public:
  static constexpr int kStateDim = 12;
  static constexpr int kInputDim = 6;
  static constexpr double kPitchSingularityMargin = 1e-6;

  explicit AuvPlant(AuvParameters params = {});

  const AuvParameters& parameters() const { return params_; }

  Vector derivative(const Vector& x, const Vector& u) const override;
  std::vector<double> input_limits() const override;

  /// Linearized restoring stiffness of the rotational channel `dof` (3..5)
  /// about zero attitude. Zero for translations and yaw.
  double restoring_stiffness(int dof) const;

 private:
  AuvParameters params_;
};

struct IntegratorConfig {
  int substeps = 10;  // plant step h = T / substeps, so h always divides T
  double step(double sample_period) const { return sample_period / substeps; }
};

/// One classical fourth-order Runge-Kutta step of length h.
Vector rk4_step(const SystemModel& model, const Vector& x, const Vector& u, double h);

}  // namespace stagetune

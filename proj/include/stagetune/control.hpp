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
#include <optional>
#include <string>
#include <string_view>

#include "stagetune/plant.hpp"

namespace stagetune {

/// The six decentralized loops, in parameter-vector order.
enum class Loop { Roll = 0, Pitch, Yaw, X, Y, Z };

inline constexpr std::array<Loop, 6> kAllLoops{Loop::Roll, Loop::Pitch, Loop::Yaw,
                                               Loop::X,    Loop::Y,     Loop::Z};

std::string_view loop_name(Loop loop);
std::optional<Loop> loop_from_name(std::string_view name);

/// Measurement / input channel driven by a loop. Channels follow the plant
/// output order [x, y, z, roll, pitch, yaw].
int loop_channel(Loop loop);
Loop channel_loop(int channel);
bool is_angular(Loop loop);

/// Channel name used in configs and CSV headers ("x", ..., "yaw").
std::string_view channel_name(int channel);
std::optional<int> channel_from_name(std::string_view name);

struct Gains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// The full control-parameter vector: (kp, ki, kd) for roll, pitch, yaw, x, y, z.
class ParamVector {
 public:
  static constexpr int kSize = 18;

  ParamVector() { values_.fill(0.0); }
  explicit ParamVector(const std::array<double, kSize>& values) : values_(values) {}

  double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

  Gains gains(Loop loop) const;
  void set_gains(Loop loop, const Gains& g);

  const std::array<double, kSize>& values() const { return values_; }

  bool operator==(const ParamVector&) const = default;

  /// "roll.kp", "x.kd", ...
  static std::string name(int index);
  static std::optional<int> index_of(std::string_view name);
  static int index(Loop loop, int gain) { return 3 * static_cast<int>(loop) + gain; }

 private:
  std::array<double, kSize> values_;
};

/// Componentwise box lo <= xi <= hi.
struct ParamBox {
  ParamVector lo;
  ParamVector hi;

  bool contains(const ParamVector& p) const;
  ParamVector midpoint() const;
  ParamVector clamp(const ParamVector& p) const;
  /// Throws ConfigError unless lo <= hi everywhere and all bounds are finite.
  void validate() const;
  bool subset_of(const ParamBox& outer) const;
};

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// One discrete PID loop: parallel form, trapezoidal integral, derivative on
/// measurement, clamped integrator and saturated output.
class PidLoop {
 public:
  PidLoop(bool angular, double sample_period, double output_limit);

  /// Zero the integrator and seed the previous measurement with `y0`, so the
  /// first derivative term is zero.
  void reset(double y0);

  /// Control output for measurement `y` against reference `ref`.
  double step(const Gains& g, double y, double ref);

  double integral() const { return integral_; }
  double previous_measurement() const { return prev_y_; }

 private:
  bool angular_;
  double period_;
  double limit_;
  double integral_ = 0.0;
  double prev_error_ = 0.0;
  double prev_y_ = 0.0;
  bool primed_ = false;
};

/// Six independent PID loops mapping the six measured pose components to the
/// six body-frame force/torque inputs.
class DecentralizedPid {
 public:
  DecentralizedPid(double sample_period, const std::vector<double>& output_limits);

  void reset(const Vector& y0);

  /// u = U(y, y_ref; xi). Throws NumericDomainError on non-finite inputs.
  Vector step(const ParamVector& params, const Vector& y, const Vector& ref);

  const PidLoop& loop(Loop l) const { return loops_[static_cast<std::size_t>(l)]; }

 private:
  std::array<PidLoop, 6> loops_;
};

}  // namespace stagetune

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

#include "stagetune/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

constexpr std::array<std::string_view, 6> kLoopNames{"roll", "pitch", "yaw", "x", "y", "z"};
constexpr std::array<std::string_view, 6> kChannelNames{"x", "y", "z", "roll", "pitch", "yaw"};
constexpr std::array<int, 6> kLoopChannel{3, 4, 5, 0, 1, 2};
constexpr std::array<std::string_view, 3> kGainNames{"kp", "ki", "kd"};

}  // namespace

std::string_view loop_name(Loop loop) { return kLoopNames[static_cast<std::size_t>(loop)]; }

std::optional<Loop> loop_from_name(std::string_view name) {
  for (Loop l : kAllLoops) {
    if (loop_name(l) == name) return l;
  }
  return std::nullopt;
}

int loop_channel(Loop loop) { return kLoopChannel[static_cast<std::size_t>(loop)]; }

Loop channel_loop(int channel) {
  for (Loop l : kAllLoops) {
    if (loop_channel(l) == channel) return l;
  }
  throw std::out_of_range(fmt::format("channel {} out of range", channel));
}

bool is_angular(Loop loop) { return loop == Loop::Roll || loop == Loop::Pitch || loop == Loop::Yaw; }

std::string_view channel_name(int channel) {
  if (channel < 0 || channel >= 6) throw std::out_of_range("channel out of range");
  return kChannelNames[static_cast<std::size_t>(channel)];
}

std::optional<int> channel_from_name(std::string_view name) {
  for (int c = 0; c < 6; ++c) {
    if (kChannelNames[static_cast<std::size_t>(c)] == name) return c;
  }
  return std::nullopt;
}

Gains ParamVector::gains(Loop loop) const {
  const int b = index(loop, 0);
  return {(*this)[b], (*this)[b + 1], (*this)[b + 2]};
}

void ParamVector::set_gains(Loop loop, const Gains& g) {
  const int b = index(loop, 0);
  (*this)[b] = g.kp;
  (*this)[b + 1] = g.ki;
  (*this)[b + 2] = g.kd;
}

std::string ParamVector::name(int i) {
  if (i < 0 || i >= kSize) throw std::out_of_range("parameter index out of range");
  return fmt::format("{}.{}", kLoopNames[static_cast<std::size_t>(i / 3)],
                     kGainNames[static_cast<std::size_t>(i % 3)]);
}

std::optional<int> ParamVector::index_of(std::string_view name) {
  for (int i = 0; i < kSize; ++i) {
    if (ParamVector::name(i) == name) return i;
  }
  return std::nullopt;
}

bool ParamBox::contains(const ParamVector& p) const {
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
  }
  return true;
}

ParamVector ParamBox::midpoint() const {
  ParamVector m;
  for (int i = 0; i < ParamVector::kSize; ++i) m[i] = 0.5 * (lo[i] + hi[i]);
  return m;
}

ParamVector ParamBox::clamp(const ParamVector& p) const {
  ParamVector c;
  for (int i = 0; i < ParamVector::kSize; ++i) c[i] = std::clamp(p[i], lo[i], hi[i]);
  return c;
}

void ParamBox::validate() const {
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
      throw ConfigError(fmt::format("invalid bounds for {}: [{}, {}]", ParamVector::name(i), lo[i], hi[i]));
    }
  }
}

bool ParamBox::subset_of(const ParamBox& outer) const {
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (lo[i] < outer.lo[i] || hi[i] > outer.hi[i]) return false;
  }
  return true;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

PidLoop::PidLoop(bool angular, double sample_period, double output_limit)
    : angular_(angular), period_(sample_period), limit_(output_limit) {
  if (!(sample_period > 0.0)) throw std::invalid_argument("PidLoop: sample period must be positive");
  if (!(output_limit > 0.0)) throw std::invalid_argument("PidLoop: output limit must be positive");
}

void PidLoop::reset(double y0) {
  integral_ = 0.0;
  prev_error_ = 0.0;
  prev_y_ = y0;
  primed_ = false;
}

double PidLoop::step(const Gains& g, double y, double ref) {
  if (!std::isfinite(y) || !std::isfinite(ref)) {
    throw NumericDomainError(fmt::format("PID input not finite (y={}, ref={})", y, ref));
  }
  const double error = angular_ ? wrap_angle(ref - y) : ref - y;
  const double dy = angular_ ? wrap_angle(y - prev_y_) : y - prev_y_;

  if (primed_) integral_ += 0.5 * period_ * (error + prev_error_);
  if (g.ki > 0.0 && std::isfinite(limit_)) {
    const double bound = limit_ / g.ki;
    integral_ = std::clamp(integral_, -bound, bound);
  }

  const double out = g.kp * error + g.ki * integral_ - g.kd * dy / period_;
  prev_error_ = error;
  prev_y_ = y;
  primed_ = true;
  return std::clamp(out, -limit_, limit_);
}

namespace {

std::array<PidLoop, 6> make_loops(double period, const std::vector<double>& limits) {
  if (limits.size() != 6) throw std::invalid_argument("DecentralizedPid: need 6 output limits");
  auto make = [&](Loop l) {
    return PidLoop(is_angular(l), period, limits[static_cast<std::size_t>(loop_channel(l))]);
  };
  return {make(Loop::Roll), make(Loop::Pitch), make(Loop::Yaw),
          make(Loop::X),    make(Loop::Y),     make(Loop::Z)};
}

}  // namespace

DecentralizedPid::DecentralizedPid(double sample_period, const std::vector<double>& output_limits)
    : loops_(make_loops(sample_period, output_limits)) {}

void DecentralizedPid::reset(const Vector& y0) {
  if (y0.size() != 6) throw std::invalid_argument("DecentralizedPid::reset: need 6 measurements");
  for (Loop l : kAllLoops) loops_[static_cast<std::size_t>(l)].reset(y0[loop_channel(l)]);
}

Vector DecentralizedPid::step(const ParamVector& params, const Vector& y, const Vector& ref) {
  if (y.size() != 6 || ref.size() != 6) {
    throw std::invalid_argument("DecentralizedPid::step: need 6 measurements and references");
  }
  Vector u(6);
  for (Loop l : kAllLoops) {
    const int c = loop_channel(l);
    u[c] = loops_[static_cast<std::size_t>(l)].step(params.gains(l), y[c], ref[c]);
  }
  return u;
}

}  // namespace stagetune

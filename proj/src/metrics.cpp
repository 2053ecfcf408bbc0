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

#include "stagetune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

void check_channel(int c) {
  if (c < 0 || c >= 6) throw std::out_of_range(fmt::format("metric channel {} out of range", c));
}

double abs_error(const Trail& trail, std::size_t k, std::span<const int> channels) {
  double s = 0.0;
  for (int c : channels) {
    const auto i = static_cast<std::size_t>(c);
    s += std::abs(trail.y[k][i] - trail.ref[k][i]);
  }
  return s;
}

}  // namespace

void ObjectiveSpec::validate() const {
  if (channels.empty()) throw ConfigError("objective needs at least one channel");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] < 0 || channels[i] >= 6) throw ConfigError("objective channel out of range");
    if (std::count(channels.begin(), channels.end(), channels[i]) > 1) {
      throw ConfigError("objective channels must be distinct");
    }
  }
}

double iae(const Trail& trail, int channel) {
  const int channels[] = {channel};
  return iae(trail, channels);
}

double iae(const Trail& trail, std::span<const int> channels) {
  if (trail.empty()) throw std::invalid_argument("iae: empty trail");
  for (int c : channels) check_channel(c);
  double total = 0.0;
  double prev = abs_error(trail, 0, channels);
  for (std::size_t k = 1; k < trail.size(); ++k) {
    const double cur = abs_error(trail, k, channels);
    total += 0.5 * (trail.time[k] - trail.time[k - 1]) * (prev + cur);
    prev = cur;
  }
  return total;
}

double etx_iae(const Trail& trail, std::span<const int> channels) {
  if (trail.empty()) throw std::invalid_argument("etx_iae: empty trail");
  for (int c : channels) check_channel(c);
  if (trail.time.back() > kMaxExpHorizon) {
    throw std::domain_error(fmt::format("etx_iae: horizon {} s exceeds {} s", trail.time.back(), kMaxExpHorizon));
  }
  double total = 0.0;
  double prev = std::exp(trail.time[0]) * abs_error(trail, 0, channels);
  for (std::size_t k = 1; k < trail.size(); ++k) {
    const double cur = std::exp(trail.time[k]) * abs_error(trail, k, channels);
    total += 0.5 * (trail.time[k] - trail.time[k - 1]) * (prev + cur);
    prev = cur;
  }
  return total;
}

double compress(double cost) {
  if (!(cost >= 0.0)) throw std::domain_error("compress: cost must be non-negative");
  return std::log1p(cost);
}

double evaluate(const ObjectiveSpec& objective, const Trail& trail) {
  switch (objective.metric) {
    case Metric::Iae:
      return iae(trail, objective.channels);
    case Metric::EtxIae:
      return etx_iae(trail, objective.channels);
  }
  throw std::logic_error("unknown metric");
}

}  // namespace stagetune

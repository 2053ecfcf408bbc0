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

#include <span>
#include <vector>

#include "stagetune/episode.hpp"

namespace stagetune {

enum class Metric { Iae, EtxIae };

/// Scalar objective computed from a trail.
struct ObjectiveSpec {
  Metric metric = Metric::Iae;
  std::vector<int> channels;  // measurement channels, 0..5

  void validate() const;
};

/// Largest episode horizon for which e^t stays comfortably inside double range.
inline constexpr double kMaxExpHorizon = 700.0;

/// Trapezoidal integral of |y_c - ref_c| over the trail. Zero for one sample.
double iae(const Trail& trail, int channel);

/// Sum of per-channel IAE.
double iae(const Trail& trail, std::span<const int> channels);

/// Trapezoidal integral of e^t * sum_c |y_c - ref_c| up to the last sample.
/// Throws std::domain_error if the trail extends past kMaxExpHorizon.
double etx_iae(const Trail& trail, std::span<const int> channels);

/// log(1 + cost). Strictly increasing on [0, inf).
double compress(double cost);

double evaluate(const ObjectiveSpec& objective, const Trail& trail);

}  // namespace stagetune

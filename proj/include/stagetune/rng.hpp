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
#include <random>
#include <string_view>
#include <vector>

namespace stagetune {

/// Derives an independent 64-bit seed for a named stream. Streams are keyed by
/// name, so adding a new stream never shifts the values seen by existing ones.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Random source with platform-independent output.
///
/// std::mt19937_64 is fully specified by the standard, but the standard
/// distributions are not, so every draw below is computed from raw engine
/// output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Rng for the named sub-stream of `seed`.
  static Rng stream(std::uint64_t seed, std::string_view name) {
    return Rng(derive_seed(seed, name));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Point `index` of the Halton sequence in `dim` dimensions (first primes as
/// bases), rotated by `shift` modulo 1 (Cranley-Patterson scrambling).
std::vector<double> shifted_halton(std::size_t index, const std::vector<double>& shift);

}  // namespace stagetune

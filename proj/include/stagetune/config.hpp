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

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "stagetune/harness.hpp"
#include "stagetune/multistage.hpp"
#include "stagetune/plant.hpp"

namespace stagetune {

/// Single-episode section used by `stagetune episode`.
struct EpisodeSection {
  TaskSpec task;
  ObjectiveSpec objective;
};

/// Everything a run needs, loaded from one JSON document. Unknown keys are
/// rejected at every level. Sections other than plant and controller are
/// optional; each subcommand checks for the one it needs.
struct RunConfig {
  AuvParameters plant;
  EpisodeSettings settings;  // controller.sample_period, plant.integrator_substeps
  ParamBox bounds = benchmark_box();
  std::optional<PipelineSpec> pipeline;
  std::optional<BenchmarkSpec> benchmark;
  std::optional<EpisodeSection> episode;
  std::string output_dir = "out";

  /// Cross-section checks: plant parameters, bounds, every present section.
  void validate() const;
};

/// Throws ConfigError with a JSON-pointer style location on any schema
/// violation.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

}  // namespace stagetune

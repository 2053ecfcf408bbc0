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
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "stagetune/harness.hpp"
#include "stagetune/multistage.hpp"

namespace stagetune {

// Report files hold only quantities that are reproducible from (config, seed).
// Wall-clock measurements go to the separate *_timing.json outputs.

nlohmann::json to_json(const TuneReport& report);
nlohmann::json to_json(const BudgetReport& budget);
nlohmann::json to_json(const ComparisonReport& report);

nlohmann::json tune_timing_json(const TuneReport& report);
nlohmann::json comparison_timing_json(const ComparisonReport& report);

/// Columns: metric, manual, then mean and std per variant. Missing values
/// (variant not run, or std of a single seed) are written as n/a.
void write_comparison_csv(std::ostream& out, const ComparisonReport& report);

/// Human-readable summary in "mean (std)" form.
std::string format_comparison_table(const ComparisonReport& report);

/// Trace CSV of one stage with the stage's free parameter names as columns.
void write_stage_trace_csv(std::ostream& out, const StageReport& stage);

/// Concatenated traces of every stage with a leading stage column.
void write_run_trace_csv(std::ostream& out, const TuneReport& report);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

/// Writes comparison.json, comparison.csv, trace_<variant>_<seed>.csv,
/// trail_<variant>_<seed>.csv, trail_manual.csv and timing.json into `dir`.
/// Returns the names of the deterministic files (everything but timing.json).
std::vector<std::string> write_comparison_outputs(const std::filesystem::path& dir, const ComparisonReport& report);

}  // namespace stagetune

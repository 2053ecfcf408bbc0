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

#include "stagetune/report_io.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "stagetune/errors.hpp"

namespace stagetune {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stats_json(const Stats& s) { return {{"mean", s.mean}, {"std", optional_number(s.stddev)}, {"count", s.count}}; }

json params_json(const ParamVector& p) {
  json out = json::object();
  for (int i = 0; i < ParamVector::kSize; ++i) out[ParamVector::name(i)] = p[i];
  return out;
}

json final_json(const FinalEvaluation& f) {
  return {{"cost", f.cost},
          {"completion_time", f.completion_time},
          {"completed", f.completed},
          {"diverged", f.diverged},
          {"samples", f.trail.size()}};
}

std::string cell(double v) { return fmt::format("{}", v); }
std::string cell(const std::optional<double>& v) { return v ? cell(*v) : "n/a"; }

struct Row {
  std::string metric;
  Stats VariantSummary::*field;
};

const Row kRows[] = {
    {"final_cost", &VariantSummary::cost},
    {"completion_time_s", &VariantSummary::completion_time},
    {"tuning_hours", &VariantSummary::tuning_hours},
    {"samples", &VariantSummary::samples},
};

std::optional<double> manual_value(const ComparisonReport& r, const std::string& metric) {
  if (metric == "final_cost") return r.manual.cost;
  if (metric == "completion_time_s") return r.manual.completion_time;
  return std::nullopt;
}

}  // namespace

json to_json(const TuneReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json free = json::array();
    for (int i : s.free_indices) free.push_back(ParamVector::name(i));
    stages.push_back({{"index", s.index},
                      {"name", s.name},
                      {"free", free},
                      {"evaluations", s.evaluations},
                      {"best_cost", s.best_cost},
                      {"fragment", s.fragment},
                      {"threshold", optional_number(s.threshold)},
                      {"threshold_reached", s.threshold_reached},
                      {"diverged_episodes", s.diverged_episodes},
                      {"simulated_seconds", s.simulated_seconds},
                      {"seed", s.seed}});
  }
  json out = {{"pipeline", r.pipeline},
              {"seed", r.seed},
              {"completed", r.completed},
              {"stages", stages},
              {"total_evaluations", r.total_evaluations},
              {"simulated_hours", r.simulated_seconds / 3600.0}};
  if (r.completed) {
    out["best"] = params_json(r.best);
  } else {
    out["failure"] = r.failure;
  }
  return out;
}

json to_json(const BudgetReport& b) {
  return {{"dimensions", b.dimensions},
          {"total_dimensions", b.total_dimensions},
          {"exhaustive", b.exhaustive},
          {"evaluation_budget", b.evaluation_budget},
          {"staged_complexity", b.staged_complexity},
          {"monolithic_complexity", b.monolithic_complexity}};
}

json to_json(const ComparisonReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    json row = {{"variant", std::string(variant_name(run.variant))},
                {"seed", run.seed},
                {"ok", run.ok},
                {"samples", run.samples},
                {"audited_episodes", run.audited_episodes},
                {"tuning_hours", run.tuning_hours}};
    if (run.ok) {
      row["final"] = final_json(run.final);
      row["best"] = params_json(run.tune.best);
    } else {
      row["failure"] = run.failure;
    }
    json stages = json::array();
    for (const auto& s : run.tune.stages) {
      stages.push_back({{"name", s.name},
                        {"evaluations", s.evaluations},
                        {"best_cost", s.best_cost},
                        {"threshold", optional_number(s.threshold)},
                        {"threshold_reached", s.threshold_reached}});
    }
    row["stages"] = stages;
    runs.push_back(row);
  }
  json summaries = json::array();
  for (const auto& s : r.summaries) {
    summaries.push_back({{"variant", std::string(variant_name(s.variant))},
                         {"final_cost", stats_json(s.cost)},
                         {"completion_time_s", stats_json(s.completion_time)},
                         {"tuning_hours", stats_json(s.tuning_hours)},
                         {"samples", stats_json(s.samples)},
                         {"failed", s.failed}});
  }
  return {{"runs", runs},
          {"summaries", summaries},
          {"manual", final_json(r.manual)},
          {"tuning_time_delta", optional_number(r.tuning_time_delta)},
          {"samples_delta", optional_number(r.samples_delta)},
          {"warnings", r.warnings}};
}

json tune_timing_json(const TuneReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) stages.push_back({{"name", s.name}, {"wall_seconds", s.wall_seconds}});
  return {{"wall_seconds", r.wall_seconds}, {"stages", stages}};
}

json comparison_timing_json(const ComparisonReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"variant", std::string(variant_name(run.variant))},
                    {"seed", run.seed},
                    {"wall_seconds", run.wall_seconds},
                    {"wall_hours", run.wall_seconds / 3600.0}});
  }
  return {{"runs", runs}};
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& r) {
  out << "metric,manual,individual_mean,individual_std,simultaneous_mean,simultaneous_std\n";
  for (const auto& row : kRows) {
    out << row.metric << ',' << cell(manual_value(r, row.metric));
    for (Variant v : {Variant::Individual, Variant::Simultaneous}) {
      const auto* s = r.summary(v);
      if (s && (s->*row.field).count > 0) {
        const Stats& st = s->*row.field;
        out << ',' << cell(st.mean) << ',' << cell(st.stddev);
      } else {
        out << ",n/a,n/a";
      }
    }
    out << '\n';
  }
}

std::string format_comparison_table(const ComparisonReport& r) {
  auto entry = [](const VariantSummary* s, const Stats VariantSummary::*field, bool scientific) {
    if (!s || (s->*field).count == 0) return std::string("n/a");
    const Stats& st = s->*field;
    const auto num = [&](double v) { return scientific ? fmt::format("{:.2e}", v) : fmt::format("{:.2f}", v); };
    return st.stddev ? fmt::format("{} ({})", num(st.mean), num(*st.stddev)) : num(st.mean);
  };
  const auto* ind = r.summary(Variant::Individual);
  const auto* sim = r.summary(Variant::Simultaneous);
  std::string out;
  out += "Tracking performance on the square trajectory\n";
  out += fmt::format("  {:<22}{:>22}{:>26}{:>26}\n", "", "manual", "individual", "simultaneous");
  out += fmt::format("  {:<22}{:>22}{:>26}{:>26}\n", "eTxIAE", fmt::format("{:.2e}", r.manual.cost),
                     entry(ind, &VariantSummary::cost, true), entry(sim, &VariantSummary::cost, true));
  out += fmt::format("  {:<22}{:>22}{:>26}{:>26}\n", "completion time (s)",
                     fmt::format("{:.2f}", r.manual.completion_time),
                     entry(ind, &VariantSummary::completion_time, false),
                     entry(sim, &VariantSummary::completion_time, false));
  out += "Tuning cost\n";
  out += fmt::format("  {:<22}{:>26}{:>26}{:>12}\n", "", "individual", "simultaneous", "delta");
  auto delta = [](const std::optional<double>& d) { return d ? fmt::format("{:.0f}%", 100.0 * *d) : std::string("n/a"); };
  out += fmt::format("  {:<22}{:>26}{:>26}{:>12}\n", "simulated time (h)", entry(ind, &VariantSummary::tuning_hours, false),
                     entry(sim, &VariantSummary::tuning_hours, false), delta(r.tuning_time_delta));
  out += fmt::format("  {:<22}{:>26}{:>26}{:>12}\n", "samples", entry(ind, &VariantSummary::samples, false),
                     entry(sim, &VariantSummary::samples, false), delta(r.samples_delta));
  for (const auto& w : r.warnings) out += fmt::format("warning: {}\n", w);
  return out;
}

void write_stage_trace_csv(std::ostream& out, const StageReport& stage) {
  std::vector<std::string> names;
  for (int i : stage.free_indices) names.push_back(ParamVector::name(i));
  write_trace_csv(out, stage.trace, names);
}

void write_run_trace_csv(std::ostream& out, const TuneReport& report) {
  out << "stage,iteration,parameter_vector,cost,best_cost\n";
  for (const auto& s : report.stages) {
    for (std::size_t k = 0; k < s.trace.records.size(); ++k) {
      const auto& rec = s.trace.records[k];
      std::string point;
      for (std::size_t j = 0; j < rec.point.size(); ++j) {
        point += fmt::format("{}{}={}", j ? ";" : "", ParamVector::name(s.free_indices[j]), rec.point[j]);
      }
      out << fmt::format("{},{},{},{},{}\n", s.name, k + 1, point, rec.cost, rec.best_cost);
    }
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

namespace {

template <typename F>
void write_csv_file(const std::filesystem::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  body(out);
}

}  // namespace

std::vector<std::string> write_comparison_outputs(const std::filesystem::path& dir, const ComparisonReport& report) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files{"comparison.json", "comparison.csv"};
  write_json_file(dir / "comparison.json", to_json(report));
  write_csv_file(dir / "comparison.csv", [&](std::ostream& s) { write_comparison_csv(s, report); });
  for (const auto& run : report.runs) {
    const std::string tag = fmt::format("{}_{}", variant_name(run.variant), run.seed);
    files.push_back(fmt::format("trace_{}.csv", tag));
    write_csv_file(dir / files.back(), [&](std::ostream& s) { write_run_trace_csv(s, run.tune); });
    if (run.ok) {
      files.push_back(fmt::format("trail_{}.csv", tag));
      write_csv_file(dir / files.back(), [&](std::ostream& s) { write_trail_csv(s, run.final.trail); });
    }
  }
  files.push_back("trail_manual.csv");
  write_csv_file(dir / files.back(), [&](std::ostream& s) { write_trail_csv(s, report.manual.trail); });
  write_json_file(dir / "timing.json", comparison_timing_json(report));
  return files;
}

}  // namespace stagetune

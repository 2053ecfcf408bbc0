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

#include "stagetune/cli.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "stagetune/config.hpp"
#include "stagetune/errors.hpp"
#include "stagetune/harness.hpp"
#include "stagetune/metrics.hpp"
#include "stagetune/report_io.hpp"

namespace stagetune {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string params;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::string variant;
  int max_iters = 0;
};

template <typename F>
void write_stream(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  body(out);
}

fs::path output_dir(const Options& o, const RunConfig& c) {
  fs::path dir = o.out_dir.empty() ? fs::path(c.output_dir) : fs::path(o.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cap(int configured, const Options& o) { return o.max_iters > 0 ? std::min(configured, o.max_iters) : configured; }

int cmd_validate(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o.config);
  out << "config ok";
  if (c.pipeline) out << fmt::format("; pipeline '{}' with {} stages", c.pipeline->name, c.pipeline->stages.size());
  if (c.benchmark) out << fmt::format("; benchmark with {} seeds", c.benchmark->seeds.size());
  if (c.episode) out << "; episode section";
  out << '\n';
  return kExitOk;
}

int cmd_tune(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig c = load_config(o.config);
  if (!c.pipeline) throw ConfigError("/pipeline: tune needs a pipeline section");
  PipelineSpec p = *c.pipeline;
  if (!o.seeds.empty()) {
    if (o.seeds.size() > 1) throw ConfigError("tune accepts a single --seed");
    p.seed = o.seeds.front();
  }
  for (auto& st : p.stages) st.bo.max_evaluations = cap(st.bo.max_evaluations, o);
  p.validate();
  const BudgetReport budget = budget_accounting(p);

  const AuvPlant plant(c.plant);
  const TuneReport report = run_pipeline(p, plant);
  const fs::path dir = output_dir(o, c);

  nlohmann::json doc = to_json(report);
  doc["budget"] = to_json(budget);
  write_json_file(dir / "tune_report.json", doc);
  write_json_file(dir / "tune_timing.json", tune_timing_json(report));
  for (const auto& st : report.stages) {
    write_stream(dir / fmt::format("trace_stage{}_{}.csv", st.index, st.name),
                 [&](std::ostream& s) { write_stage_trace_csv(s, st); });
  }

  for (const auto& st : report.stages) {
    out << fmt::format("stage {} {}: {} evaluations, best cost {}{}\n", st.index, st.name, st.evaluations,
                       st.best_cost, st.threshold_reached ? " (threshold reached)" : "");
  }
  out << fmt::format("total evaluations: {}\n", report.total_evaluations);
  if (!report.completed) {
    err << "error: " << report.failure << '\n';
    return kExitRuntime;
  }
  for (int i = 0; i < ParamVector::kSize; ++i) out << fmt::format("{} {}\n", ParamVector::name(i), report.best[i]);
  return kExitOk;
}

int cmd_episode(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o.config);
  if (!c.episode) throw ConfigError("/episode: episode needs an episode section");
  const ParamVector params = read_params_file(o.params);
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (!(params[i] >= c.bounds.lo[i] && params[i] <= c.bounds.hi[i])) {
      throw ConfigError(fmt::format("{}: {} = {} outside [{}, {}]", o.params, ParamVector::name(i), params[i],
                                    c.bounds.lo[i], c.bounds.hi[i]));
    }
  }

  const AuvPlant plant(c.plant);
  const Trail trail = run_episode(make_episode(c.episode->task, params, c.settings), plant);
  const fs::path dir = output_dir(o, c);
  write_stream(dir / "trail.csv", [&](std::ostream& s) { write_trail_csv(s, trail); });

  for (int ch = 0; ch < 6; ++ch) out << fmt::format("iae.{} {}\n", channel_name(ch), iae(trail, ch));
  const auto& channels = c.episode->objective.channels;
  if (trail.completion_time <= kMaxExpHorizon) out << fmt::format("etx_iae {}\n", etx_iae(trail, channels));
  if (!trail.diverged) out << fmt::format("objective {}\n", evaluate(c.episode->objective, trail));
  out << fmt::format("completed {}\n", trail.completed);
  out << fmt::format("completion_time {}\n", trail.completion_time);
  if (trail.diverged) {
    out << fmt::format("diverged {}\n", trail.failure);
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = load_config(o.config);
  if (!c.benchmark) throw ConfigError("/benchmark: compare needs a benchmark section");
  BenchmarkSpec spec = *c.benchmark;
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (!o.variant.empty()) {
    const auto v = variant_from_name(o.variant);
    if (!v) throw ConfigError(fmt::format("--variant: expected individual or simultaneous, got '{}'", o.variant));
    spec.variants = {*v};
  }
  spec.simultaneous_cap = cap(spec.simultaneous_cap, o);
  for (auto& k : spec.individual_caps) k = cap(k, o);
  spec.validate();

  const AuvPlant plant(c.plant);
  const ComparisonReport report = compare(spec, plant);
  write_comparison_outputs(output_dir(o, c), report);

  out << format_comparison_table(report);
  for (const auto& s : report.summaries) {
    if (s.samples.count == 0) {
      err << fmt::format("error: every {} replicate failed\n", variant_name(s.variant));
      return kExitRuntime;
    }
  }
  return kExitOk;
}

}  // namespace

ParamVector read_params_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open params file", path.string()));
  ParamVector p;
  std::array<int, ParamVector::kSize> line_of{};
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto where = fmt::format("{}:{}", path.string(), n);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name, value, extra;
    if (!(fields >> name)) continue;
    if (!(fields >> value) || (fields >> extra)) throw ConfigError(fmt::format("{}: expected '<name> <value>'", where));
    const auto index = ParamVector::index_of(name);
    if (!index) throw ConfigError(fmt::format("{}: unknown parameter '{}'", where, name));
    double v = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(v)) {
      throw ConfigError(fmt::format("{}: invalid number '{}'", where, value));
    }
    auto& seen = line_of[static_cast<std::size_t>(*index)];
    if (seen != 0) throw ConfigError(fmt::format("{}: {} already set on line {}", where, name, seen));
    seen = n;
    p[*index] = v;
  }
  for (int i = 0; i < ParamVector::kSize; ++i) {
    if (line_of[static_cast<std::size_t>(i)] == 0) {
      throw ConfigError(fmt::format("{}: missing parameter {}", path.string(), ParamVector::name(i)));
    }
  }
  return p;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PID auto-tuning by staged Bayesian optimization", "stagetune"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run config (JSON)")->required();
  };
  auto* tune = app.add_subcommand("tune", "Run the configured tuning pipeline");
  add_common(tune);
  tune->add_option("--seed", o.seeds, "Pipeline seed")->expected(1);
  tune->add_option("--out-dir", o.out_dir, "Output directory");
  tune->add_option("--max-iters", o.max_iters, "Cap on evaluations per stage")->check(CLI::PositiveNumber);

  auto* episode = app.add_subcommand("episode", "Run one episode with given gains");
  add_common(episode);
  episode->add_option("--params", o.params, "Gain file")->required();
  episode->add_option("--out-dir", o.out_dir, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Benchmark staged against simultaneous tuning");
  add_common(cmp);
  cmp->add_option("--seed", o.seeds, "Seed (repeatable; replaces the configured list)");
  cmp->add_option("--variant", o.variant, "Run only this variant");
  cmp->add_option("--out-dir", o.out_dir, "Output directory");
  cmp->add_option("--max-iters", o.max_iters, "Cap on evaluations per stage")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a config and exit");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*tune) return cmd_tune(o, out, err);
    if (*episode) return cmd_episode(o, out);
    return cmd_compare(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace stagetune

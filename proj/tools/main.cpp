// Copyright 2026 The conjstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line runner: train, play, analyze and reproduce experiments.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conjstack/conjstack.hpp"

namespace fs = std::filesystem;
using namespace conjstack;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> labels;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "experiment configuration (JSON)");
  if (config_required) c->required();
  cmd->add_option("--out", o.out, "output directory (default: the config's output_dir)");
  cmd->add_option("--seed", o.seed, "seed overriding the config");
  cmd->add_option("--labels", o.labels, "comma-separated subset of run labels")->delimiter(',');
}

ExperimentConfig load(const CommonOptions& o, const std::string& builtin = {}) {
  ExperimentConfig cfg = o.config.empty() ? builtin_config(builtin)
                                          : parse_experiment_config(io::read_file(o.config), o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  select_runs(cfg, o.labels);
  return cfg;
}

int cmd_train(const CommonOptions& o) {
  const ExperimentConfig cfg = load(o);
  const fs::path out = cfg.output_dir;
  echo_effective_config(cfg, out);
  for (const auto& run : cfg.runs) {
    if (run.algorithm != Algorithm::costal) continue;
    train_run(cfg, run, out);
    std::cout << "trained " << run.label << " -> " << artifacts_for(out, run.label).dir.string() << "\n";
  }
  return exit_ok;
}

int cmd_play(const CommonOptions& o, const std::string& conjectures) {
  const ExperimentConfig cfg = load(o);
  const fs::path out = cfg.output_dir;
  echo_effective_config(cfg, out);
  for (const auto& run : cfg.runs) {
    std::optional<ConjectureSet> conj;
    if (run.algorithm == Algorithm::costal) {
      conj = conjectures_for_play(cfg, run, out, conjectures.empty() ? std::nullopt : std::optional<fs::path>(conjectures));
    }
    const RunTrace trace = play_run(cfg, run, out, conj);
    const auto& last = trace.final_row();
    std::cout << run.label << ": " << last.t << " iterations, final x =";
    for (double v : last.leader_actions) std::cout << ' ' << v;
    if (last.follower_action) std::cout << ", y = " << *last.follower_action;
    std::cout << "\n";
  }
  return exit_ok;
}

int cmd_analyze(const CommonOptions& o, const std::vector<std::string>& trace_paths) {
  ExperimentConfig cfg = load(o);
  const fs::path out = cfg.output_dir;
  std::vector<RunTrace> traces;
  if (trace_paths.empty()) {
    for (const auto& run : cfg.runs) {
      const fs::path p = artifacts_for(out, run.label).trace;
      traces.push_back(parse_trace_csv(io::read_file(p), run.label));
    }
  } else {
    std::vector<std::string> labels;
    for (const auto& p : trace_paths) {
      std::string stem = fs::path(p).stem().string();
      if (stem.rfind("trace_", 0) == 0) stem = stem.substr(6);
      (void)cfg.run(stem);
      traces.push_back(parse_trace_csv(io::read_file(p), stem));
      labels.push_back(stem);
    }
    select_runs(cfg, labels);
  }
  const AnalysisOutcome res = analyze_runs(cfg, traces, out);
  std::cout << report_text(res.reports, &res.comparison);
  return exit_ok;
}

int cmd_reproduce(const CommonOptions& o, const std::string& name) {
  ExperimentConfig cfg = load(o, name);
  if (o.config.empty() && o.out.empty()) cfg.output_dir = builtin_config(name).output_dir;
  const fs::path out = cfg.output_dir;
  const AnalysisOutcome res = reproduce(cfg, out);
  std::cout << report_text(res.reports, &res.comparison);
  std::cout << "artifacts written to " << out.string() << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conjectural Stackelberg games: conjecture training, conjectured-gradient play and analysis"};
  app.require_subcommand(1);

  CommonOptions train_o, play_o, analyze_o, repro_o;
  std::string conjectures_path;
  std::vector<std::string> trace_paths;
  std::string experiment;

  auto* train = app.add_subcommand("train", "generate best-response samples and fit conjectures");
  add_common(train, train_o, true);
  auto* play = app.add_subcommand("play", "run conjectured-gradient play and the gradient baseline");
  add_common(play, play_o, true);
  play->add_option("--conjectures", conjectures_path, "conjecture set to use for every selected costal run");
  auto* analyze = app.add_subcommand("analyze", "certify traces and compare them with reference equilibria");
  add_common(analyze, analyze_o, true);
  analyze->add_option("traces", trace_paths, "trace CSV files (default: every selected run's trace)");
  auto* repro = app.add_subcommand("reproduce", "train, play and analyze a shipped experiment");
  add_common(repro, repro_o, false);
  repro->add_option("experiment", experiment, "dilemma or olsder")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*train) return cmd_train(train_o);
    if (*play) return cmd_play(play_o, conjectures_path);
    if (*analyze) return cmd_analyze(analyze_o, trace_paths);
    if (*repro) return cmd_reproduce(repro_o, experiment);
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}

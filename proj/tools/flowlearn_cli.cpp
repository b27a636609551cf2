// Copyright 2026 The flowlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// flowlearn command line: run, compare, oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowlearn/flowlearn.hpp"

namespace fl = flowlearn;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

fl::ExperimentFile load(const std::string& path) {
  if (path.empty()) return fl::parse_experiment(std::string("schema: ") + fl::kExperimentSchema);
  return fl::load_experiment(path);
}

void print_error(const char* label, const fl::PredictionError& e) {
  std::printf("%-10s u %.4f  v %.4f  i %.4f  mean %.4f\n", label, e.u, e.v, e.i, e.mean());
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed,
            const std::string& out, const std::string& metric) {
  fl::ExperimentFile f = load(config);
  if (seed) f.run.seed = *seed;
  if (!metric.empty()) f.run.metric = fl::parse_metric(metric);
  if (!out.empty()) f.output_dir = out;
  f.run.validate();
  const fl::RunLog log = fl::run_experiment(f.run);
  fl::write_run_outputs(log, f.output_dir);
  std::printf("metric %s, seed %llu: %zu measurements, %s\n", fl::metric_name(f.run.metric),
              static_cast<unsigned long long>(f.run.seed), log.measurements.size(),
              log.converged ? "converged" : "budget exhausted");
  std::printf("most probable model: %s (p = %.4f)\n",
              f.run.models[log.best_model].name.c_str(),
              log.steps.empty() ? 0.0 : log.steps.back().p[log.best_model]);
  print_error("e0", log.e0);
  print_error("e0 best", log.e0_best);
  print_error("e final", log.e_final);
  if (log.coverage) {
    std::printf("coverage   u %.3f  v %.3f  i %.3f\n", log.coverage->u, log.coverage->v,
                log.coverage->i);
  }
  std::printf("outputs in %s\n", f.output_dir.c_str());
  return 0;
}

int cmd_compare(const std::string& config, std::optional<std::uint64_t> seed,
                const std::string& out, const std::vector<std::string>& metrics,
                std::optional<std::size_t> seeds) {
  fl::ExperimentFile f = load(config);
  if (seed) f.run.seed = *seed;
  if (!out.empty()) f.output_dir = out;
  if (!metrics.empty()) {
    f.compare.metrics.clear();
    for (const std::string& m : metrics) f.compare.metrics.push_back(fl::parse_metric(m));
  }
  if (seeds) f.compare.seeds = *seeds;
  const fl::CompareResult r = fl::compare_planners(f.run, f.compare);

  std::filesystem::create_directories(f.output_dir);
  const std::filesystem::path dir(f.output_dir);
  fl::CsvWriter w(dir / "compare_curve.csv", {"metric", "seed", "k", "e_u", "e_v", "e_i", "e"});
  for (const fl::CurvePoint& p : r.curve) {
    w.row({fl::metric_name(p.metric), std::to_string(p.seed), std::to_string(p.k),
           fl::fmt(p.error.u), fl::fmt(p.error.v), fl::fmt(p.error.i), fl::fmt(p.error.mean())});
  }
  nlohmann::json summary = {{"budget", r.budget}, {"seeds", f.compare.seeds}};
  for (std::size_t m = 0; m < r.metrics.size(); ++m) {
    summary["mean_final_error"][fl::metric_name(r.metrics[m])] = fl::detail::num(r.mean_final[m]);
    std::printf("%-8s mean error at budget %zu: %.5f\n", fl::metric_name(r.metrics[m]), r.budget,
                r.mean_final[m]);
  }
  fl::write_text(dir / "compare_summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_oracle(const std::string& instance) {
  std::ifstream in(instance);
  if (!in) throw fl::ConfigError("cannot read oracle instance '" + instance + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fl::ConfigError(std::string("malformed oracle instance: ") + e.what());
  }
  std::cout << fl::solve_oracle_instance(j).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-guided flow-field learning on a simulated mobile sensor"};
  app.require_subcommand(1);

  std::string config, out, metric, instance;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::vector<std::string> metrics;

  CLI::App* run = app.add_subcommand("run", "one experiment; writes CSV tables and runlog.json");
  run->add_option("-c,--config", config, "experiment YAML")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the seed");
  run->add_option("-o,--out", out, "output directory");
  run->add_option("--metric", metric, "entropy, mi or lattice");

  CLI::App* cmp = app.add_subcommand("compare", "planner comparison over several seeds");
  cmp->add_option("-c,--config", config, "experiment YAML")->check(CLI::ExistingFile);
  cmp->add_option("--seed", seed, "first seed");
  cmp->add_option("-o,--out", out, "output directory");
  cmp->add_option("--metrics", metrics, "metrics to compare")->delimiter(',');
  cmp->add_option("--seeds", seeds, "number of seeds");

  CLI::App* orc = app.add_subcommand("oracle", "solve a JSON instance with the library and by brute force");
  orc->add_option("instance", instance, "instance file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, seed, out, metric);
    if (cmp->parsed()) return cmd_compare(config, seed, out, metrics, seeds);
    return cmd_oracle(instance);
  } catch (const fl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const fl::ArgumentError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}

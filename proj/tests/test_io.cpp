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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowlearn/io/config.hpp"
#include "flowlearn/io/output.hpp"

namespace flowlearn {
namespace {

namespace fs = std::filesystem;

const std::string kDir = FLOWLEARN_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("flowlearn_io_" + name);
  fs::remove_all(d);
  return d;
}

int config_error_line(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const std::vector<std::string> kOutputs = {"runlog.json", "measurements.csv",
                                           "posterior_fields.csv", "model_probs.csv",
                                           "waypoints.csv"};

TEST(Config, MinimalFileGivesDefaults) {
  const ExperimentFile f = load_experiment(kDir + "/configs/minimal.yaml");
  const RunConfig d;
  EXPECT_EQ(f.run.seed, d.seed);
  EXPECT_EQ(f.run.max_measurements, d.max_measurements);
  EXPECT_EQ(f.run.tol, d.tol);
  EXPECT_EQ(f.run.models.size(), 12u);
  EXPECT_EQ(f.compare.max_measurements, 81u);
}

TEST(Config, DefaultFileMatchesBuiltInDefaults) {
  const ExperimentFile f = load_experiment(kDir + "/configs/default.yaml");
  const RunConfig d;
  EXPECT_EQ(f.run.max_measurements, d.max_measurements);
  EXPECT_DOUBLE_EQ(f.run.tol, d.tol);
  EXPECT_DOUBLE_EQ(f.run.ell, d.ell);
  EXPECT_DOUBLE_EQ(f.run.n0, d.n0);
  EXPECT_DOUBLE_EQ(f.run.acquisition.location_std, d.acquisition.location_std);
  EXPECT_NEAR(f.run.acquisition.heading_std, d.acquisition.heading_std, 1e-15);
  EXPECT_DOUBLE_EQ(f.run.rig.full_scale_error, d.rig.full_scale_error);
  EXPECT_DOUBLE_EQ(f.run.candidate_spacing, d.candidate_spacing);
  ASSERT_EQ(f.run.models.size(), d.models.size());
  for (std::size_t j = 0; j < d.models.size(); ++j) {
    EXPECT_EQ(f.run.models[j].name, d.models[j].name);
    EXPECT_DOUBLE_EQ(f.run.models[j].sigma_u0, d.models[j].sigma_u0);
    EXPECT_DOUBLE_EQ(f.run.models[j].corruption.amplitude, d.models[j].corruption.amplitude);
    EXPECT_NEAR(f.run.models[j].corruption.rotation, d.models[j].corruption.rotation, 1e-15);
  }
}

TEST(Config, SmallFileOverrides) {
  const ExperimentFile f = load_experiment(kDir + "/configs/small.yaml");
  EXPECT_EQ(f.run.seed, 7u);
  EXPECT_EQ(f.run.acquisition.target_samples, 60u);
  EXPECT_EQ(f.run.max_measurements, 20u);
  EXPECT_EQ(f.run.max_travel, 0.0);
  EXPECT_EQ(f.compare.seeds, 2u);
  EXPECT_EQ(f.compare.lattice_sizes, (std::vector<int>{3, 4}));
}

TEST(Config, UnknownKeyReportsLine) {
  const std::string text =
      "schema: flowlearn.experiment/1\n"
      "planner:\n"
      "  bogus: 3\n";
  EXPECT_EQ(config_error_line(text), 3);
  try {
    parse_experiment(text);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("planner.bogus"), std::string::npos);
  }
}

TEST(Config, PriorDrawNeedsFromModel) {
  const std::string head = "schema: flowlearn.experiment/1\ntruth:\n";
  EXPECT_EQ(config_error_line(head + "  prior_draw: true\n"), 3);
  const ExperimentFile f = parse_experiment(head + "  from_model: 4\n  prior_draw: true\n");
  EXPECT_EQ(f.run.truth_from_model, std::optional<std::size_t>(4));
  EXPECT_TRUE(f.run.truth_prior_draw);
}

TEST(Config, SchemaIsChecked) {
  EXPECT_EQ(config_error_line("seed: 3\n"), 1);
  EXPECT_EQ(config_error_line("seed: 3\nschema: flowlearn.experiment/9\n"), 2);
}

TEST(Config, ExplorationAboveBudgetIsRejected) {
  const std::string text =
      "schema: flowlearn.experiment/1\n"
      "planner:\n"
      "  exploration: [4, 4]\n"
      "  max_measurements: 10\n";
  EXPECT_EQ(config_error_line(text), 4);
  try {
    parse_experiment(text);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("m_bar = 16"), std::string::npos) << e.what();
  }
}

TEST(Config, BadValuesReportLines) {
  EXPECT_EQ(config_error_line("schema: flowlearn.experiment/1\nseed: many\n"), 2);
  EXPECT_EQ(config_error_line("schema: flowlearn.experiment/1\nplanner:\n  metric: random\n"), 3);
  EXPECT_EQ(config_error_line("schema: flowlearn.experiment/1\nplanner:\n  tol: 0\n"), 3);
  EXPECT_GT(config_error_line("schema: [unclosed\n"), 0);
}

TEST(Csv, QuotesFieldsPerRfc4180) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  const fs::path d = fresh_dir("csv");
  fs::create_directories(d);
  {
    CsvWriter w(d / "t.csv", {"name", "value"});
    w.row({"x,y", "1"});
    EXPECT_THROW(w.row({"only one"}), ArgumentError);
  }
  EXPECT_EQ(slurp(d / "t.csv"), "name,value\r\n\"x,y\",1\r\n");
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(fmt(0.5), "0.5");
  EXPECT_EQ(fmt(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}

class SmallRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    log_ = new RunLog(run_experiment(load_experiment(kDir + "/configs/small.yaml").run));
  }
  static void TearDownTestSuite() {
    delete log_;
    log_ = nullptr;
  }
  static RunLog* log_;
};

RunLog* SmallRun::log_ = nullptr;

TEST_F(SmallRun, RunlogSchema) {
  const nlohmann::json j = runlog_json(*log_);
  EXPECT_EQ(j["schema"], "flowlearn.runlog/1");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["metric"], "entropy");
  EXPECT_EQ(j["models"].size(), 12u);
  EXPECT_EQ(j["measurements"], log_->measurements.size());
  ASSERT_EQ(j["steps"].size(), log_->steps.size());
  for (const auto& s : j["steps"]) {
    for (const char* key : {"k", "measured", "gain", "travel", "relaxed", "d", "p",
                            "log_likelihood", "underflow", "error"}) {
      EXPECT_TRUE(s.contains(key)) << key;
    }
  }
  for (const char* key : {"e0", "e0_models", "best_model", "e0_best", "e_final", "e0_measured",
                          "e_final_measured", "coverage", "coverage_field_only"}) {
    EXPECT_TRUE(j["evaluation"].contains(key)) << key;
  }
}

TEST_F(SmallRun, CsvHeadersAndShapes) {
  const fs::path d = fresh_dir("shapes");
  write_run_outputs(*log_, d);
  for (const std::string& name : kOutputs) EXPECT_TRUE(fs::exists(d / name)) << name;

  auto lines = [&](const std::string& name) {
    std::vector<std::string> out;
    std::istringstream in(slurp(d / name));
    for (std::string l; std::getline(in, l);) {
      if (l.empty() || l.back() != '\r') {
        ADD_FAILURE() << name << ": line without CRLF";
        continue;
      }
      l.pop_back();
      out.push_back(l);
    }
    return out;
  };
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  const std::vector<std::string> m = lines("measurements.csv");
  const std::vector<std::string> p = lines("posterior_fields.csv");
  const std::vector<std::string> w = lines("waypoints.csv");
  const std::vector<std::string> pr = lines("model_probs.csv");
  ASSERT_FALSE(m.empty() || p.empty() || w.empty() || pr.empty());
  EXPECT_EQ(m[0], join(kMeasurementsHeader));
  EXPECT_EQ(p[0], join(kPosteriorHeader));
  EXPECT_EQ(w[0], join(kWaypointsHeader));
  EXPECT_EQ(pr[0].rfind("step,k,p_k-epsilon,p_rsm,", 0), 0u);
  EXPECT_EQ(m.size(), log_->measurements.size() + 1);
  EXPECT_EQ(p.size(), log_->candidates.size() + 1);
  EXPECT_EQ(w.size(), log_->measurements.size() + 1);
  EXPECT_EQ(pr.size(), log_->steps.size() + 2);
  EXPECT_TRUE(nlohmann::json::parse(slurp(d / "runlog.json")).is_object());
}

TEST_F(SmallRun, MatchesGoldenFiles) {
  const fs::path golden = fs::path(kDir) / "tests" / "golden" / "small";
  const fs::path d = fresh_dir("golden");
  write_run_outputs(*log_, d);
  if (std::getenv("FLOWLEARN_UPDATE_GOLDEN")) {
    fs::create_directories(golden);
    for (const std::string& name : kOutputs) {
      fs::copy_file(d / name, golden / name, fs::copy_options::overwrite_existing);
    }
    GTEST_SKIP() << "golden files regenerated";
  }
  for (const std::string& name : kOutputs) {
    ASSERT_TRUE(fs::exists(golden / name)) << name;
    EXPECT_EQ(slurp(d / name), slurp(golden / name)) << name;
  }
}

TEST_F(SmallRun, RerunIntoFreshDirectoryIsByteIdentical) {
  const fs::path a = fresh_dir("rerun_a");
  write_run_outputs(*log_, a);
  const fs::path b = fresh_dir("rerun_b");
  write_run_outputs(run_experiment(load_experiment(kDir + "/configs/small.yaml").run), b);
  for (const std::string& name : kOutputs) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

}  // namespace
}  // namespace flowlearn

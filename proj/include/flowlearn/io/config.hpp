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

// YAML experiment files. Every key is optional and defaults to the values
// in RunConfig; unknown keys are rejected with their line number.

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "flowlearn/error.hpp"
#include "flowlearn/orchestrator.hpp"

namespace flowlearn {

inline constexpr const char* kExperimentSchema = "flowlearn.experiment/1";

struct CompareSettings {
  std::size_t seeds = 20;
  std::vector<PlannerMetric> metrics = {PlannerMetric::kEntropy,
                                        PlannerMetric::kMutualInformation,
                                        PlannerMetric::kLattice};
  std::size_t max_measurements = 81;
  double candidate_spacing = 0.1;
  std::vector<int> lattice_sizes = {4, 5, 6, 7, 8, 9, 10};
};

struct ExperimentFile {
  RunConfig run;
  CompareSettings compare;
  std::string output_dir = "out";
};

namespace detail {

inline int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

/// A mapping whose keys are checked against an allow-list.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_ || node_.IsNull()) return;
    if (!node_.IsMap()) throw ConfigError("'" + path_ + "' must be a mapping", line_of(node_));
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        throw ConfigError("unknown key '" + qualified(key) + "'", line_of(kv.first));
      }
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  YAML::Node get(const std::string& key) const { return has(key) ? node_[key] : YAML::Node(); }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line_of(node_); }
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    const YAML::Node n = node_[key];
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + qualified(key) + "'", line_of(n));
    }
  }

  void read_angle_deg(const std::string& key, double& radians) const {
    double deg = radians / kDegree;
    read(key, deg);
    radians = deg * kDegree;
  }

  template <typename T>
  std::vector<T> read_list(const std::string& key, std::size_t expected = 0) const {
    const YAML::Node n = node_[key];
    if (!n.IsSequence() || (expected > 0 && n.size() != expected)) {
      throw ConfigError("'" + qualified(key) + "' must be a list" +
                            (expected ? " of " + std::to_string(expected) + " values" : ""),
                        line_of(n));
    }
    std::vector<T> out;
    for (const auto& e : n) {
      try {
        out.push_back(e.as<T>());
      } catch (const YAML::Exception&) {
        throw ConfigError("invalid entry in '" + qualified(key) + "'", line_of(e));
      }
    }
    return out;
  }

 private:
  YAML::Node node_;
  std::string path_;
};

inline void require(bool ok, const std::string& what, int line) {
  if (!ok) throw ConfigError(what, line);
}

}  // namespace detail

inline ExperimentFile parse_experiment(const std::string& text) {
  using detail::Section;
  using detail::require;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1);
  }
  if (!root || !root.IsMap()) throw ConfigError("experiment file must be a mapping", 1);
  Section top(root, "", {"schema", "seed", "domain", "truth", "models", "model_prior", "rig",
                         "measurement", "gp", "planner", "evaluation", "output", "compare"});
  require(top.has("schema"), std::string("missing 'schema' (expected ") + kExperimentSchema + ")",
          1);
  std::string schema;
  top.read("schema", schema);
  require(schema == kExperimentSchema,
          "unsupported schema '" + schema + "' (expected " + kExperimentSchema + ")",
          top.line("schema"));

  ExperimentFile f;
  RunConfig& c = f.run;
  top.read("seed", c.seed);

  const Section dom(top.get("domain"), "domain", {"width", "height", "obstacles"});
  dom.read("width", c.width);
  dom.read("height", c.height);
  if (dom.has("obstacles")) {
    c.obstacles.clear();
    const YAML::Node obs = dom.get("obstacles");
    require(obs.IsSequence(), "'domain.obstacles' must be a list", dom.line("obstacles"));
    for (const auto& o : obs) {
      require(o.IsSequence() && o.size() == 4,
              "obstacle must be [x0, y0, x1, y1]", detail::line_of(o));
      c.obstacles.push_back({o[0].as<double>(), o[1].as<double>(), o[2].as<double>(),
                             o[3].as<double>()});
    }
  }

  const Section tr(top.get("truth"), "truth",
                   {"preset", "q_ref", "q_in", "inflow_angle_deg", "loop_speed", "jet_speed",
                    "jet_x", "jet_width", "jet_decay", "eddy_strength", "eddy_center",
                    "eddy_radius", "vortex_circulation", "vortex_separation", "vortex_core",
                    "base_intensity", "jet_intensity", "wake_intensity", "t_star",
                    "t_star_variation", "from_model", "prior_draw"});
  PresetParams& p = c.truth;
  tr.read("preset", p.name);
  require(p.name == "room" || p.name == "vortex_pair" || p.name == "channel",
          "unknown truth preset '" + p.name + "'", tr.line("preset"));
  tr.read("q_ref", p.q_ref);
  tr.read("q_in", p.q_in);
  tr.read_angle_deg("inflow_angle_deg", p.inflow_angle);
  tr.read("loop_speed", p.loop_speed);
  tr.read("jet_speed", p.jet_speed);
  tr.read("jet_x", p.jet_x);
  tr.read("jet_width", p.jet_width);
  tr.read("jet_decay", p.jet_decay);
  tr.read("eddy_strength", p.eddy_strength);
  if (tr.has("eddy_center")) {
    const auto v = tr.read_list<double>("eddy_center", 2);
    p.eddy_center = {v[0], v[1]};
  }
  tr.read("eddy_radius", p.eddy_radius);
  tr.read("vortex_circulation", p.vortex_circulation);
  tr.read("vortex_separation", p.vortex_separation);
  tr.read("vortex_core", p.vortex_core);
  tr.read("base_intensity", p.base_intensity);
  tr.read("jet_intensity", p.jet_intensity);
  tr.read("wake_intensity", p.wake_intensity);
  tr.read("t_star", p.t_star);
  tr.read("t_star_variation", p.t_star_variation);
  require(p.t_star > 0.0, "'truth.t_star' must be positive", tr.line("t_star"));
  if (tr.has("from_model")) {
    std::size_t m = 0;
    tr.read("from_model", m);
    c.truth_from_model = m;
  }
  tr.read("prior_draw", c.truth_prior_draw);
  require(!c.truth_prior_draw || c.truth_from_model,
          "'truth.prior_draw' needs 'truth.from_model'", tr.line("prior_draw"));

  if (top.has("models")) {
    const YAML::Node ms = top.get("models");
    require(ms.IsSequence() && ms.size() > 0, "'models' must be a non-empty list",
            top.line("models"));
    c.models.clear();
    for (const auto& m : ms) {
      const Section s(m, "models[]",
                      {"name", "amplitude", "rotation_deg", "shift", "intensity_scale",
                       "intensity_offset", "sigma_u0", "sigma_i0"});
      ModelSpec spec;
      s.read("name", spec.name);
      s.read("amplitude", spec.corruption.amplitude);
      s.read_angle_deg("rotation_deg", spec.corruption.rotation);
      if (s.has("shift")) {
        const auto v = s.read_list<double>("shift", 2);
        spec.corruption.shift = {v[0], v[1]};
      }
      s.read("intensity_scale", spec.corruption.intensity_scale);
      s.read("intensity_offset", spec.corruption.intensity_offset);
      s.read("sigma_u0", spec.sigma_u0);
      s.read("sigma_i0", spec.sigma_i0);
      require(spec.sigma_u0 >= 0.0 && spec.sigma_i0 >= 0.0,
              "model confidence stds must be >= 0", detail::line_of(m));
      c.models.push_back(spec);
    }
  }
  if (top.has("model_prior")) {
    c.model_prior = top.read_list<double>("model_prior");
    require(c.model_prior.size() == c.models.size(),
            "'model_prior' needs one entry per model", top.line("model_prior"));
  }

  const Section rig(top.get("rig"), "rig",
                    {"sensors", "accurate_limit_deg", "cutoff_deg", "full_scale_error",
                     "range", "noise"});
  rig.read("sensors", c.rig.n_sensors);
  rig.read_angle_deg("accurate_limit_deg", c.rig.accurate_limit);
  rig.read_angle_deg("cutoff_deg", c.rig.cutoff);
  rig.read("full_scale_error", c.rig.full_scale_error);
  require(c.rig.full_scale_error >= 0.0, "'rig.full_scale_error' must be >= 0",
          rig.line("full_scale_error"));
  if (rig.has("range")) {
    const auto v = rig.read_list<double>("range", 2);
    c.rig.range_min = v[0];
    c.rig.range_max = v[1];
  }
  rig.read("noise", c.rig.noise);

  const Section ms(top.get("measurement"), "measurement",
                   {"rate_hz", "samples", "pilot_samples", "bootstrap_batches",
                    "heading_std_deg", "location_std", "srom_size", "max_lag"});
  AcquisitionOptions& a = c.acquisition;
  ms.read("rate_hz", a.rate_hz);
  ms.read("samples", a.target_samples);
  ms.read("pilot_samples", a.pilot_samples);
  ms.read("bootstrap_batches", a.bootstrap_batches);
  ms.read_angle_deg("heading_std_deg", a.heading_std);
  ms.read("location_std", a.location_std);
  ms.read("srom_size", c.srom_size);
  ms.read("max_lag", a.max_lag);
  require(a.heading_std >= 0.0, "'measurement.heading_std_deg' must be >= 0",
          ms.line("heading_std_deg"));
  require(a.location_std >= 0.0, "'measurement.location_std' must be >= 0",
          ms.line("location_std"));
  require(a.target_samples >= 2, "'measurement.samples' must be >= 2", ms.line("samples"));
  require(a.bootstrap_batches >= 2, "'measurement.bootstrap_batches' must be >= 2",
          ms.line("bootstrap_batches"));
  require(c.srom_size == 1 || c.srom_size == 5 || c.srom_size == 9,
          "'measurement.srom_size' must be 1, 5 or 9", ms.line("srom_size"));

  const Section gp(top.get("gp"), "gp", {"ell", "n0"});
  gp.read("ell", c.ell);
  gp.read("n0", c.n0);
  require(c.ell > 0.0, "'gp.ell' must be positive", gp.line("ell"));
  require(c.n0 >= 1.0, "'gp.n0' must be >= 1", gp.line("n0"));

  const Section pl(top.get("planner"), "planner",
                   {"metric", "candidate_spacing", "candidate_clearance", "exploration",
                    "exploration_margin", "max_measurements", "tol", "max_travel", "lattice",
                    "lattice_margin"});
  if (pl.has("metric")) {
    std::string m;
    pl.read("metric", m);
    try {
      c.metric = parse_metric(m);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what(), pl.line("metric"));
    }
  }
  pl.read("candidate_spacing", c.candidate_spacing);
  pl.read("candidate_clearance", c.candidate_clearance);
  if (pl.has("exploration")) {
    const auto v = pl.read_list<int>("exploration", 2);
    c.exploration_nx = v[0];
    c.exploration_ny = v[1];
  }
  pl.read("exploration_margin", c.exploration_margin);
  pl.read("max_measurements", c.max_measurements);
  pl.read("tol", c.tol);
  pl.read("max_travel", c.max_travel);
  if (pl.has("lattice")) {
    const auto v = pl.read_list<int>("lattice", 2);
    c.lattice_nx = v[0];
    c.lattice_ny = v[1];
  }
  pl.read("lattice_margin", c.lattice_margin);
  require(c.candidate_spacing > 0.0, "'planner.candidate_spacing' must be positive",
          pl.line("candidate_spacing"));
  require(c.tol > 0.0, "'planner.tol' must be positive", pl.line("tol"));
  require(c.exploration_count() <= c.max_measurements || c.metric == PlannerMetric::kLattice,
          "exploration count m_bar = " + std::to_string(c.exploration_count()) +
              " exceeds max_measurements m = " + std::to_string(c.max_measurements),
          pl.line(pl.has("max_measurements") ? "max_measurements" : "exploration"));

  const Section ev(top.get("evaluation"), "evaluation",
                   {"test_points", "noisy_test_measurements", "track_error"});
  ev.read("test_points", c.test_points);
  ev.read("noisy_test_measurements", c.noisy_test_measurements);
  ev.read("track_error", c.track_error);
  require(c.test_points >= 1, "'evaluation.test_points' must be >= 1", ev.line("test_points"));

  const Section out(top.get("output"), "output", {"dir"});
  out.read("dir", f.output_dir);

  const Section cmp(top.get("compare"), "compare",
                    {"seeds", "metrics", "max_measurements", "candidate_spacing",
                     "lattice_sizes"});
  cmp.read("seeds", f.compare.seeds);
  if (cmp.has("metrics")) {
    f.compare.metrics.clear();
    for (const std::string& m : cmp.read_list<std::string>("metrics")) {
      try {
        f.compare.metrics.push_back(parse_metric(m));
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what(), cmp.line("metrics"));
      }
    }
  }
  cmp.read("max_measurements", f.compare.max_measurements);
  cmp.read("candidate_spacing", f.compare.candidate_spacing);
  if (cmp.has("lattice_sizes")) f.compare.lattice_sizes = cmp.read_list<int>("lattice_sizes");

  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what(), 0);
  }
  return f;
}

inline ExperimentFile load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

}  // namespace flowlearn

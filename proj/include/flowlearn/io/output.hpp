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

// Run outputs: CSV tables with fixed headers and a versioned JSON run log.
// Numbers are printed with "%.10g" so identical runs give identical bytes.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowlearn/error.hpp"
#include "flowlearn/orchestrator.hpp"

namespace flowlearn {

inline const std::vector<std::string> kMeasurementsHeader = {
    "index", "x", "y", "heading", "n", "y_u", "y_v", "y_i", "var_u_hat", "var_v_hat",
    "noise_u", "noise_v", "heading_u", "heading_v", "sigma2_u", "sigma2_v", "sigma2_i",
    "t_star", "raw_samples", "dropped_samples", "flags", "actual_x", "actual_y",
    "actual_heading"};
inline const std::vector<std::string> kPosteriorHeader = {
    "x", "y", "mu_u", "std_u", "mu_v", "std_v", "mu_i", "std_i"};
inline const std::vector<std::string> kWaypointsHeader = {
    "step", "k", "index", "x", "y", "gain", "travel", "relaxed", "d"};

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

/// RFC-4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ArgumentError("CSV row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(cells[i]);
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

inline void write_measurements_csv(const RunLog& log, const std::filesystem::path& path) {
  CsvWriter w(path, kMeasurementsHeader);
  for (std::size_t m = 0; m < log.measurements.size(); ++m) {
    const MeasurementRecord& r = log.measurements[m];
    w.row({std::to_string(m), fmt(r.x.x), fmt(r.x.y), fmt(r.heading), std::to_string(r.n),
           fmt(r.y_u), fmt(r.y_v), fmt(r.y_i), fmt(r.var_u_hat), fmt(r.var_v_hat),
           fmt(r.noise_u), fmt(r.noise_v), fmt(r.heading_u), fmt(r.heading_v), fmt(r.sigma2_u),
           fmt(r.sigma2_v), fmt(r.sigma2_i), fmt(r.t_star), std::to_string(r.raw_samples),
           std::to_string(r.dropped_samples), std::to_string(r.flags), fmt(r.actual_x.x),
           fmt(r.actual_x.y), fmt(r.actual_heading)});
  }
}

inline void write_posterior_csv(const RunLog& log, const std::filesystem::path& path) {
  CsvWriter w(path, kPosteriorHeader);
  for (std::size_t g = 0; g < log.candidates.size(); ++g) {
    std::vector<std::string> row = {fmt(log.candidates[g].x), fmt(log.candidates[g].y)};
    for (int f = 0; f < 3; ++f) {
      row.push_back(fmt(log.posterior[f][g].mean));
      row.push_back(fmt(std::sqrt(log.posterior[f][g].variance)));
    }
    w.row(row);
  }
}

inline void write_model_probs_csv(const RunLog& log, const std::filesystem::path& path) {
  std::vector<std::string> header = {"step", "k"};
  for (const ModelSpec& m : log.config.models) header.push_back("p_" + m.name);
  CsvWriter w(path, header);
  std::vector<std::string> row = {"0", "0"};
  const std::size_t n = log.config.models.size();
  std::vector<double> p0 = log.config.model_prior;
  if (p0.empty()) p0.assign(n, 1.0 / static_cast<double>(n));
  for (double p : p0) row.push_back(fmt(p));
  w.row(row);
  for (std::size_t s = 0; s < log.steps.size(); ++s) {
    row = {std::to_string(s + 1), std::to_string(log.steps[s].k)};
    for (double p : log.steps[s].p) row.push_back(fmt(p));
    w.row(row);
  }
}

inline void write_waypoints_csv(const RunLog& log, const std::filesystem::path& path) {
  CsvWriter w(path, kWaypointsHeader);
  for (std::size_t s = 0; s < log.steps.size(); ++s) {
    const StepLog& st = log.steps[s];
    for (std::size_t m : st.measured) {
      const MeasurementRecord& r = log.measurements[m];
      w.row({std::to_string(s + 1), std::to_string(st.k), std::to_string(m), fmt(r.x.x),
             fmt(r.x.y), fmt(st.gain), fmt(st.travel), st.relaxed ? "1" : "0", fmt(st.d)});
    }
  }
}

namespace detail {

inline nlohmann::json to_json(const PredictionError& e) {
  return {{"u", e.u}, {"v", e.v}, {"i", e.i}, {"e", e.mean()}};
}

inline nlohmann::json to_json(const Coverage& c) {
  return {{"u", c.u}, {"v", c.v}, {"i", c.i}};
}

inline nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

inline nlohmann::json runlog_json(const RunLog& log) {
  using nlohmann::json;
  const RunConfig& c = log.config;
  json j;
  j["schema"] = "flowlearn.runlog/" + std::to_string(RunLog::kVersion);
  j["seed"] = c.seed;
  j["metric"] = metric_name(c.metric);
  j["models"] = json::array();
  for (const ModelSpec& m : c.models) {
    j["models"].push_back({{"name", m.name},
                           {"sigma_u0", m.sigma_u0},
                           {"sigma_i0", m.sigma_i0},
                           {"amplitude", m.corruption.amplitude},
                           {"rotation", m.corruption.rotation},
                           {"shift", {m.corruption.shift.x, m.corruption.shift.y}},
                           {"intensity_scale", m.corruption.intensity_scale},
                           {"intensity_offset", m.corruption.intensity_offset}});
  }
  j["candidates"] = log.candidates.size();
  j["measurements"] = log.measurements.size();
  j["converged"] = log.converged;
  j["steps"] = json::array();
  for (const StepLog& s : log.steps) {
    json st = {{"k", s.k},
               {"measured", s.measured},
               {"gain", detail::num(s.gain)},
               {"travel", detail::num(s.travel)},
               {"relaxed", s.relaxed},
               {"d", detail::num(s.d)},
               {"p", s.p},
               {"log_likelihood", json::array()},
               {"underflow", s.underflow}};
    for (double v : s.log_likelihood) st["log_likelihood"].push_back(detail::num(v));
    if (s.error) st["error"] = detail::to_json(*s.error);
    j["steps"].push_back(std::move(st));
  }
  json ev;
  ev["test_points"] = log.test_points.size();
  ev["e0"] = detail::to_json(log.e0);
  ev["e0_models"] = json::array();
  for (const PredictionError& e : log.e0_models) ev["e0_models"].push_back(detail::to_json(e));
  ev["best_model"] = log.best_model;
  ev["e0_best"] = detail::to_json(log.e0_best);
  ev["e_final"] = detail::to_json(log.e_final);
  if (log.e0_measured) ev["e0_measured"] = detail::to_json(*log.e0_measured);
  if (log.e_final_measured) ev["e_final_measured"] = detail::to_json(*log.e_final_measured);
  if (log.coverage) ev["coverage"] = detail::to_json(*log.coverage);
  if (log.coverage_field_only) ev["coverage_field_only"] = detail::to_json(*log.coverage_field_only);
  j["evaluation"] = ev;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

/// Writes runlog.json and the four CSV tables into `dir`.
inline void write_run_outputs(const RunLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "runlog.json", runlog_json(log).dump(2) + "\n");
  write_measurements_csv(log, dir / "measurements.csv");
  write_posterior_csv(log, dir / "posterior_fields.csv");
  write_model_probs_csv(log, dir / "model_probs.csv");
  write_waypoints_csv(log, dir / "waypoints.csv");
}

}  // namespace flowlearn

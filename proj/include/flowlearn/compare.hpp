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

// Planner comparison across seeds: error-versus-budget curves for the
// greedy metrics and for lattices of several sizes.

#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "flowlearn/io/config.hpp"
#include "flowlearn/orchestrator.hpp"

namespace flowlearn {

/// Worker count from FLOWLEARN_WORKERS, defaulting to the hardware count.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("FLOWLEARN_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(0..n-1) on a bounded pool. The first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct CurvePoint {
  PlannerMetric metric = PlannerMetric::kEntropy;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  PredictionError error;
};

struct CompareResult {
  std::vector<CurvePoint> curve;
  std::vector<PlannerMetric> metrics;
  std::vector<double> mean_final;  // per metric, at the budget
  std::size_t budget = 0;
};

/// Configuration of one comparison run: no travel limit, no early stop.
inline RunConfig comparison_config(const RunConfig& base, const CompareSettings& s,
                                   PlannerMetric metric, std::uint64_t seed) {
  RunConfig c = base;
  c.seed = seed;
  c.metric = metric;
  c.max_measurements = s.max_measurements;
  c.tol = std::numeric_limits<double>::min();
  c.max_travel = 0.0;
  c.candidate_spacing = s.candidate_spacing;
  c.noisy_test_measurements = false;
  c.track_error = metric != PlannerMetric::kLattice;
  return c;
}

inline CompareResult compare_planners(const RunConfig& base, const CompareSettings& s,
                                      std::size_t workers = worker_count()) {
  if (s.seeds == 0) throw ArgumentError("comparison needs at least one seed");
  if (s.metrics.empty()) throw ArgumentError("comparison needs at least one metric");
  struct Job {
    PlannerMetric metric;
    std::uint64_t seed;
    int lattice = 0;
  };
  std::vector<Job> jobs;
  for (PlannerMetric m : s.metrics) {
    for (std::size_t i = 0; i < s.seeds; ++i) {
      const std::uint64_t seed = base.seed + i;
      if (m == PlannerMetric::kLattice) {
        for (int n : s.lattice_sizes) jobs.push_back({m, seed, n});
      } else {
        jobs.push_back({m, seed, 0});
      }
    }
  }
  std::vector<std::vector<CurvePoint>> out(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t q) {
    const Job& job = jobs[q];
    RunConfig c = comparison_config(base, s, job.metric, job.seed);
    if (job.metric == PlannerMetric::kLattice) {
      c.lattice_nx = c.lattice_ny = job.lattice;
      const RunLog log = run_experiment(c);
      out[q].push_back({job.metric, job.seed, log.measurements.size(), log.e_final});
      return;
    }
    const RunLog log = run_experiment(c);
    for (const StepLog& st : log.steps) out[q].push_back({job.metric, job.seed, st.k, *st.error});
  });

  CompareResult r;
  r.metrics = s.metrics;
  r.budget = s.max_measurements;
  for (auto& v : out) r.curve.insert(r.curve.end(), v.begin(), v.end());
  for (PlannerMetric m : s.metrics) {
    // Lattice: the largest lattice within the budget. Greedy: the last step.
    std::size_t target = 0;
    for (const CurvePoint& p : r.curve) {
      if (p.metric == m && p.k <= s.max_measurements) target = std::max(target, p.k);
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const CurvePoint& p : r.curve) {
      if (p.metric == m && p.k == target) {
        sum += p.error.mean();
        ++n;
      }
    }
    r.mean_final.push_back(n ? sum / static_cast<double>(n)
                             : std::numeric_limits<double>::quiet_NaN());
  }
  return r;
}

}  // namespace flowlearn

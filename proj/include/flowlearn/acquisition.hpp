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

// Simulated robot measurement: the rig sits at a perturbed pose, records an
// instantaneous series and the series is reduced to a MeasurementRecord.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "flowlearn/flowsim.hpp"
#include "flowlearn/random.hpp"
#include "flowlearn/rig.hpp"
#include "flowlearn/sigproc.hpp"

namespace flowlearn {

struct AcquisitionOptions {
  double rate_hz = 67.0;
  std::size_t target_samples = 200;  // decorrelated samples per measurement
  std::size_t pilot_samples = 670;   // used to size the full record
  std::size_t max_raw_samples = 40000;
  double location_std = 0.025;       // gamma_x (m)
  double heading_std = 5.0 * kDegree;  // gamma_beta (rad)
  std::size_t bootstrap_batches = 200;
  std::size_t max_lag = 400;
};

struct Acquisition {
  VelocitySampleSeries raw;
  MeasurementRecord record;
};

namespace detail {

// Draws the true rig position around the nominal one, staying in free space.
inline Point2 perturbed_location(const Domain2D& d, Point2 x0, double std, Rng& rng) {
  if (std <= 0.0) return x0;
  for (int attempt = 0; attempt < 32; ++attempt) {
    const Point2 x{x0.x + std * standard_normal(rng), x0.y + std * standard_normal(rng)};
    if (d.is_free(x)) return x;
  }
  return x0;
}

}  // namespace detail

/// Records one measurement at nominal pose (x0, beta0). Readings are produced
/// at the true pose and reconstructed with the nominal heading, so pose
/// errors enter the data the same way they do on hardware.
inline Acquisition acquire_measurement(const FlowGroundTruth& gt, const RigConfig& rig,
                                       Point2 x0, double beta0,
                                       const AcquisitionOptions& opt, std::uint64_t seed) {
  gt.domain().require_free(x0);
  if (!(opt.rate_hz > 0.0)) throw ArgumentError("sample rate must be positive");
  if (opt.target_samples < 2) throw ArgumentError("need at least two target samples");
  Rng pose_rng(derive_seed(seed, {1}));
  Rng noise_rng(derive_seed(seed, {2}));
  const Point2 x = detail::perturbed_location(gt.domain(), x0, opt.location_std, pose_rng);
  const double beta = beta0 + opt.heading_std * standard_normal(pose_rng);

  const FlowState mean = gt.evaluate(x);
  const double sigma = gt.q_ref() * mean.intensity;
  const double theta = gt.integral_timescale(x);
  FluctuationProcess proc(sigma, theta, derive_seed(seed, {3}));
  const double dt = 1.0 / opt.rate_hz;

  Acquisition out;
  out.raw.dt = dt;
  std::size_t dropped = 0;
  std::size_t k = 0;
  auto record_samples = [&](std::size_t count) {
    for (std::size_t c = 0; c < count; ++c, ++k) {
      const auto [eu, ev] = k == 0 ? proc.current() : proc.step(dt);
      const double t = static_cast<double>(k) * dt;
      RigReading r = simulate_reading(rig, mean.u + eu, mean.v + ev, beta, &noise_rng, t);
      r.heading = beta0;
      try {
        const Reconstruction rec = reconstruct_velocity(rig, r);
        SensorNoiseVariances nv;
        if (rig.noise) nv = sensor_noise_variances(rig, rec.j, rec.l, beta0);
        unsigned flags = kSampleOk;
        if (rec.non_adjacent) flags |= kSampleNonAdjacent;
        if (rec.outside_sector) flags |= kSampleOutsideSector;
        if (r.saturated) flags |= kSampleSaturated;
        out.raw.push_back(t, rec.u, rec.v, nv.u, nv.v, flags);
      } catch (const FlowUndetectableError&) {
        ++dropped;
      } catch (const SingularGeometryError&) {
        ++dropped;
      }
    }
  };

  record_samples(opt.pilot_samples);
  std::size_t needed = opt.pilot_samples;
  try {
    const TimescaleEstimate pilot = estimate_integral_timescale(out.raw, opt.max_lag);
    const std::size_t stride = decorrelation_stride(pilot.t_star, dt);
    needed = stride * (opt.target_samples - 1) + 1;
  } catch (const Error&) {
    // Degenerate pilot (e.g. laminar point): a short record suffices.
    needed = opt.target_samples;
  }
  needed = std::min(needed + needed / 20, opt.max_raw_samples);
  if (needed > k) record_samples(needed - k);

  if (out.raw.size() < 2) {
    throw FlowUndetectableError("flow undetectable at " + to_string(x0));
  }

  ProcessingOptions popt;
  popt.q_ref = gt.q_ref();
  popt.heading_std = opt.heading_std;
  popt.bootstrap_batches = opt.bootstrap_batches;
  popt.max_lag = opt.max_lag;
  popt.bootstrap_seed = derive_seed(seed, {4});
  out.record = process_series(out.raw, popt);
  // The full record can show a longer t* than the pilot; extend and redo.
  for (int round = 0; round < 3 && out.record.n < opt.target_samples &&
                      k < opt.max_raw_samples;
       ++round) {
    const double grow = static_cast<double>(opt.target_samples) /
                        static_cast<double>(std::max<std::size_t>(out.record.n, 1));
    const std::size_t more = static_cast<std::size_t>(std::ceil(1.05 * grow * k));
    record_samples(std::min(more, opt.max_raw_samples) - k);
    out.record = process_series(out.raw, popt);
  }
  out.record.x = x0;
  out.record.heading = beta0;
  out.record.actual_x = x;
  out.record.actual_heading = beta;
  out.record.dropped_samples = dropped;
  if (dropped > 0) out.record.flags |= kRecordDroppedSamples;
  return out;
}

}  // namespace flowlearn

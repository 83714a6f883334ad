// Copyright 2026 The uvr Authors
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

#ifndef UVR_SIMULATE_HPP_
#define UVR_SIMULATE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uvr/geometry.hpp"
#include "uvr/phantom.hpp"

namespace uvr {

enum class MaskKind { kFan, kRect };

// Imaging characteristics of one probe. Depth gain multiplies intensities by
// 1/(1 + depth_gain * depth_mm); contrast_gamma is applied as v^gamma;
// noise_level scales additive per-pixel Gaussian noise.
struct TransducerProfile {
  std::string id;
  FrameGeometry geom;
  MaskKind mask = MaskKind::kFan;
  double fan_width_deg = 60.0;  // (10, 180]
  double depth_gain = 0.0;      // per mm
  double contrast_gamma = 1.0;  // (0.2, 5)
  double noise_level = 0.0;

  void validate() const;
};

enum class TrajectoryKind { kFanSweep, kLinearSweep };

// Nominal motion plus i.i.d. per-step DOF jitter. Fan sweeps rotate about
// the frame-local x axis; linear sweeps translate along `direction`.
struct TrajectoryModel {
  TrajectoryKind kind = TrajectoryKind::kFanSweep;
  double total_rotation_deg = 30.0;   // fan
  double total_translation_mm = 0.0;  // linear
  Eigen::Vector3d direction{0.0, 0.0, 1.0};
  DofVector jitter_std;  // std per DOF component
  int frame_count = 60;
  uint64_t seed = 0;

  void validate() const;
  // Nominal per-step motion, before jitter.
  DofVector nominal_step() const;
};

// A simulated freehand scan: frames with aligned ground-truth poses.
struct Sweep {
  std::string id;
  std::string domain;  // "source" | "target"
  std::string profile_id;
  FrameGeometry geom;
  int frame_count = 0;
  std::vector<float> frames;  // T*H*W, frame-major, row-major per frame
  std::vector<Pose> gt_poses;
  uint64_t noise_seed = 0;
  uint64_t trajectory_seed = 0;

  size_t frame_size() const {
    return static_cast<size_t>(geom.width_px) * geom.height_px;
  }
  std::span<const float> frame(int t) const {
    return {frames.data() + frame_size() * t, frame_size()};
  }
  // N consecutive frames starting at `start` (contiguous in storage).
  std::span<const float> window(int start, int n) const {
    return {frames.data() + frame_size() * start, frame_size() * n};
  }
};

// One rendered slice through the phantom at `pose`. Deterministic given
// arguments; the additive-noise stream is seeded by frame_seed alone so
// frames can render in any order.
std::vector<float> render_frame(const Phantom& phantom, const Pose& pose,
                                const TransducerProfile& profile,
                                uint64_t frame_seed);

// Chains nominal+jitter steps from the identity, aligns the trajectory, and
// renders every frame (parallel over frames when threads > 1). Throws if the
// trajectory drifts into the gimbal guard.
Sweep generate_sweep(const Phantom& phantom, const TrajectoryModel& traj,
                     const TransducerProfile& profile,
                     const std::string& domain, const std::string& id,
                     uint64_t noise_seed, int threads = 1);

// Sweep directory layout: meta.json, frames.f32 (little-endian), poses.json.
void save_sweep(const Sweep& sweep, const std::filesystem::path& dir);
Sweep load_sweep(const std::filesystem::path& dir);

// All sweep subdirectories under `dir` (sorted by name).
std::vector<Sweep> load_sweep_set(const std::filesystem::path& dir);

void to_json(nlohmann::json& j, const TransducerProfile& p);
void from_json(const nlohmann::json& j, TransducerProfile& p);
void to_json(nlohmann::json& j, const TrajectoryModel& t);
void from_json(const nlohmann::json& j, TrajectoryModel& t);
void to_json(nlohmann::json& j, const FrameGeometry& g);
void from_json(const nlohmann::json& j, FrameGeometry& g);

}  // namespace uvr

#endif  // UVR_SIMULATE_HPP_

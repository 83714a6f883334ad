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

#include "uvr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uvr/io.hpp"
#include "uvr/rng.hpp"

namespace uvr {

namespace fs = std::filesystem;

void TransducerProfile::validate() const {
  if (!geom.valid()) throw std::invalid_argument("profile: bad geometry");
  if (mask == MaskKind::kFan &&
      (fan_width_deg <= 10.0 || fan_width_deg > 180.0)) {
    throw std::invalid_argument("profile: fan width outside (10, 180]");
  }
  if (contrast_gamma <= 0.2 || contrast_gamma >= 5.0) {
    throw std::invalid_argument("profile: gamma outside (0.2, 5)");
  }
  if (depth_gain < 0.0 || noise_level < 0.0) {
    throw std::invalid_argument("profile: negative gain or noise");
  }
}

void TrajectoryModel::validate() const {
  if (frame_count < 2) {
    throw std::invalid_argument("trajectory: frame_count < 2");
  }
  for (int i = 0; i < 6; ++i) {
    if (jitter_std[i] < 0.0) {
      throw std::invalid_argument("trajectory: negative jitter std");
    }
  }
  if (kind == TrajectoryKind::kLinearSweep &&
      std::abs(direction.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("trajectory: direction must be unit length");
  }
}

DofVector TrajectoryModel::nominal_step() const {
  DofVector step;
  const double steps = frame_count - 1;
  if (kind == TrajectoryKind::kFanSweep) {
    step.ax = total_rotation_deg / steps;
  } else {
    const Eigen::Vector3d t = direction * (total_translation_mm / steps);
    step.tx = t.x();
    step.ty = t.y();
    step.tz = t.z();
  }
  return step;
}

std::vector<float> render_frame(const Phantom& phantom, const Pose& pose,
                                const TransducerProfile& profile,
                                uint64_t frame_seed) {
  const FrameGeometry& g = profile.geom;
  std::vector<float> out(static_cast<size_t>(g.width_px) * g.height_px, 0.0f);
  const double half_fan_rad = profile.fan_width_deg / 2.0 * kDegToRad;
  Rng noise(frame_seed);

  size_t idx = 0;
  for (int v = 0; v < g.height_px; ++v) {
    for (int u = 0; u < g.width_px; ++u, ++idx) {
      const Eigen::Vector3d local = pixel_to_local(g, u, v);
      if (profile.mask == MaskKind::kFan &&
          std::abs(std::atan2(local.x(), local.y())) > half_fan_rad) {
        continue;  // outside the fan, stays 0; no noise draw
      }
      double value = phantom.sample_trilinear(pose.apply(local));
      value /= 1.0 + profile.depth_gain * local.y();
      if (profile.contrast_gamma != 1.0) {
        value = std::pow(value, profile.contrast_gamma);
      }
      if (profile.noise_level > 0.0) {
        value += profile.noise_level * noise.normal();
      }
      out[idx] = static_cast<float>(std::clamp(value, 0.0, 1.0));
    }
  }
  return out;
}

namespace {

// Rotations stay clear of the decode singularity by a wide margin.
constexpr double kGimbalGuardDeg = 89.0;

void check_gimbal(const Pose& p, int frame) {
  if (std::abs(p.m(2, 0)) >= std::sin(kGimbalGuardDeg * kDegToRad)) {
    throw std::runtime_error("generate_sweep: frame " + std::to_string(frame) +
                             " reaches the gimbal guard");
  }
}

}  // namespace

Sweep generate_sweep(const Phantom& phantom, const TrajectoryModel& traj,
                     const TransducerProfile& profile,
                     const std::string& domain, const std::string& id,
                     uint64_t noise_seed, int threads) {
  traj.validate();
  profile.validate();

  const int t_count = traj.frame_count;
  const DofVector nominal = traj.nominal_step();
  Rng jitter(traj.seed);

  std::vector<Pose> poses(t_count);
  poses[0] = Pose::identity();
  for (int t = 1; t < t_count; ++t) {
    DofVector step = nominal;
    for (int c = 0; c < 6; ++c) {
      // Always draw so the stream layout is independent of the std values.
      step[c] += traj.jitter_std[c] * jitter.normal();
    }
    poses[t] = compose(poses[t - 1], dof_to_pose(step));
    check_gimbal(poses[t], t);
  }
  poses = align_trajectory(poses);

  Sweep sweep;
  sweep.id = id;
  sweep.domain = domain;
  sweep.profile_id = profile.id;
  sweep.geom = profile.geom;
  sweep.frame_count = t_count;
  sweep.gt_poses = std::move(poses);
  sweep.noise_seed = noise_seed;
  sweep.trajectory_seed = traj.seed;
  sweep.frames.resize(sweep.frame_size() * t_count);

#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
  for (int t = 0; t < t_count; ++t) {
    const std::vector<float> frame = render_frame(
        phantom, sweep.gt_poses[t], profile, hash_mix(noise_seed, t));
    std::copy(frame.begin(), frame.end(),
              sweep.frames.begin() + sweep.frame_size() * t);
  }
  return sweep;
}

void save_sweep(const Sweep& sweep, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json meta{{"id", sweep.id},
                      {"domain", sweep.domain},
                      {"profile_id", sweep.profile_id},
                      {"geometry", sweep.geom},
                      {"frame_count", sweep.frame_count},
                      {"noise_seed", sweep.noise_seed},
                      {"trajectory_seed", sweep.trajectory_seed}};
  save_json(dir / "meta.json", meta);
  write_f32(dir / "frames.f32", sweep.frames);
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : sweep.gt_poses) poses.push_back(pose_to_json(p));
  save_json(dir / "poses.json", poses);
}

Sweep load_sweep(const fs::path& dir) {
  const nlohmann::json meta = load_json(dir / "meta.json");
  Sweep sweep;
  sweep.id = meta.at("id").get<std::string>();
  sweep.domain = meta.at("domain").get<std::string>();
  sweep.profile_id = meta.at("profile_id").get<std::string>();
  sweep.geom = meta.at("geometry").get<FrameGeometry>();
  sweep.frame_count = meta.at("frame_count").get<int>();
  sweep.noise_seed = meta.value("noise_seed", uint64_t{0});
  sweep.trajectory_seed = meta.value("trajectory_seed", uint64_t{0});
  sweep.frames = read_f32(dir / "frames.f32");
  if (sweep.frames.size() != sweep.frame_size() * sweep.frame_count) {
    throw std::runtime_error("sweep " + dir.string() +
                             ": frames.f32 size mismatch");
  }
  const nlohmann::json poses = load_json(dir / "poses.json");
  for (const auto& pj : poses) sweep.gt_poses.push_back(pose_from_json(pj));
  if (static_cast<int>(sweep.gt_poses.size()) != sweep.frame_count) {
    throw std::runtime_error("sweep " + dir.string() + ": pose count mismatch");
  }
  return sweep;
}

std::vector<Sweep> load_sweep_set(const fs::path& dir) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Sweep> sweeps;
  sweeps.reserve(dirs.size());
  for (const auto& d : dirs) sweeps.push_back(load_sweep(d));
  if (sweeps.empty()) {
    throw std::runtime_error("no sweeps found under " + dir.string());
  }
  return sweeps;
}

void to_json(nlohmann::json& j, const TransducerProfile& p) {
  j = nlohmann::json{{"id", p.id},
                     {"geometry", p.geom},
                     {"mask", p.mask == MaskKind::kFan ? "fan" : "rect"},
                     {"fan_width_deg", p.fan_width_deg},
                     {"depth_gain", p.depth_gain},
                     {"contrast_gamma", p.contrast_gamma},
                     {"noise_level", p.noise_level}};
}

void from_json(const nlohmann::json& j, TransducerProfile& p) {
  p.id = j.at("id").get<std::string>();
  p.geom = j.at("geometry").get<FrameGeometry>();
  const std::string mask = j.at("mask").get<std::string>();
  if (mask == "fan") {
    p.mask = MaskKind::kFan;
  } else if (mask == "rect") {
    p.mask = MaskKind::kRect;
  } else {
    throw std::invalid_argument("profile: unknown mask kind " + mask);
  }
  p.fan_width_deg = j.value("fan_width_deg", 60.0);
  p.depth_gain = j.value("depth_gain", 0.0);
  p.contrast_gamma = j.value("contrast_gamma", 1.0);
  p.noise_level = j.value("noise_level", 0.0);
}

void to_json(nlohmann::json& j, const TrajectoryModel& t) {
  j = nlohmann::json{
      {"kind", t.kind == TrajectoryKind::kFanSweep ? "fan_sweep"
                                                   : "linear_sweep"},
      {"total_rotation_deg", t.total_rotation_deg},
      {"total_translation_mm", t.total_translation_mm},
      {"direction", {t.direction.x(), t.direction.y(), t.direction.z()}},
      {"jitter_std", dof_to_json(t.jitter_std)},
      {"frame_count", t.frame_count},
      {"seed", t.seed}};
}

void from_json(const nlohmann::json& j, TrajectoryModel& t) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fan_sweep") {
    t.kind = TrajectoryKind::kFanSweep;
  } else if (kind == "linear_sweep") {
    t.kind = TrajectoryKind::kLinearSweep;
  } else {
    throw std::invalid_argument("trajectory: unknown kind " + kind);
  }
  t.total_rotation_deg = j.value("total_rotation_deg", 0.0);
  t.total_translation_mm = j.value("total_translation_mm", 0.0);
  if (j.contains("direction")) {
    auto d = j.at("direction");
    t.direction = {d.at(0).get<double>(), d.at(1).get<double>(),
                   d.at(2).get<double>()};
  }
  if (j.contains("jitter_std")) t.jitter_std = dof_from_json(j.at("jitter_std"));
  t.frame_count = j.at("frame_count").get<int>();
  t.seed = j.value("seed", uint64_t{0});
}

void to_json(nlohmann::json& j, const FrameGeometry& g) {
  j = nlohmann::json{{"width_px", g.width_px},
                     {"height_px", g.height_px},
                     {"spacing_mm", g.spacing_mm}};
}

void from_json(const nlohmann::json& j, FrameGeometry& g) {
  g.width_px = j.at("width_px").get<int>();
  g.height_px = j.at("height_px").get<int>();
  g.spacing_mm = j.at("spacing_mm").get<double>();
}

}  // namespace uvr

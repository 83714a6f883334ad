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

#include "uvr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uvr/rng.hpp"

namespace uvr {

void PhantomSpec::validate() const {
  if (nx < 8 || ny < 8 || nz < 8) {
    throw std::invalid_argument("phantom: dims must be >= 8 per axis");
  }
  if (voxel_mm <= 0.0) throw std::invalid_argument("phantom: voxel_mm <= 0");
  if (background < 0.0 || background > 1.0) {
    throw std::invalid_argument("phantom: background outside [0,1]");
  }
  if (speckle_sigma < 0.0 || speckle_sigma >= 1.0) {
    throw std::invalid_argument("phantom: speckle sigma outside [0,1)");
  }
  for (const auto& e : ellipsoids) {
    if (e.intensity < 0.0 || e.intensity > 1.0) {
      throw std::invalid_argument("phantom: ellipsoid intensity outside [0,1]");
    }
    if (e.semi_axes_mm.minCoeff() <= 0.0) {
      throw std::invalid_argument("phantom: nonpositive semi-axis");
    }
  }
}

Eigen::Vector3d Phantom::origin_mm() const {
  return {-(spec.nx - 1) * spec.voxel_mm / 2.0, 0.0,
          -(spec.nz - 1) * spec.voxel_mm / 2.0};
}

double Phantom::sample_trilinear(const Eigen::Vector3d& world_mm) const {
  const Eigen::Vector3d c = (world_mm - origin_mm()) / spec.voxel_mm;
  if (c.x() < 0.0 || c.y() < 0.0 || c.z() < 0.0 || c.x() > spec.nx - 1 ||
      c.y() > spec.ny - 1 || c.z() > spec.nz - 1) {
    return 0.0;
  }
  int i0 = std::min(static_cast<int>(c.x()), spec.nx - 2);
  int j0 = std::min(static_cast<int>(c.y()), spec.ny - 2);
  int k0 = std::min(static_cast<int>(c.z()), spec.nz - 2);
  const double fx = c.x() - i0, fy = c.y() - j0, fz = c.z() - k0;
  double v = 0.0;
  for (int dk = 0; dk < 2; ++dk) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) *
                         (dk ? fz : 1.0 - fz);
        v += w * at(i0 + di, j0 + dj, k0 + dk);
      }
    }
  }
  return v;
}

namespace {

double ellipsoid_volume(const Ellipsoid& e) {
  return e.semi_axes_mm.x() * e.semi_axes_mm.y() * e.semi_axes_mm.z();
}

}  // namespace

Phantom build_phantom(const PhantomSpec& spec) {
  spec.validate();
  Phantom ph;
  ph.spec = spec;
  ph.voxels.resize(static_cast<size_t>(spec.nx) * spec.ny * spec.nz);
  const Eigen::Vector3d origin = ph.origin_mm();

  Rng rng(spec.seed);
  size_t idx = 0;
  for (int k = 0; k < spec.nz; ++k) {
    for (int j = 0; j < spec.ny; ++j) {
      for (int i = 0; i < spec.nx; ++i, ++idx) {
        const Eigen::Vector3d p =
            origin + Eigen::Vector3d(i, j, k) * spec.voxel_mm;
        double value = spec.background;
        double best_vol = 0.0;
        bool found = false;
        for (const auto& e : spec.ellipsoids) {
          const Eigen::Vector3d q =
              (p - e.center_mm).cwiseQuotient(e.semi_axes_mm);
          if (q.squaredNorm() <= 1.0) {
            const double vol = ellipsoid_volume(e);
            // Innermost wins: smallest volume, later entries break ties.
            if (!found || vol <= best_vol) {
              best_vol = vol;
              value = e.intensity;
              found = true;
            }
          }
        }
        if (spec.speckle_sigma > 0.0) {
          value *= 1.0 + spec.speckle_sigma * rng.normal();
        }
        ph.voxels[idx] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return ph;
}

void to_json(nlohmann::json& j, const Ellipsoid& e) {
  j = nlohmann::json{
      {"center_mm", {e.center_mm.x(), e.center_mm.y(), e.center_mm.z()}},
      {"semi_axes_mm",
       {e.semi_axes_mm.x(), e.semi_axes_mm.y(), e.semi_axes_mm.z()}},
      {"intensity", e.intensity}};
}

void from_json(const nlohmann::json& j, Ellipsoid& e) {
  auto c = j.at("center_mm");
  auto s = j.at("semi_axes_mm");
  e.center_mm = {c.at(0).get<double>(), c.at(1).get<double>(),
                 c.at(2).get<double>()};
  e.semi_axes_mm = {s.at(0).get<double>(), s.at(1).get<double>(),
                    s.at(2).get<double>()};
  e.intensity = j.at("intensity").get<double>();
}

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  j = nlohmann::json{{"nx", s.nx},
                     {"ny", s.ny},
                     {"nz", s.nz},
                     {"voxel_mm", s.voxel_mm},
                     {"background", s.background},
                     {"ellipsoids", s.ellipsoids},
                     {"speckle_sigma", s.speckle_sigma},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, PhantomSpec& s) {
  s.nx = j.at("nx").get<int>();
  s.ny = j.at("ny").get<int>();
  s.nz = j.at("nz").get<int>();
  s.voxel_mm = j.at("voxel_mm").get<double>();
  s.background = j.at("background").get<double>();
  s.ellipsoids = j.value("ellipsoids", std::vector<Ellipsoid>{});
  s.speckle_sigma = j.value("speckle_sigma", 0.0);
  s.seed = j.value("seed", uint64_t{0});
}

}  // namespace uvr

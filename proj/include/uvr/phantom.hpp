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

#ifndef UVR_PHANTOM_HPP_
#define UVR_PHANTOM_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include <json.hpp>

namespace uvr {

struct Ellipsoid {
  Eigen::Vector3d center_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d semi_axes_mm = Eigen::Vector3d::Ones();
  double intensity = 0.5;
};

// Scalar-field phantom description. The grid is centered laterally (x) and
// elevationally (z) on the origin; depth (y) starts at 0 where the
// transducer face sits.
struct PhantomSpec {
  int nx = 64, ny = 64, nz = 64;
  double voxel_mm = 1.0;
  double background = 0.25;          // [0,1]
  std::vector<Ellipsoid> ellipsoids;
  double speckle_sigma = 0.0;        // multiplicative, < 1
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct Phantom {
  PhantomSpec spec;
  std::vector<float> voxels;  // x-fastest: i + nx*(j + ny*k)

  // World position of voxel (0,0,0) center.
  Eigen::Vector3d origin_mm() const;

  float at(int i, int j, int k) const {
    return voxels[static_cast<size_t>(i) +
                  static_cast<size_t>(spec.nx) *
                      (static_cast<size_t>(j) +
                       static_cast<size_t>(spec.ny) * static_cast<size_t>(k))];
  }

  // Trilinear interpolation between voxel centers; 0 outside the lattice.
  double sample_trilinear(const Eigen::Vector3d& world_mm) const;
};

// Deterministic given spec: value = intensity of the innermost (smallest
// volume) containing ellipsoid, else background, times (1 + sigma*eta) with
// eta drawn i.i.d. standard normal in voxel scan order, clamped to [0,1].
Phantom build_phantom(const PhantomSpec& spec);

void to_json(nlohmann::json& j, const Ellipsoid& e);
void from_json(const nlohmann::json& j, Ellipsoid& e);
void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);

}  // namespace uvr

#endif  // UVR_PHANTOM_HPP_

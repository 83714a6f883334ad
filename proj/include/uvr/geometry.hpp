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

#ifndef UVR_GEOMETRY_HPP_
#define UVR_GEOMETRY_HPP_

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include <json.hpp>

namespace uvr {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

// Raised when a rotation is too close to the |pitch| = 90 deg singularity
// for the Euler decomposition to be meaningful.
struct DegenerateRotationError : std::domain_error {
  using std::domain_error::domain_error;
};

// Six motion parameters: translations in millimeters, rotations in degrees.
struct DofVector {
  double tx = 0.0, ty = 0.0, tz = 0.0;  // mm
  double ax = 0.0, ay = 0.0, az = 0.0;  // deg

  double& operator[](int i) { return (&tx)[i]; }
  double operator[](int i) const { return (&tx)[i]; }

  bool all_finite() const;
};

bool operator==(const DofVector& a, const DofVector& b);

// Rigid transform placing a frame in world space. Top-left 3x3 block is the
// rotation, last column the translation in mm, bottom row (0,0,0,1).
struct Pose {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();

  static Pose identity() { return Pose{}; }

  Eigen::Matrix3d rotation() const { return m.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m.block<3, 1>(0, 3); }
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation() * p + translation();
  }
};

// Image-plane metadata: pixel counts and isotropic pixel size in mm.
struct FrameGeometry {
  int width_px = 0;
  int height_px = 0;
  double spacing_mm = 0.0;

  bool valid() const {
    return width_px >= 2 && height_px >= 2 && spacing_mm > 0.0;
  }
};

Pose compose(const Pose& a, const Pose& b);

// Inverse using the orthonormal-rotation identity; keeps long composition
// chains well conditioned compared to a general 4x4 inverse.
Pose rigid_inverse(const Pose& p);

// Encodes d as T(tx,ty,tz) with rotation Rz(az) * Ry(ay) * Rx(ax).
Pose dof_to_pose(const DofVector& d);

// Decodes under the same convention. Requires |pitch| away from 90 deg;
// throws DegenerateRotationError when |R(2,0)| >= 1 - 1e-9.
DofVector pose_to_dof(const Pose& p);

// b expressed in a's frame: inverse(a) * b.
Pose relative_pose(const Pose& a, const Pose& b);

DofVector scale_dof(const DofVector& d, double s);

// Pixel (u,v) in frame-local mm: lateral centered on the transducer head,
// depth along +y, elevation zero. The head's top-edge center is the local
// origin.
Eigen::Vector3d pixel_to_local(const FrameGeometry& g, double u, double v);

// World positions of the corners (u,v) in {0,W-1} x {0,H-1}, in that order:
// (0,0), (W-1,0), (0,H-1), (W-1,H-1).
std::array<Eigen::Vector3d, 4> frame_corners(const FrameGeometry& g,
                                             const Pose& p);

// Left-multiplies every pose by inverse(poses[0]) so the first frame sits at
// the identity (transducer head at the origin). Relative transforms between
// frames are preserved.
std::vector<Pose> align_trajectory(const std::vector<Pose>& poses);

// Row-major 16-element JSON array.
nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json dof_to_json(const DofVector& d);
DofVector dof_from_json(const nlohmann::json& j);

// Max deviation of R^T R from identity plus bottom-row/determinant checks;
// used by validation and tests.
double rigidity_error(const Pose& p);

}  // namespace uvr

#endif  // UVR_GEOMETRY_HPP_

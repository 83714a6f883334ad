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

#include "uvr/geometry.hpp"

#include <cmath>

namespace uvr {

bool DofVector::all_finite() const {
  for (int i = 0; i < 6; ++i) {
    if (!std::isfinite((*this)[i])) return false;
  }
  return true;
}

bool operator==(const DofVector& a, const DofVector& b) {
  for (int i = 0; i < 6; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.m = a.m * b.m;
  out.m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return out;
}

Pose rigid_inverse(const Pose& p) {
  Eigen::Matrix3d rt = p.rotation().transpose();
  Pose out;
  out.m.setIdentity();
  out.m.topLeftCorner<3, 3>() = rt;
  out.m.block<3, 1>(0, 3) = -(rt * p.translation());
  return out;
}

Pose dof_to_pose(const DofVector& d) {
  if (!d.all_finite()) {
    throw std::invalid_argument("dof_to_pose: non-finite component");
  }
  const double ca = std::cos(d.ax * kDegToRad), sa = std::sin(d.ax * kDegToRad);
  const double cb = std::cos(d.ay * kDegToRad), sb = std::sin(d.ay * kDegToRad);
  const double cc = std::cos(d.az * kDegToRad), sc = std::sin(d.az * kDegToRad);

  Pose p;
  // Rz(az) * Ry(ay) * Rx(ax), written out.
  p.m(0, 0) = cc * cb;
  p.m(0, 1) = cc * sb * sa - sc * ca;
  p.m(0, 2) = cc * sb * ca + sc * sa;
  p.m(1, 0) = sc * cb;
  p.m(1, 1) = sc * sb * sa + cc * ca;
  p.m(1, 2) = sc * sb * ca - cc * sa;
  p.m(2, 0) = -sb;
  p.m(2, 1) = cb * sa;
  p.m(2, 2) = cb * ca;
  p.m(0, 3) = d.tx;
  p.m(1, 3) = d.ty;
  p.m(2, 3) = d.tz;
  p.m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return p;
}

DofVector pose_to_dof(const Pose& p) {
  const double r20 = p.m(2, 0);
  if (std::abs(r20) >= 1.0 - 1e-9) {
    throw DegenerateRotationError("pose_to_dof: pitch within guard of 90 deg");
  }
  DofVector d;
  d.tx = p.m(0, 3);
  d.ty = p.m(1, 3);
  d.tz = p.m(2, 3);
  d.ay = std::asin(-r20) * kRadToDeg;
  d.ax = std::atan2(p.m(2, 1), p.m(2, 2)) * kRadToDeg;
  d.az = std::atan2(p.m(1, 0), p.m(0, 0)) * kRadToDeg;
  return d;
}

Pose relative_pose(const Pose& a, const Pose& b) {
  return compose(rigid_inverse(a), b);
}

DofVector scale_dof(const DofVector& d, double s) {
  if (!std::isfinite(s)) {
    throw std::invalid_argument("scale_dof: non-finite scale");
  }
  DofVector out;
  for (int i = 0; i < 6; ++i) out[i] = d[i] * s;
  return out;
}

Eigen::Vector3d pixel_to_local(const FrameGeometry& g, double u, double v) {
  const double s = g.spacing_mm;
  return {(u - (g.width_px - 1) / 2.0) * s, v * s, 0.0};
}

std::array<Eigen::Vector3d, 4> frame_corners(const FrameGeometry& g,
                                             const Pose& p) {
  const double w = g.width_px - 1, h = g.height_px - 1;
  return {p.apply(pixel_to_local(g, 0, 0)), p.apply(pixel_to_local(g, w, 0)),
          p.apply(pixel_to_local(g, 0, h)), p.apply(pixel_to_local(g, w, h))};
}

std::vector<Pose> align_trajectory(const std::vector<Pose>& poses) {
  if (poses.empty()) {
    throw std::invalid_argument("align_trajectory: empty pose list");
  }
  const Pose inv0 = rigid_inverse(poses[0]);
  std::vector<Pose> out(poses.size());
  out[0] = Pose::identity();
  for (size_t i = 1; i < poses.size(); ++i) out[i] = compose(inv0, poses[i]);
  return out;
}

nlohmann::json pose_to_json(const Pose& p) {
  std::array<double, 16> flat;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) flat[r * 4 + c] = p.m(r, c);
  }
  return nlohmann::json(flat);
}

Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) {
    throw std::invalid_argument("pose_from_json: expected 16-element array");
  }
  Pose p;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) p.m(r, c) = j[r * 4 + c].get<double>();
  }
  return p;
}

nlohmann::json dof_to_json(const DofVector& d) {
  return nlohmann::json{{"tx", d.tx}, {"ty", d.ty}, {"tz", d.tz},
                        {"ax", d.ax}, {"ay", d.ay}, {"az", d.az}};
}

DofVector dof_from_json(const nlohmann::json& j) {
  DofVector d;
  d.tx = j.at("tx").get<double>();
  d.ty = j.at("ty").get<double>();
  d.tz = j.at("tz").get<double>();
  d.ax = j.at("ax").get<double>();
  d.ay = j.at("ay").get<double>();
  d.az = j.at("az").get<double>();
  return d;
}

double rigidity_error(const Pose& p) {
  const Eigen::Matrix3d r = p.rotation();
  double err = (r.transpose() * r - Eigen::Matrix3d::Identity())
                   .cwiseAbs()
                   .maxCoeff();
  err = std::max(err, std::abs(r.determinant() - 1.0));
  err = std::max(err, std::abs(p.m(3, 0)));
  err = std::max(err, std::abs(p.m(3, 1)));
  err = std::max(err, std::abs(p.m(3, 2)));
  err = std::max(err, std::abs(p.m(3, 3) - 1.0));
  return err;
}

}  // namespace uvr

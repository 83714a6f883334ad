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

#ifndef UVR_DATASET_HPP_
#define UVR_DATASET_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uvr/simulate.hpp"

namespace uvr {

// One N-frame window with its motion label. `frames` is a view into the
// owning Sweep's storage (windows of consecutive frames are contiguous), so
// samples are only valid while that Sweep is alive.
struct Sample {
  std::string domain;
  std::string sweep_id;
  int start = 0;
  int n_frames = 0;
  const float* frames = nullptr;  // n_frames * H * W
  DofVector label;                // first->last frame relative motion
};

// Per-component mean and population std over a sample set; std floored at
// 1e-6 so standardization never divides by zero.
struct DofStats {
  std::array<double, 6> mean{};
  std::array<double, 6> stddev{1, 1, 1, 1, 1, 1};

  DofVector standardize(const DofVector& d) const;
  DofVector destandardize(const DofVector& d) const;
};

// Windows start at 0, stride, 2*stride, ... while start+N-1 < T. The label
// is pose_to_dof(relative_pose(gt[start], gt[start+N-1])).
std::vector<Sample> extract_samples(const Sweep& sweep, int n_frames,
                                    int stride = 1);

std::vector<Sample> extract_samples(const std::vector<Sweep>& sweeps,
                                    int n_frames, int stride = 1);

DofStats standardize_stats(const std::vector<Sample>& samples);

// Immutable source-domain pool with labels pre-standardized for pairing.
struct SamplePool {
  std::vector<Sample> samples;
  DofStats stats;
  std::vector<std::array<double, 6>> standardized_labels;

  static SamplePool build(std::vector<Sample> samples, const DofStats& stats);
};

// Index of the pool sample whose standardized label is nearest (Euclidean)
// to y standardized under `stats`; ties resolve to the lowest index.
// Exhaustive scan.
size_t nearest_source_sample(const SamplePool& pool, const DofVector& y,
                             const DofStats& stats);

// Seeded permutation of 0..count-1 split into batches of k; the final short
// batch is kept.
std::vector<std::vector<uint32_t>> batch_iter(size_t count, int k,
                                              uint64_t epoch_seed);

void to_json(nlohmann::json& j, const DofStats& s);
void from_json(const nlohmann::json& j, DofStats& s);

}  // namespace uvr

#endif  // UVR_DATASET_HPP_

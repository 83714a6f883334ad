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

#include "uvr/dataset.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "uvr/rng.hpp"

namespace uvr {

DofVector DofStats::standardize(const DofVector& d) const {
  DofVector out;
  for (int i = 0; i < 6; ++i) out[i] = (d[i] - mean[i]) / stddev[i];
  return out;
}

DofVector DofStats::destandardize(const DofVector& d) const {
  DofVector out;
  for (int i = 0; i < 6; ++i) out[i] = d[i] * stddev[i] + mean[i];
  return out;
}

std::vector<Sample> extract_samples(const Sweep& sweep, int n_frames,
                                    int stride) {
  if (n_frames < 2) throw std::invalid_argument("extract_samples: N < 2");
  if (stride < 1) throw std::invalid_argument("extract_samples: stride < 1");
  if (sweep.frame_count < n_frames) {
    throw std::invalid_argument("extract_samples: sweep shorter than window");
  }
  std::vector<Sample> samples;
  for (int start = 0; start + n_frames <= sweep.frame_count; start += stride) {
    Sample s;
    s.domain = sweep.domain;
    s.sweep_id = sweep.id;
    s.start = start;
    s.n_frames = n_frames;
    s.frames = sweep.window(start, n_frames).data();
    s.label = pose_to_dof(
        relative_pose(sweep.gt_poses[start], sweep.gt_poses[start + n_frames - 1]));
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> extract_samples(const std::vector<Sweep>& sweeps,
                                    int n_frames, int stride) {
  std::vector<Sample> all;
  for (const auto& sweep : sweeps) {
    auto s = extract_samples(sweep, n_frames, stride);
    all.insert(all.end(), s.begin(), s.end());
  }
  return all;
}

DofStats standardize_stats(const std::vector<Sample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("standardize_stats: empty sample list");
  }
  DofStats stats;
  const double n = static_cast<double>(samples.size());
  for (int c = 0; c < 6; ++c) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.label[c];
    stats.mean[c] = sum / n;
    double sq = 0.0;
    for (const auto& s : samples) {
      const double d = s.label[c] - stats.mean[c];
      sq += d * d;
    }
    stats.stddev[c] = std::max(std::sqrt(sq / n), 1e-6);
  }
  return stats;
}

SamplePool SamplePool::build(std::vector<Sample> samples,
                             const DofStats& stats) {
  SamplePool pool;
  pool.samples = std::move(samples);
  pool.stats = stats;
  pool.standardized_labels.reserve(pool.samples.size());
  for (const auto& s : pool.samples) {
    const DofVector z = stats.standardize(s.label);
    pool.standardized_labels.push_back({z.tx, z.ty, z.tz, z.ax, z.ay, z.az});
  }
  return pool;
}

size_t nearest_source_sample(const SamplePool& pool, const DofVector& y,
                             const DofStats& stats) {
  if (pool.samples.empty()) {
    throw std::logic_error("nearest_source_sample: empty pool");
  }
  const DofVector zq = stats.standardize(y);
  const std::array<double, 6> q{zq.tx, zq.ty, zq.tz, zq.ax, zq.ay, zq.az};
  size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pool.standardized_labels.size(); ++i) {
    const auto& z = pool.standardized_labels[i];
    double d2 = 0.0;
    for (int c = 0; c < 6; ++c) {
      const double d = z[c] - q[c];
      d2 += d * d;
    }
    if (d2 < best_d2) {  // strict: ties keep the lowest index
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

std::vector<std::vector<uint32_t>> batch_iter(size_t count, int k,
                                              uint64_t epoch_seed) {
  if (k < 1) throw std::invalid_argument("batch_iter: k < 1");
  Rng rng(epoch_seed);
  const std::vector<uint32_t> order = rng.permutation(count);
  std::vector<std::vector<uint32_t>> batches;
  for (size_t i = 0; i < count; i += k) {
    const size_t end = std::min(count, i + k);
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  return batches;
}

void to_json(nlohmann::json& j, const DofStats& s) {
  j = nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}};
}

void from_json(const nlohmann::json& j, DofStats& s) {
  for (int c = 0; c < 6; ++c) {
    s.mean[c] = j.at("mean").at(c).get<double>();
    s.stddev[c] = j.at("stddev").at(c).get<double>();
  }
}

}  // namespace uvr

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

#ifndef UVR_MODEL_HPP_
#define UVR_MODEL_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uvr/dataset.hpp"
#include "uvr/net_ops.hpp"

namespace uvr {

// Checkpoint roles.
inline constexpr const char* kRoleSourceFull = "extractor+regressor";
inline constexpr const char* kRoleAdapted = "adapted_extractor";

struct NetworkConfig {
  int n_frames = 5;
  int height = 64;
  int width = 64;
  std::vector<int> channels{16, 32, 64, 64};  // one entry per conv stage
  int kernel = 3;
  int feature_width = 128;
  uint64_t init_seed = 0;

  int stages() const { return static_cast<int>(channels.size()); }
  void validate() const;  // throws std::invalid_argument
};

// Flat single-precision weights plus everything needed to run them:
// architecture, label normalization snapshot, and the checkpoint role.
struct Params {
  NetworkConfig config;
  DofStats stats;
  std::string role = kRoleSourceFull;
  std::vector<float> values;
};

NetSpec make_net_spec(const NetworkConfig& config);

// Named segments in flat-vector order, for checkpoint headers.
std::vector<std::pair<std::string, SegSpec>> named_segments(
    const NetSpec& spec);

// He-style fan-in scaled Gaussian weights, zero biases, seeded.
Params init_network(const NetworkConfig& config);

// x is an n_frames*H*W tensor in [0,1]; returns the feature vector.
std::vector<float> extract_features(const Params& params,
                                    std::span<const float> x);

// Affine head on a feature vector; output lives in standardized label space.
DofVector regress_dof(const Params& params, std::span<const float> features);

// Scalar loss definitions (batch of 6-vectors / feature-vector pairs).
double mse_value(std::span<const std::array<float, 6>> pred,
                 std::span<const std::array<float, 6>> label);

// Mean over pairs of ||v_s - v_t||_2. Per-pair norms are summed after
// sorting, so the value is invariant to pair order bit for bit.
double discrepancy_value(
    std::span<const std::pair<std::vector<float>, std::vector<float>>> pairs);

struct BatchGrad {
  double loss = 0.0;
  std::vector<float> grad;  // full parameter layout
};

// MSE over a batch with exact gradients for every parameter. Items may be
// processed in parallel; per-item gradients merge in item order, so the
// result is independent of the thread count.
BatchGrad mse_loss_grad(const Params& params,
                        const std::vector<const float*>& xs,
                        const std::vector<std::array<float, 6>>& labels_std,
                        int threads = 1);

// Discrepancy loss over (target input, frozen source input) pairs.
// Gradients flow into extractor segments of `target` only; `source` is
// treated as a constant and its regressor is never touched.
BatchGrad discrepancy_loss_grad(
    const Params& target, const Params& source,
    const std::vector<std::pair<const float*, const float*>>& pairs_t_s,
    int threads = 1);

// Forward-only batch regression (extractor from one params object, head
// from another). Output is in standardized label space.
std::vector<std::array<float, 6>> regress_windows(
    const Params& extractor, const Params& regressor,
    const std::vector<const float*>& xs, int threads = 1);

std::vector<std::vector<float>> extract_features_batch(
    const Params& params, const std::vector<const float*>& xs,
    int threads = 1);

// Checkpoint container: magic, JSON header (format version, role, config,
// stats, per-segment byte offsets), little-endian float payload. Extra
// segments carry optimizer state for resumable training snapshots.
void save_checkpoint(
    const Params& params, const std::filesystem::path& path,
    const nlohmann::json& extra_header = nlohmann::json::object(),
    const std::map<std::string, std::vector<float>>& extra_segments = {});

struct CheckpointData {
  Params params;
  nlohmann::json header;
  std::map<std::string, std::vector<float>> extras;
};

CheckpointData load_checkpoint_full(const std::filesystem::path& path);
Params load_checkpoint(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);

}  // namespace uvr

#endif  // UVR_MODEL_HPP_

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

#ifndef UVR_TRAINING_HPP_
#define UVR_TRAINING_HPP_

#include <functional>
#include <optional>
#include <span>

#include "uvr/model.hpp"

namespace uvr {

struct TrainConfig {
  int epochs = 60;
  int batch = 24;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  int window = 5;  // frames per sample
  double validation_fraction = 0.2;
  int checkpoint_every = 0;  // epochs between state snapshots; 0 disables
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when no validation set exists
  double wall_s = 0.0;
};

struct RunLog {
  uint64_t seed = 0;
  nlohmann::json config;
  std::vector<EpochRecord> epochs;
};

void write_runlog(const std::filesystem::path& path, const RunLog& log);

class Adam {
 public:
  Adam(size_t n, double lr, double b1, double b2, double eps);

  // One update over params[begin, end) with matching grad entries.
  void step(std::span<float> params, std::span<const float> grad,
            size_t begin, size_t end);

  std::vector<float> m, v;
  int64_t t = 0;
  double lr, b1, b2, eps;
};

// Deterministic whole-sweep validation split (never splits within a sweep,
// so overlapping windows cannot leak across the split).
void split_sweeps(const std::vector<Sweep>& all, double val_fraction,
                  uint64_t seed, std::vector<const Sweep*>& train,
                  std::vector<const Sweep*>& val);

struct TrainResult {
  Params best;     // lowest validation loss (final params when no val set)
  Params final;    // after the last epoch
  RunLog log;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

using EpochCallback =
    std::function<void(int epoch, const Params& current, const EpochRecord&)>;

// Step A: joint extractor+regressor training with MSE on standardized
// labels. The network is initialized from the training seed; label stats
// come from the training samples and are embedded in the checkpoint.
TrainResult train_source(const std::vector<const Sweep*>& train_sweeps,
                         const std::vector<const Sweep*>& val_sweeps,
                         NetworkConfig net_config, const TrainConfig& config,
                         const EpochCallback& on_epoch = nullptr);

// Convenience: split then train.
TrainResult train_source_auto_split(const std::vector<Sweep>& sweeps,
                                    const NetworkConfig& net_config,
                                    const TrainConfig& config,
                                    const EpochCallback& on_epoch = nullptr);

struct AdaptResult {
  Params adapted;  // final-epoch extractor (regressor bytes carried intact)
  RunLog log;
  std::vector<double> batch_losses;  // every batch, all epochs, in order
};

// Step B: initializes the target extractor from the source checkpoint and
// minimizes the paired feature discrepancy, updating extractor segments
// only. The source parameters are never modified. Target labels feed the
// nearest-pool pairing and nothing else; `frozen_pairing`, when given, maps
// each target sample index to a pool index and bypasses the label search.
AdaptResult adapt_target(const Params& source,
                         const std::vector<const Sweep*>& target_sweeps,
                         const std::vector<const Sweep*>& pool_sweeps,
                         const TrainConfig& config,
                         const std::vector<uint32_t>* frozen_pairing = nullptr,
                         const EpochCallback& on_epoch = nullptr);

enum class BaselineMode { kTargetOnly, kMixed };

// Source-style MSE training on the mode's sample set. Mixed mode merges
// source and target sweeps and computes label stats on the union.
TrainResult train_baseline(BaselineMode mode,
                           const std::vector<Sweep>& source_sweeps,
                           const std::vector<Sweep>& target_sweeps,
                           const NetworkConfig& net_config,
                           const TrainConfig& config,
                           const EpochCallback& on_epoch = nullptr);

// Resumable training snapshot: parameters plus optimizer state.
struct TrainState {
  Params current;
  Params best;
  std::vector<float> adam_m, adam_v;
  int64_t adam_t = 0;
  int completed_epochs = 0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

void save_train_state(const TrainState& state,
                      const std::filesystem::path& path);
TrainState load_train_state(const std::filesystem::path& path);

// Continues train_source from a snapshot until config.epochs total epochs
// have run. An empty snapshot (nullopt) starts from scratch.
TrainResult train_source_resume(const std::vector<const Sweep*>& train_sweeps,
                                const std::vector<const Sweep*>& val_sweeps,
                                NetworkConfig net_config,
                                const TrainConfig& config,
                                std::optional<TrainState> state,
                                const EpochCallback& on_epoch = nullptr);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace uvr

#endif  // UVR_TRAINING_HPP_

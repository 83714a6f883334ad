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

#include "uvr/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uvr/io.hpp"
#include "uvr/rng.hpp"

namespace uvr {

namespace {

// Stream tags for deriving independent seeds from the master train seed.
constexpr uint64_t kInitStream = 0x696e6974;   // network init
constexpr uint64_t kSplitStream = 0x73706c74;  // validation split

std::array<float, 6> standardized_label(const DofStats& stats,
                                        const DofVector& label) {
  const DofVector z = stats.standardize(label);
  return {static_cast<float>(z.tx), static_cast<float>(z.ty),
          static_cast<float>(z.tz), static_cast<float>(z.ax),
          static_cast<float>(z.ay), static_cast<float>(z.az)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<Sample> gather_samples(const std::vector<const Sweep*>& sweeps,
                                   int window) {
  std::vector<Sample> all;
  for (const Sweep* s : sweeps) {
    auto part = extract_samples(*s, window);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs < 1");
  if (batch < 1) throw std::invalid_argument("train: batch < 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("train: step size <= 0");
  if (window < 2) throw std::invalid_argument("train: window < 2");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("train: validation fraction outside [0,1)");
  }
  if (threads < 1) throw std::invalid_argument("train: threads < 1");
}

Adam::Adam(size_t n, double lr_in, double b1_in, double b2_in, double eps_in)
    : m(n, 0.0f), v(n, 0.0f), lr(lr_in), b1(b1_in), b2(b2_in), eps(eps_in) {}

void Adam::step(std::span<float> params, std::span<const float> grad,
                size_t begin, size_t end) {
  ++t;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (size_t i = begin; i < end; ++i) {
    const double g = grad[i];
    const double mi = b1 * m[i] + (1.0 - b1) * g;
    const double vi = b2 * v[i] + (1.0 - b2) * g * g;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
    params[i] = static_cast<float>(params[i] - update);
  }
}

void split_sweeps(const std::vector<Sweep>& all, double val_fraction,
                  uint64_t seed, std::vector<const Sweep*>& train,
                  std::vector<const Sweep*>& val) {
  train.clear();
  val.clear();
  const size_t n = all.size();
  if (n == 0) throw std::invalid_argument("split_sweeps: empty sweep list");
  size_t n_val = static_cast<size_t>(
      std::llround(val_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  Rng rng(hash_mix(seed, kSplitStream));
  std::vector<uint32_t> perm = rng.permutation(n);
  std::vector<bool> is_val(n, false);
  for (size_t i = 0; i < n_val; ++i) is_val[perm[i]] = true;
  for (size_t i = 0; i < n; ++i) {
    (is_val[i] ? val : train).push_back(&all[i]);
  }
}

void write_runlog(const std::filesystem::path& path, const RunLog& log) {
  std::string out;
  nlohmann::json head{{"type", "run"}, {"seed", log.seed}, {"config", log.config}};
  out += head.dump() + "\n";
  for (const auto& e : log.epochs) {
    nlohmann::json rec{{"type", "epoch"},
                       {"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"wall_s", e.wall_s}};
    if (std::isnan(e.val_loss)) {
      rec["val_loss"] = nullptr;
    } else {
      rec["val_loss"] = e.val_loss;
    }
    out += rec.dump() + "\n";
  }
  write_file_atomic(path, out);
}

namespace {

struct MseDataset {
  std::vector<Sample> train_samples;
  std::vector<Sample> val_samples;
  DofStats stats;
  std::vector<std::array<float, 6>> train_labels;
  std::vector<std::array<float, 6>> val_labels;
};

MseDataset build_mse_dataset(const std::vector<const Sweep*>& train_sweeps,
                             const std::vector<const Sweep*>& val_sweeps,
                             int window) {
  MseDataset ds;
  ds.train_samples = gather_samples(train_sweeps, window);
  if (ds.train_samples.empty()) {
    throw std::invalid_argument("training: no samples");
  }
  ds.val_samples = gather_samples(val_sweeps, window);
  ds.stats = standardize_stats(ds.train_samples);
  ds.train_labels.reserve(ds.train_samples.size());
  for (const auto& s : ds.train_samples) {
    ds.train_labels.push_back(standardized_label(ds.stats, s.label));
  }
  ds.val_labels.reserve(ds.val_samples.size());
  for (const auto& s : ds.val_samples) {
    ds.val_labels.push_back(standardized_label(ds.stats, s.label));
  }
  return ds;
}

double validation_loss(const Params& params, const MseDataset& ds,
                       int threads) {
  if (ds.val_samples.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<const float*> xs;
  xs.reserve(ds.val_samples.size());
  for (const auto& s : ds.val_samples) xs.push_back(s.frames);
  const auto preds = regress_windows(params, params, xs, threads);
  return mse_value(preds, ds.val_labels);
}

}  // namespace

TrainResult train_source_resume(const std::vector<const Sweep*>& train_sweeps,
                                const std::vector<const Sweep*>& val_sweeps,
                                NetworkConfig net_config,
                                const TrainConfig& config,
                                std::optional<TrainState> state,
                                const EpochCallback& on_epoch) {
  config.validate();
  net_config.n_frames = config.window;
  MseDataset ds = build_mse_dataset(train_sweeps, val_sweeps, config.window);

  Params params;
  if (state.has_value()) {
    params = state->current;
  } else {
    net_config.init_seed = hash_mix(config.seed, kInitStream);
    params = init_network(net_config);
    params.stats = ds.stats;
  }
  const NetSpec spec = make_net_spec(params.config);

  Adam adam(spec.total, config.learning_rate, config.beta1, config.beta2,
            config.adam_eps);
  int start_epoch = 0;
  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  result.best_epoch = 0;
  if (state.has_value()) {
    adam.m = state->adam_m;
    adam.v = state->adam_v;
    adam.t = state->adam_t;
    start_epoch = state->completed_epochs;
    result.best = state->best;
    result.best_val_loss = state->best_val_loss;
    result.best_epoch = state->best_epoch;
  }

  result.log.seed = config.seed;
  result.log.config = {{"train", config}, {"network", net_config}};

  const size_t n = ds.train_samples.size();
  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches =
        batch_iter(n, config.batch, hash_mix(config.seed, epoch + 1));
    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      std::vector<const float*> xs;
      std::vector<std::array<float, 6>> labels;
      xs.reserve(batch.size());
      labels.reserve(batch.size());
      for (uint32_t idx : batch) {
        xs.push_back(ds.train_samples[idx].frames);
        labels.push_back(ds.train_labels[idx]);
      }
      BatchGrad bg = mse_loss_grad(params, xs, labels, config.threads);
      adam.step(params.values, bg.grad, 0, spec.total);
      loss_sum += bg.loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.val_loss = validation_loss(params, ds, config.threads);
    rec.wall_s = seconds_since(t0);
    result.log.epochs.push_back(rec);

    if (!ds.val_samples.empty() && rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = rec.epoch;
      result.best = params;
    }
    if (on_epoch) on_epoch(rec.epoch, params, rec);
  }

  result.final = params;
  if (ds.val_samples.empty()) {
    result.best = result.final;
    result.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    result.best_epoch = config.epochs;
  }
  return result;
}

TrainResult train_source(const std::vector<const Sweep*>& train_sweeps,
                         const std::vector<const Sweep*>& val_sweeps,
                         NetworkConfig net_config, const TrainConfig& config,
                         const EpochCallback& on_epoch) {
  return train_source_resume(train_sweeps, val_sweeps, net_config, config,
                             std::nullopt, on_epoch);
}

TrainResult train_source_auto_split(const std::vector<Sweep>& sweeps,
                                    const NetworkConfig& net_config,
                                    const TrainConfig& config,
                                    const EpochCallback& on_epoch) {
  std::vector<const Sweep*> train, val;
  split_sweeps(sweeps, config.validation_fraction, config.seed, train, val);
  return train_source(train, val, net_config, config, on_epoch);
}

AdaptResult adapt_target(const Params& source,
                         const std::vector<const Sweep*>& target_sweeps,
                         const std::vector<const Sweep*>& pool_sweeps,
                         const TrainConfig& config,
                         const std::vector<uint32_t>* frozen_pairing,
                         const EpochCallback& on_epoch) {
  config.validate();
  if (source.role != kRoleSourceFull) {
    throw std::invalid_argument(
        "adapt_target: source checkpoint must carry extractor+regressor");
  }
  std::vector<Sample> target_samples = gather_samples(target_sweeps, config.window);
  if (target_samples.empty()) {
    throw std::invalid_argument("adapt_target: no target samples");
  }
  std::vector<Sample> pool_samples = gather_samples(pool_sweeps, config.window);
  if (pool_samples.empty()) {
    throw std::invalid_argument("adapt_target: empty source pool");
  }
  // Pairing and destandardization both live in the source label space.
  const SamplePool pool = SamplePool::build(std::move(pool_samples), source.stats);
  if (frozen_pairing != nullptr &&
      frozen_pairing->size() != target_samples.size()) {
    throw std::invalid_argument("adapt_target: frozen pairing size mismatch");
  }

  AdaptResult result;
  result.adapted = source;
  result.adapted.role = kRoleAdapted;
  const NetSpec spec = make_net_spec(result.adapted.config);

  Adam adam(spec.total, config.learning_rate, config.beta1, config.beta2,
            config.adam_eps);
  result.log.seed = config.seed;
  result.log.config = {{"train", config}, {"network", result.adapted.config}};

  const size_t n = target_samples.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches =
        batch_iter(n, config.batch, hash_mix(config.seed, epoch + 1));
    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      std::vector<std::pair<const float*, const float*>> pairs;
      pairs.reserve(batch.size());
      for (uint32_t idx : batch) {
        const size_t pool_idx =
            frozen_pairing != nullptr
                ? (*frozen_pairing)[idx]
                : nearest_source_sample(pool, target_samples[idx].label,
                                        source.stats);
        pairs.emplace_back(target_samples[idx].frames,
                           pool.samples[pool_idx].frames);
      }
      BatchGrad bg =
          discrepancy_loss_grad(result.adapted, source, pairs, config.threads);
      // Only the extractor adapts; the regressor stays the source one.
      adam.step(result.adapted.values, bg.grad, 0, spec.extractor_size);
      result.batch_losses.push_back(bg.loss);
      loss_sum += bg.loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    rec.wall_s = seconds_since(t0);
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec.epoch, result.adapted, rec);
  }
  return result;
}

TrainResult train_baseline(BaselineMode mode,
                           const std::vector<Sweep>& source_sweeps,
                           const std::vector<Sweep>& target_sweeps,
                           const NetworkConfig& net_config,
                           const TrainConfig& config,
                           const EpochCallback& on_epoch) {
  if (mode == BaselineMode::kTargetOnly) {
    if (target_sweeps.empty()) {
      throw std::invalid_argument("train_baseline: empty target set");
    }
    std::vector<const Sweep*> train, val;
    split_sweeps(target_sweeps, config.validation_fraction, config.seed, train,
                 val);
    return train_source(train, val, net_config, config, on_epoch);
  }
  if (source_sweeps.empty() || target_sweeps.empty()) {
    throw std::invalid_argument("train_baseline: mixed mode needs both sets");
  }
  // Stratified whole-sweep split per domain, then one merged run.
  std::vector<const Sweep*> train, val, t2, v2;
  split_sweeps(source_sweeps, config.validation_fraction, config.seed, train,
               val);
  split_sweeps(target_sweeps, config.validation_fraction,
               hash_mix(config.seed, 2), t2, v2);
  train.insert(train.end(), t2.begin(), t2.end());
  val.insert(val.end(), v2.begin(), v2.end());
  return train_source(train, val, net_config, config, on_epoch);
}

void save_train_state(const TrainState& state,
                      const std::filesystem::path& path) {
  nlohmann::json extra{{"train_state",
                        {{"completed_epochs", state.completed_epochs},
                         {"best_val_loss", state.best_val_loss},
                         {"best_epoch", state.best_epoch},
                         {"adam_t", state.adam_t}}}};
  std::map<std::string, std::vector<float>> extras{
      {"adam.m", state.adam_m},
      {"adam.v", state.adam_v},
      {"best.values", state.best.values}};
  save_checkpoint(state.current, path, extra, extras);
}

TrainState load_train_state(const std::filesystem::path& path) {
  CheckpointData data = load_checkpoint_full(path);
  TrainState state;
  state.current = data.params;
  const auto& ts = data.header.at("train_state");
  state.completed_epochs = ts.at("completed_epochs").get<int>();
  state.best_val_loss = ts.at("best_val_loss").get<double>();
  state.best_epoch = ts.at("best_epoch").get<int>();
  state.adam_t = ts.at("adam_t").get<int64_t>();
  state.adam_m = data.extras.at("adam.m");
  state.adam_v = data.extras.at("adam.v");
  state.best = data.params;
  state.best.values = data.extras.at("best.values");
  return state;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch", c.batch},
                     {"learning_rate", c.learning_rate},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_eps", c.adam_eps},
                     {"seed", c.seed},
                     {"window", c.window},
                     {"validation_fraction", c.validation_fraction},
                     {"checkpoint_every", c.checkpoint_every},
                     {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", 60);
  c.batch = j.value("batch", 24);
  c.learning_rate = j.value("learning_rate", 1e-3);
  c.beta1 = j.value("beta1", 0.9);
  c.beta2 = j.value("beta2", 0.999);
  c.adam_eps = j.value("adam_eps", 1e-8);
  c.seed = j.value("seed", uint64_t{0});
  c.window = j.value("window", 5);
  c.validation_fraction = j.value("validation_fraction", 0.2);
  c.checkpoint_every = j.value("checkpoint_every", 0);
  c.threads = j.value("threads", 1);
}

}  // namespace uvr

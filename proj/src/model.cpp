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

#include "uvr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "uvr/io.hpp"
#include "uvr/rng.hpp"

namespace uvr {

void NetworkConfig::validate() const {
  if (n_frames < 2) throw std::invalid_argument("config: n_frames < 2");
  if (channels.empty()) throw std::invalid_argument("config: no conv stages");
  for (int c : channels) {
    if (c < 1) throw std::invalid_argument("config: channel count < 1");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("config: kernel must be odd and positive");
  }
  if (feature_width < 6) {
    throw std::invalid_argument("config: feature_width < 6");
  }
  const int div = 1 << stages();
  if (height < div || width < div || height % div != 0 || width % div != 0) {
    throw std::invalid_argument(
        "config: height/width must be divisible by 2^stages");
  }
}

NetSpec make_net_spec(const NetworkConfig& config) {
  config.validate();
  NetSpec spec;
  spec.n_stages = config.stages();
  spec.kernel = config.kernel;
  spec.ch.push_back(config.n_frames);
  spec.hh.push_back(config.height);
  spec.ww.push_back(config.width);
  for (int s = 0; s < spec.n_stages; ++s) {
    spec.ch.push_back(config.channels[s]);
    spec.hh.push_back(spec.hh.back() / 2);
    spec.ww.push_back(spec.ww.back() / 2);
  }
  spec.feature_width = config.feature_width;

  size_t off = 0;
  auto add_seg = [&off](int w_count, int b_count) {
    SegSpec seg;
    seg.w_off = off;
    seg.w_size = static_cast<size_t>(w_count);
    off += seg.w_size;
    seg.b_off = off;
    seg.b_size = static_cast<size_t>(b_count);
    off += seg.b_size;
    return seg;
  };
  for (int s = 0; s < spec.n_stages; ++s) {
    spec.stage.push_back(add_seg(
        spec.ch[s + 1] * spec.ch[s] * config.kernel * config.kernel,
        spec.ch[s + 1]));
  }
  spec.proj = add_seg(spec.feature_width * spec.ch[spec.n_stages],
                      spec.feature_width);
  spec.extractor_size = off;
  spec.reg = add_seg(6 * spec.feature_width, 6);
  spec.total = off;
  return spec;
}

std::vector<std::pair<std::string, SegSpec>> named_segments(
    const NetSpec& spec) {
  std::vector<std::pair<std::string, SegSpec>> out;
  for (size_t s = 0; s < spec.stage.size(); ++s) {
    out.emplace_back("stage" + std::to_string(s), spec.stage[s]);
  }
  out.emplace_back("proj", spec.proj);
  out.emplace_back("regressor", spec.reg);
  return out;
}

Params init_network(const NetworkConfig& config) {
  const NetSpec spec = make_net_spec(config);
  Params params;
  params.config = config;
  params.role = kRoleSourceFull;
  params.values.assign(spec.total, 0.0f);

  Rng rng(config.init_seed);
  auto fill = [&](const SegSpec& seg, int fan_in) {
    const double std = std::sqrt(2.0 / fan_in);
    for (size_t i = 0; i < seg.w_size; ++i) {
      params.values[seg.w_off + i] = static_cast<float>(std * rng.normal());
    }
    // biases stay zero
  };
  for (int s = 0; s < spec.n_stages; ++s) {
    fill(spec.stage[s], spec.ch[s] * config.kernel * config.kernel);
  }
  fill(spec.proj, spec.ch[spec.n_stages]);
  fill(spec.reg, spec.feature_width);
  return params;
}

namespace {

void check_input_size(const NetSpec& spec, size_t n) {
  const size_t want =
      static_cast<size_t>(spec.ch[0]) * spec.hh[0] * spec.ww[0];
  if (n != want) {
    throw std::invalid_argument("input tensor size mismatch: got " +
                                std::to_string(n) + ", want " +
                                std::to_string(want));
  }
}

int clamp_threads(int threads, size_t work_items) {
  if (threads < 1) threads = 1;
  return static_cast<int>(
      std::min<size_t>(static_cast<size_t>(threads), std::max<size_t>(work_items, 1)));
}

}  // namespace

std::vector<float> extract_features(const Params& params,
                                    std::span<const float> x) {
  const NetSpec spec = make_net_spec(params.config);
  check_input_size(spec, x.size());
  Workspace<float> ws = make_workspace<float>(spec);
  net_forward(spec, params.values.data(), x.data(), ws);
  return ws.features;
}

DofVector regress_dof(const Params& params, std::span<const float> features) {
  const NetSpec spec = make_net_spec(params.config);
  if (features.size() != static_cast<size_t>(spec.feature_width)) {
    throw std::invalid_argument("feature vector length mismatch");
  }
  float pred[6];
  regressor_forward(spec, params.values.data(), features.data(), pred);
  DofVector d;
  for (int j = 0; j < 6; ++j) d[j] = pred[j];
  return d;
}

double mse_value(std::span<const std::array<float, 6>> pred,
                 std::span<const std::array<float, 6>> label) {
  if (pred.size() != label.size() || pred.empty()) {
    throw std::invalid_argument("mse_value: shape mismatch or empty batch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 6; ++j) {
      const double r =
          static_cast<double>(pred[i][j]) - static_cast<double>(label[i][j]);
      acc += r * r;
    }
  }
  return acc / (6.0 * static_cast<double>(pred.size()));
}

double discrepancy_value(
    std::span<const std::pair<std::vector<float>, std::vector<float>>> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("discrepancy_value: empty pair list");
  }
  std::vector<double> norms;
  norms.reserve(pairs.size());
  for (const auto& [vs, vt] : pairs) {
    if (vs.size() != vt.size()) {
      throw std::invalid_argument("discrepancy_value: width mismatch");
    }
    double ss = 0.0;
    for (size_t j = 0; j < vs.size(); ++j) {
      const double d = static_cast<double>(vs[j]) - static_cast<double>(vt[j]);
      ss += d * d;
    }
    norms.push_back(std::sqrt(ss));
  }
  std::sort(norms.begin(), norms.end());
  double acc = 0.0;
  for (double n : norms) acc += n;
  return acc / static_cast<double>(norms.size());
}

BatchGrad mse_loss_grad(const Params& params,
                        const std::vector<const float*>& xs,
                        const std::vector<std::array<float, 6>>& labels_std,
                        int threads) {
  if (xs.empty() || xs.size() != labels_std.size()) {
    throw std::invalid_argument("mse_loss_grad: shape mismatch or empty batch");
  }
  const NetSpec spec = make_net_spec(params.config);
  const int batch = static_cast<int>(xs.size());
  threads = clamp_threads(threads, xs.size());

  std::vector<std::vector<float>> item_grads(
      batch, std::vector<float>(spec.total, 0.0f));
  std::vector<double> item_losses(batch, 0.0);

#pragma omp parallel num_threads(threads) if (threads > 1)
  {
    Workspace<float> ws = make_workspace<float>(spec);
#pragma omp for schedule(static)
    for (int i = 0; i < batch; ++i) {
      item_losses[i] =
          mse_item_grad(spec, params.values.data(), xs[i],
                        labels_std[i].data(), batch, ws, item_grads[i].data());
    }
  }

  BatchGrad out;
  out.grad.assign(spec.total, 0.0f);
  for (int i = 0; i < batch; ++i) {  // fixed merge order
    const auto& g = item_grads[i];
    for (size_t k = 0; k < g.size(); ++k) out.grad[k] += g[k];
    out.loss += item_losses[i];
  }
  out.loss /= batch;
  return out;
}

BatchGrad discrepancy_loss_grad(
    const Params& target, const Params& source,
    const std::vector<std::pair<const float*, const float*>>& pairs_t_s,
    int threads) {
  if (pairs_t_s.empty()) {
    throw std::invalid_argument("discrepancy_loss_grad: empty pair list");
  }
  if (source.config.feature_width != target.config.feature_width) {
    throw std::invalid_argument("discrepancy_loss_grad: feature width mismatch");
  }
  const NetSpec spec_t = make_net_spec(target.config);
  const NetSpec spec_s = make_net_spec(source.config);
  const int count = static_cast<int>(pairs_t_s.size());
  threads = clamp_threads(threads, pairs_t_s.size());

  std::vector<std::vector<float>> pair_grads(
      count, std::vector<float>(spec_t.total, 0.0f));
  std::vector<double> pair_norms(count, 0.0);

#pragma omp parallel num_threads(threads) if (threads > 1)
  {
    Workspace<float> ws_t = make_workspace<float>(spec_t);
    Workspace<float> ws_s = make_workspace<float>(spec_s);
#pragma omp for schedule(static)
    for (int i = 0; i < count; ++i) {
      // v_s through the frozen source extractor, no gradient.
      net_forward(spec_s, source.values.data(), pairs_t_s[i].second, ws_s);
      pair_norms[i] = discrepancy_pair_grad(
          spec_t, target.values.data(), pairs_t_s[i].first,
          ws_s.features.data(), count, ws_t, pair_grads[i].data());
    }
  }

  BatchGrad out;
  out.grad.assign(spec_t.total, 0.0f);
  for (int i = 0; i < count; ++i) {
    const auto& g = pair_grads[i];
    for (size_t k = 0; k < g.size(); ++k) out.grad[k] += g[k];
    out.loss += pair_norms[i];
  }
  out.loss /= count;
  return out;
}

std::vector<std::array<float, 6>> regress_windows(
    const Params& extractor, const Params& regressor,
    const std::vector<const float*>& xs, int threads) {
  if (extractor.config.feature_width != regressor.config.feature_width) {
    throw std::invalid_argument("regress_windows: feature width mismatch");
  }
  const NetSpec spec_e = make_net_spec(extractor.config);
  const NetSpec spec_r = make_net_spec(regressor.config);
  const int count = static_cast<int>(xs.size());
  threads = clamp_threads(threads, xs.size());
  std::vector<std::array<float, 6>> preds(count);

#pragma omp parallel num_threads(threads) if (threads > 1)
  {
    Workspace<float> ws = make_workspace<float>(spec_e);
#pragma omp for schedule(static)
    for (int i = 0; i < count; ++i) {
      net_forward(spec_e, extractor.values.data(), xs[i], ws);
      regressor_forward(spec_r, regressor.values.data(), ws.features.data(),
                        preds[i].data());
    }
  }
  return preds;
}

std::vector<std::vector<float>> extract_features_batch(
    const Params& params, const std::vector<const float*>& xs, int threads) {
  const NetSpec spec = make_net_spec(params.config);
  const int count = static_cast<int>(xs.size());
  threads = clamp_threads(threads, xs.size());
  std::vector<std::vector<float>> feats(count);

#pragma omp parallel num_threads(threads) if (threads > 1)
  {
    Workspace<float> ws = make_workspace<float>(spec);
#pragma omp for schedule(static)
    for (int i = 0; i < count; ++i) {
      net_forward(spec, params.values.data(), xs[i], ws);
      feats[i] = ws.features;
    }
  }
  return feats;
}

// -- checkpoint container -----------------------------------------------------

namespace {

constexpr char kMagic[4] = {'U', 'V', 'R', 'C'};

}  // namespace

void save_checkpoint(const Params& params, const std::filesystem::path& path,
                     const nlohmann::json& extra_header,
                     const std::map<std::string, std::vector<float>>& extras) {
  const NetSpec spec = make_net_spec(params.config);
  if (params.values.size() != spec.total) {
    throw std::invalid_argument("save_checkpoint: parameter size mismatch");
  }
  nlohmann::json header = extra_header;
  header["format_version"] = 1;
  header["role"] = params.role;
  header["config"] = params.config;
  header["stats"] = params.stats;

  nlohmann::json segs = nlohmann::json::array();
  size_t payload_off = 0;
  for (const auto& [name, seg] : named_segments(spec)) {
    segs.push_back({{"name", name + ".weight"},
                    {"byte_offset", payload_off},
                    {"count", seg.w_size}});
    payload_off += seg.w_size * sizeof(float);
    segs.push_back({{"name", name + ".bias"},
                    {"byte_offset", payload_off},
                    {"count", seg.b_size}});
    payload_off += seg.b_size * sizeof(float);
  }
  for (const auto& [name, data] : extras) {
    segs.push_back({{"name", name},
                    {"byte_offset", payload_off},
                    {"count", data.size()}});
    payload_off += data.size() * sizeof(float);
  }
  header["segments"] = segs;

  const std::string header_str = header.dump();
  std::string blob;
  blob.reserve(12 + header_str.size() + payload_off);
  blob.append(kMagic, 4);
  const uint32_t version = 1;
  const uint32_t header_len = static_cast<uint32_t>(header_str.size());
  blob.append(reinterpret_cast<const char*>(&version), 4);
  blob.append(reinterpret_cast<const char*>(&header_len), 4);
  blob.append(header_str);
  blob.append(reinterpret_cast<const char*>(params.values.data()),
              params.values.size() * sizeof(float));
  for (const auto& [name, data] : extras) {
    blob.append(reinterpret_cast<const char*>(data.data()),
                data.size() * sizeof(float));
  }
  write_file_atomic(path, blob);
}

CheckpointData load_checkpoint_full(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  uint32_t version = 0, header_len = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 4);
  if (version != 1) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  }
  if (bytes.size() < 12 + static_cast<size_t>(header_len)) {
    throw std::runtime_error("truncated checkpoint header: " + path.string());
  }
  CheckpointData data;
  data.header = nlohmann::json::parse(
      reinterpret_cast<const char*>(bytes.data()) + 12,
      reinterpret_cast<const char*>(bytes.data()) + 12 + header_len);

  data.params.config = data.header.at("config").get<NetworkConfig>();
  data.params.stats = data.header.at("stats").get<DofStats>();
  data.params.role = data.header.at("role").get<std::string>();
  const NetSpec spec = make_net_spec(data.params.config);
  data.params.values.resize(spec.total);

  const std::byte* payload = bytes.data() + 12 + header_len;
  const size_t payload_size = bytes.size() - 12 - header_len;
  auto read_seg = [&](size_t byte_off, size_t count, float* dst) {
    if (byte_off + count * sizeof(float) > payload_size) {
      throw std::runtime_error("truncated checkpoint payload: " +
                               path.string());
    }
    std::memcpy(dst, payload + byte_off, count * sizeof(float));
  };

  const auto named = named_segments(spec);
  for (const auto& sj : data.header.at("segments")) {
    const std::string name = sj.at("name").get<std::string>();
    const size_t off = sj.at("byte_offset").get<size_t>();
    const size_t count = sj.at("count").get<size_t>();
    bool matched = false;
    for (const auto& [base, seg] : named) {
      if (name == base + ".weight") {
        if (count != seg.w_size) {
          throw std::runtime_error("segment size mismatch for " + name);
        }
        read_seg(off, count, data.params.values.data() + seg.w_off);
        matched = true;
      } else if (name == base + ".bias") {
        if (count != seg.b_size) {
          throw std::runtime_error("segment size mismatch for " + name);
        }
        read_seg(off, count, data.params.values.data() + seg.b_off);
        matched = true;
      }
    }
    if (!matched) {
      std::vector<float> extra(count);
      read_seg(off, count, extra.data());
      data.extras[name] = std::move(extra);
    }
  }
  return data;
}

Params load_checkpoint(const std::filesystem::path& path) {
  return load_checkpoint_full(path).params;
}

void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"n_frames", c.n_frames},
                     {"height", c.height},
                     {"width", c.width},
                     {"channels", c.channels},
                     {"kernel", c.kernel},
                     {"feature_width", c.feature_width},
                     {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
  c.n_frames = j.at("n_frames").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.kernel = j.value("kernel", 3);
  c.feature_width = j.at("feature_width").get<int>();
  c.init_seed = j.value("init_seed", uint64_t{0});
}

}  // namespace uvr

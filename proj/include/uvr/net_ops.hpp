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

// Network math, templated on the scalar type. Production runs single
// precision; the double instantiation backs gradient verification. Every
// reduction runs in a fixed order so results are reproducible bit for bit.

#ifndef UVR_NET_OPS_HPP_
#define UVR_NET_OPS_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

namespace uvr {

// Flat-parameter segment: weights then biases.
struct SegSpec {
  size_t w_off = 0, w_size = 0;
  size_t b_off = 0, b_size = 0;
};

// Dimensions and parameter offsets for the conv stack:
// [conv(k, stride 2, pad k/2) + relu] x stages, global average pool,
// linear projection to the feature width, linear regressor to 6.
struct NetSpec {
  int n_stages = 0;
  int kernel = 3;
  std::vector<int> ch;      // per level: ch[0] = input channels
  std::vector<int> hh, ww;  // per level spatial dims
  int feature_width = 0;
  std::vector<SegSpec> stage;
  SegSpec proj;
  SegSpec reg;
  size_t total = 0;
  size_t extractor_size = 0;  // prefix owned by the feature extractor

  int out_pixels(int s) const { return hh[s + 1] * ww[s + 1]; }
  int col_rows(int s) const { return ch[s] * kernel * kernel; }
};

template <typename T>
struct Workspace {
  std::vector<std::vector<T>> acts;  // acts[0] = input ... acts[S] post-relu
  std::vector<std::vector<T>> cols;  // cached patches per stage
  std::vector<std::vector<T>> dacts;
  std::vector<T> dcol;
  std::vector<T> gap, dgap, features, dfeatures, pred;
};

template <typename T>
Workspace<T> make_workspace(const NetSpec& spec) {
  Workspace<T> ws;
  const int levels = spec.n_stages + 1;
  ws.acts.resize(levels);
  ws.dacts.resize(levels);
  size_t max_col = 0;
  for (int l = 0; l < levels; ++l) {
    const size_t n =
        static_cast<size_t>(spec.ch[l]) * spec.hh[l] * spec.ww[l];
    ws.acts[l].resize(n);
    ws.dacts[l].resize(n);
  }
  ws.cols.resize(spec.n_stages);
  for (int s = 0; s < spec.n_stages; ++s) {
    const size_t n = static_cast<size_t>(spec.col_rows(s)) * spec.out_pixels(s);
    ws.cols[s].resize(n);
    max_col = std::max(max_col, n);
  }
  ws.dcol.resize(max_col);
  ws.gap.resize(spec.ch[spec.n_stages]);
  ws.dgap.resize(spec.ch[spec.n_stages]);
  ws.features.resize(spec.feature_width);
  ws.dfeatures.resize(spec.feature_width);
  ws.pred.resize(6);
  return ws;
}

// -- kernels ----------------------------------------------------------------

template <typename T>
void im2col_s2(const T* in, int c_in, int h_in, int w_in, int kernel, T* col) {
  const int pad = kernel / 2;
  const int h_out = h_in / 2, w_out = w_in / 2;
  const int opix = h_out * w_out;
  for (int ci = 0; ci < c_in; ++ci) {
    const T* plane = in + static_cast<size_t>(ci) * h_in * w_in;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        T* crow =
            col + (static_cast<size_t>(ci) * kernel * kernel + ky * kernel + kx) *
                      opix;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = 2 * oy + ky - pad;
          T* dst = crow + static_cast<size_t>(oy) * w_out;
          if (iy < 0 || iy >= h_in) {
            for (int ox = 0; ox < w_out; ++ox) dst[ox] = T(0);
            continue;
          }
          const T* src = plane + static_cast<size_t>(iy) * w_in;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = 2 * ox + kx - pad;
            dst[ox] = (ix >= 0 && ix < w_in) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// out[co][j] = b[co] + sum_k w[co][k] * col[k][j]; the k-sum runs in
// ascending k per output, matching the naive convolution order exactly.
template <typename T>
void conv_fwd(const T* col, const T* w, const T* b, int c_out, int k_dim,
              int opix, T* out) {
  for (int co = 0; co < c_out; ++co) {
    T* orow = out + static_cast<size_t>(co) * opix;
    const T bias = b[co];
    for (int j = 0; j < opix; ++j) orow[j] = bias;
    const T* wrow = w + static_cast<size_t>(co) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T wv = wrow[k];
      const T* crow = col + static_cast<size_t>(k) * opix;
      for (int j = 0; j < opix; ++j) orow[j] += wv * crow[j];
    }
  }
}

template <typename T>
void conv_bwd_params(const T* dout, const T* col, int c_out, int k_dim,
                     int opix, T* dw, T* db) {
  for (int co = 0; co < c_out; ++co) {
    const T* drow = dout + static_cast<size_t>(co) * opix;
    T acc_b = T(0);
    for (int j = 0; j < opix; ++j) acc_b += drow[j];
    db[co] += acc_b;
    T* dwrow = dw + static_cast<size_t>(co) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T* crow = col + static_cast<size_t>(k) * opix;
      T acc = T(0);
      for (int j = 0; j < opix; ++j) acc += drow[j] * crow[j];
      dwrow[k] += acc;
    }
  }
}

template <typename T>
void conv_bwd_input(const T* dout, const T* w, int c_out, int k_dim, int opix,
                    T* dcol) {
  for (size_t i = 0; i < static_cast<size_t>(k_dim) * opix; ++i) dcol[i] = T(0);
  for (int co = 0; co < c_out; ++co) {
    const T* drow = dout + static_cast<size_t>(co) * opix;
    const T* wrow = w + static_cast<size_t>(co) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T wv = wrow[k];
      T* crow = dcol + static_cast<size_t>(k) * opix;
      for (int j = 0; j < opix; ++j) crow[j] += wv * drow[j];
    }
  }
}

template <typename T>
void col2im_s2(const T* dcol, int c_in, int h_in, int w_in, int kernel,
               T* din) {
  const int pad = kernel / 2;
  const int h_out = h_in / 2, w_out = w_in / 2;
  const int opix = h_out * w_out;
  for (size_t i = 0; i < static_cast<size_t>(c_in) * h_in * w_in; ++i) {
    din[i] = T(0);
  }
  for (int ci = 0; ci < c_in; ++ci) {
    T* plane = din + static_cast<size_t>(ci) * h_in * w_in;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const T* crow =
            dcol +
            (static_cast<size_t>(ci) * kernel * kernel + ky * kernel + kx) *
                opix;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = 2 * oy + ky - pad;
          if (iy < 0 || iy >= h_in) continue;
          T* dst = plane + static_cast<size_t>(iy) * w_in;
          const T* src = crow + static_cast<size_t>(oy) * w_out;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = 2 * ox + kx - pad;
            if (ix >= 0 && ix < w_in) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void relu_inplace(T* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (x[i] < T(0)) x[i] = T(0);
  }
}

// Mask from the post-activation values: y == 0 kills the gradient.
template <typename T>
void relu_bwd_inplace(const T* y, T* dy, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (y[i] <= T(0)) dy[i] = T(0);
  }
}

template <typename T>
void gap_fwd(const T* in, int c, int hw, T* out) {
  const T inv = T(1) / static_cast<T>(hw);
  for (int ci = 0; ci < c; ++ci) {
    const T* row = in + static_cast<size_t>(ci) * hw;
    T acc = T(0);
    for (int j = 0; j < hw; ++j) acc += row[j];
    out[ci] = acc * inv;
  }
}

template <typename T>
void gap_bwd(const T* dout, int c, int hw, T* din) {
  const T inv = T(1) / static_cast<T>(hw);
  for (int ci = 0; ci < c; ++ci) {
    const T g = dout[ci] * inv;
    T* row = din + static_cast<size_t>(ci) * hw;
    for (int j = 0; j < hw; ++j) row[j] = g;
  }
}

// w is row-major out_dim x in_dim.
template <typename T>
void linear_fwd(const T* x, const T* w, const T* b, int in_dim, int out_dim,
                T* y) {
  for (int o = 0; o < out_dim; ++o) {
    const T* wrow = w + static_cast<size_t>(o) * in_dim;
    T acc = b[o];
    for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
}

template <typename T>
void linear_bwd(const T* x, const T* w, const T* dy, int in_dim, int out_dim,
                T* dw, T* db, T* dx) {
  if (dx != nullptr) {
    for (int i = 0; i < in_dim; ++i) dx[i] = T(0);
  }
  for (int o = 0; o < out_dim; ++o) {
    const T g = dy[o];
    db[o] += g;
    T* dwrow = dw + static_cast<size_t>(o) * in_dim;
    const T* wrow = w + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      dwrow[i] += g * x[i];
      if (dx != nullptr) dx[i] += wrow[i] * g;
    }
  }
}

// -- full network -----------------------------------------------------------

// Runs the extractor: conv stages, global average pool, projection.
// Leaves activations and patch caches in the workspace for backward.
template <typename T>
void net_forward(const NetSpec& spec, const T* params, const float* x,
                 Workspace<T>& ws) {
  const size_t n0 = ws.acts[0].size();
  for (size_t i = 0; i < n0; ++i) ws.acts[0][i] = static_cast<T>(x[i]);
  for (int s = 0; s < spec.n_stages; ++s) {
    im2col_s2(ws.acts[s].data(), spec.ch[s], spec.hh[s], spec.ww[s],
              spec.kernel, ws.cols[s].data());
    conv_fwd(ws.cols[s].data(), params + spec.stage[s].w_off,
             params + spec.stage[s].b_off, spec.ch[s + 1], spec.col_rows(s),
             spec.out_pixels(s), ws.acts[s + 1].data());
    relu_inplace(ws.acts[s + 1].data(), ws.acts[s + 1].size());
  }
  const int last = spec.n_stages;
  gap_fwd(ws.acts[last].data(), spec.ch[last], spec.hh[last] * spec.ww[last],
          ws.gap.data());
  linear_fwd(ws.gap.data(), params + spec.proj.w_off, params + spec.proj.b_off,
             spec.ch[last], spec.feature_width, ws.features.data());
}

template <typename T>
void regressor_forward(const NetSpec& spec, const T* params, const T* features,
                       T* pred6) {
  linear_fwd(features, params + spec.reg.w_off, params + spec.reg.b_off,
             spec.feature_width, 6, pred6);
}

// Backpropagates a feature-space gradient into the extractor parameter
// segments of `grad` (accumulating). Regressor segments are not touched.
template <typename T>
void net_backward_from_features(const NetSpec& spec, const T* params,
                                Workspace<T>& ws, const T* dfeatures,
                                T* grad) {
  const int last = spec.n_stages;
  linear_bwd(ws.gap.data(), params + spec.proj.w_off, dfeatures, spec.ch[last],
             spec.feature_width, grad + spec.proj.w_off,
             grad + spec.proj.b_off, ws.dgap.data());
  gap_bwd(ws.dgap.data(), spec.ch[last], spec.hh[last] * spec.ww[last],
          ws.dacts[last].data());
  for (int s = spec.n_stages - 1; s >= 0; --s) {
    relu_bwd_inplace(ws.acts[s + 1].data(), ws.dacts[s + 1].data(),
                     ws.acts[s + 1].size());
    conv_bwd_params(ws.dacts[s + 1].data(), ws.cols[s].data(), spec.ch[s + 1],
                    spec.col_rows(s), spec.out_pixels(s),
                    grad + spec.stage[s].w_off, grad + spec.stage[s].b_off);
    if (s > 0) {
      conv_bwd_input(ws.dacts[s + 1].data(), params + spec.stage[s].w_off,
                     spec.ch[s + 1], spec.col_rows(s), spec.out_pixels(s),
                     ws.dcol.data());
      col2im_s2(ws.dcol.data(), spec.ch[s], spec.hh[s], spec.ww[s], spec.kernel,
                ws.dacts[s].data());
    }
  }
}

// Forward + MSE backward for one batch item. `label6` is standardized.
// Returns the item loss (mean over the 6 components of squared residual);
// gradients are seeded for a batch of `batch_size` items so per-item grad
// buffers merge by plain addition.
template <typename T>
T mse_item_grad(const NetSpec& spec, const T* params, const float* x,
                const float* label6, int batch_size, Workspace<T>& ws,
                T* grad) {
  net_forward(spec, params, x, ws);
  regressor_forward(spec, params, ws.features.data(), ws.pred.data());
  T loss = T(0);
  T dpred[6];
  const T scale = T(2) / (T(6) * static_cast<T>(batch_size));
  for (int j = 0; j < 6; ++j) {
    const T r = ws.pred[j] - static_cast<T>(label6[j]);
    loss += r * r;
    dpred[j] = scale * r;
  }
  loss /= T(6);
  linear_bwd(ws.features.data(), params + spec.reg.w_off, dpred,
             spec.feature_width, 6, grad + spec.reg.w_off,
             grad + spec.reg.b_off, ws.dfeatures.data());
  net_backward_from_features(spec, params, ws, ws.dfeatures.data(), grad);
  return loss;
}

// Forward + discrepancy backward for one (target input, source feature)
// pair. Returns the pair's feature-distance ||v_s - v_t||; the gradient is
// seeded with the 1/pair_count loss weight. Only extractor segments of
// `grad` are written. The epsilon inside the square root keeps the gradient
// finite at zero distance (where it is defined as zero).
template <typename T>
T discrepancy_pair_grad(const NetSpec& spec, const T* params_t,
                        const float* x_t, const T* v_s, int pair_count,
                        Workspace<T>& ws, T* grad) {
  net_forward(spec, params_t, x_t, ws);
  double ss = 0.0;
  for (int j = 0; j < spec.feature_width; ++j) {
    const double d = static_cast<double>(v_s[j]) -
                     static_cast<double>(ws.features[j]);
    ss += d * d;
  }
  const double norm = std::sqrt(ss);
  const double denom = std::sqrt(ss + 1e-12);
  const double gscale = -1.0 / (static_cast<double>(pair_count) * denom);
  for (int j = 0; j < spec.feature_width; ++j) {
    const double d = static_cast<double>(v_s[j]) -
                     static_cast<double>(ws.features[j]);
    ws.dfeatures[j] = static_cast<T>(gscale * d);
  }
  net_backward_from_features(spec, params_t, ws, ws.dfeatures.data(), grad);
  return static_cast<T>(norm);
}

// Value-only paths (finite-difference probes and validation).

template <typename T>
T mse_item_loss(const NetSpec& spec, const T* params, const float* x,
                const float* label6, Workspace<T>& ws) {
  net_forward(spec, params, x, ws);
  regressor_forward(spec, params, ws.features.data(), ws.pred.data());
  T loss = T(0);
  for (int j = 0; j < 6; ++j) {
    const T r = ws.pred[j] - static_cast<T>(label6[j]);
    loss += r * r;
  }
  return loss / T(6);
}

template <typename T>
T discrepancy_pair_loss(const NetSpec& spec, const T* params_t,
                        const float* x_t, const T* v_s, Workspace<T>& ws) {
  net_forward(spec, params_t, x_t, ws);
  double ss = 0.0;
  for (int j = 0; j < spec.feature_width; ++j) {
    const double d = static_cast<double>(v_s[j]) -
                     static_cast<double>(ws.features[j]);
    ss += d * d;
  }
  return static_cast<T>(std::sqrt(ss));
}

// -- naive reference convolutions (kept for kernel parity tests) -------------

namespace reference {

template <typename T>
void conv2d_s2(const T* in, int c_in, int h_in, int w_in, int kernel,
               const T* w, const T* b, int c_out, T* out) {
  const int pad = kernel / 2;
  const int h_out = h_in / 2, w_out = w_in / 2;
  for (int co = 0; co < c_out; ++co) {
    for (int oy = 0; oy < h_out; ++oy) {
      for (int ox = 0; ox < w_out; ++ox) {
        T acc = b[co];
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = 2 * oy + ky - pad;
            if (iy < 0 || iy >= h_in) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = 2 * ox + kx - pad;
              if (ix < 0 || ix >= w_in) continue;
              acc += w[((static_cast<size_t>(co) * c_in + ci) * kernel + ky) *
                           kernel +
                       kx] *
                     in[(static_cast<size_t>(ci) * h_in + iy) * w_in + ix];
            }
          }
        }
        out[(static_cast<size_t>(co) * h_out + oy) * w_out + ox] = acc;
      }
    }
  }
}

}  // namespace reference

}  // namespace uvr

#endif  // UVR_NET_OPS_HPP_

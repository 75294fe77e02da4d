#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvrl/error.hpp"
#include "cvrl/nn_kernels.hpp"
#include "cvrl/rng.hpp"
#include "cvrl/tensor.hpp"

namespace cvrl {

struct ConvStageConfig {
  int out_channels = 16;
  int temporal_kernel = 3;
  int spatial_kernel = 3;
  int temporal_stride = 2;
  int spatial_stride = 2;
};

// Small differentiable 3D-conv encoder: conv stages (conv -> optional
// per-channel standardization -> ReLU), global average pool to the backbone
// representation, then an MLP projection head.
struct TinyEncoderConfig {
  std::vector<ConvStageConfig> stages;
  int hidden_layers = 3;
  int hidden_dim = 64;
  int output_dim = 128;
  bool standardize = true;

  static TinyEncoderConfig defaults() {
    TinyEncoderConfig c;
    c.stages = {{16, 3, 5, 2, 2}, {32, 3, 3, 2, 2}, {64, 3, 3, 2, 2}};
    return c;
  }
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  int fan_in = 1;
};

template <typename S>
class TinyEncoder {
 public:
  TinyEncoder(const TinyEncoderConfig& config, int in_t, int in_h, int in_w, int in_c = 3);

  std::size_t param_count() const { return param_count_; }
  const std::vector<TensorInfo>& param_layout() const { return layout_; }
  int representation_dim() const { return rep_dim_; }
  int projection_dim() const { return config_.output_dim; }
  std::size_t input_count() const { return input_count_; }
  const TinyEncoderConfig& config() const { return config_; }

  // fan-in-scaled uniform init, bound = sqrt(1 / fan_in); pure in seed
  void init_params(std::uint64_t seed, std::span<S> params) const;

  struct Workspace {
    DenseArray<S> input;
    std::vector<DenseArray<S>> conv_out;   // pre-normalization conv outputs
    std::vector<DenseArray<S>> norm_out;   // standardized (pre-relu), if enabled
    std::vector<DenseArray<S>> act;        // post-relu stage outputs
    std::vector<std::vector<S>> inv_std;   // per-stage per-channel 1/sigma
    DenseArray<S> representation;          // pooled backbone features
    std::vector<DenseArray<S>> mlp_act;    // post-relu hidden activations
    std::vector<DenseArray<S>> mlp_pre;    // pre-relu hidden activations
    DenseArray<S> projection;
    bool forward_done = false;
  };

  Workspace make_workspace() const;

  void forward(std::span<const S> params, std::span<const S> input, Workspace& ws) const;

  // Either gradient entry point may be empty: proj_grad has projection_dim
  // entries, rep_grad has representation_dim entries (injected directly at
  // the pooled features, used when a classifier sits on the backbone).
  // param_grad (accumulated into) may be empty to treat parameters as frozen;
  // input_grad likewise.
  void backward(std::span<const S> params, Workspace& ws, std::span<const S> proj_grad,
                std::span<const S> rep_grad, std::span<S> param_grad,
                std::span<S> input_grad = {}) const;

 private:
  TinyEncoderConfig config_;
  int in_t_, in_h_, in_w_, in_c_;
  std::size_t input_count_ = 0;
  std::vector<Conv3dGeom> geoms_;
  std::vector<TensorInfo> layout_;
  std::size_t param_count_ = 0;
  int rep_dim_ = 0;
  std::vector<int> mlp_dims_;  // rep -> hidden... -> output

  const TensorInfo& tensor(std::size_t i) const { return layout_[i]; }
};

// ---- R3D-50 stage-shape calculator -----------------------------------------

// One row of the published stage table. Shape arithmetic per stage is
// out = floor(in / stride) for each of (t, s); a result below 1 is a
// configuration error.
struct R3dStage {
  std::string name;
  int temporal_kernel = 1;
  int spatial_kernel = 1;
  int temporal_stride = 1;
  int spatial_stride = 1;
  int blocks = 0;               // bottleneck repeats; 0 for plain stages
  std::string block_desc;       // human-readable kernel column
};

struct R3D50Spec {
  std::vector<R3dStage> stages;
  static R3D50Spec table();
};

struct StageShape {
  std::string name;
  int t = 0;
  int s = 0;
};

std::vector<StageShape> shape_trace(const R3D50Spec& spec, int in_t, int in_s);
std::string format_shape_trace(const R3D50Spec& spec, int in_t, int in_s);

// ---- implementation ---------------------------------------------------------

template <typename S>
TinyEncoder<S>::TinyEncoder(const TinyEncoderConfig& config, int in_t, int in_h, int in_w, int in_c)
    : config_(config), in_t_(in_t), in_h_(in_h), in_w_(in_w), in_c_(in_c) {
  if (config_.stages.empty()) throw config_error("encoder needs at least one conv stage");
  if (config_.hidden_layers < 0) throw config_error("hidden_layers must be >= 0");
  if (config_.output_dim < 2) throw config_error("output_dim must be >= 2");
  if (in_t < 1 || in_h < 1 || in_w < 1 || in_c < 1)
    throw config_error("encoder input geometry must be positive");
  input_count_ = static_cast<std::size_t>(in_t) * in_h * in_w * in_c;

  int t = in_t, h = in_h, w = in_w, c = in_c;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    const ConvStageConfig& sc = config_.stages[i];
    if (sc.out_channels < 1 || sc.temporal_kernel < 1 || sc.spatial_kernel < 1 ||
        sc.temporal_stride < 1 || sc.spatial_stride < 1)
      throw config_error("conv stage " + std::to_string(i) + " has non-positive parameters");
    Conv3dGeom g = Conv3dGeom::make(t, h, w, c, sc.out_channels, sc.temporal_kernel,
                                    sc.spatial_kernel, sc.spatial_kernel, sc.temporal_stride,
                                    sc.spatial_stride, sc.spatial_stride);
    if (g.out_t < 1 || g.out_h < 1 || g.out_w < 1)
      throw config_error("conv stage " + std::to_string(i) + " collapses the activation to zero");
    geoms_.push_back(g);

    std::string base = "stage" + std::to_string(i);
    TensorInfo wt{base + ".weight",
                  {g.kt, g.kh, g.kw, g.in_c, g.out_c},
                  offset,
                  g.weight_count(),
                  g.kt * g.kh * g.kw * g.in_c};
    offset += wt.size;
    layout_.push_back(std::move(wt));
    TensorInfo bt{base + ".bias", {g.out_c}, offset, static_cast<std::size_t>(g.out_c),
                  g.kt * g.kh * g.kw * g.in_c};
    offset += bt.size;
    layout_.push_back(std::move(bt));

    t = g.out_t;
    h = g.out_h;
    w = g.out_w;
    c = g.out_c;
  }
  rep_dim_ = c;

  mlp_dims_.push_back(rep_dim_);
  for (int i = 0; i < config_.hidden_layers; ++i) mlp_dims_.push_back(config_.hidden_dim);
  mlp_dims_.push_back(config_.output_dim);
  for (std::size_t i = 0; i + 1 < mlp_dims_.size(); ++i) {
    int ni = mlp_dims_[i], no = mlp_dims_[i + 1];
    std::string base = i + 2 == mlp_dims_.size() ? std::string("head.out")
                                                 : "head.hidden" + std::to_string(i);
    TensorInfo wt{base + ".weight", {ni, no}, offset,
                  static_cast<std::size_t>(ni) * no, ni};
    offset += wt.size;
    layout_.push_back(std::move(wt));
    TensorInfo bt{base + ".bias", {no}, offset, static_cast<std::size_t>(no), ni};
    offset += bt.size;
    layout_.push_back(std::move(bt));
  }
  param_count_ = offset;
}

template <typename S>
void TinyEncoder<S>::init_params(std::uint64_t seed, std::span<S> params) const {
  if (params.size() != param_count_) throw bounds_error("init_params: buffer size mismatch");
  Rng rng(derive_seed(seed, 0x696e6974));  // "init"
  for (const TensorInfo& t : layout_) {
    double bound = std::sqrt(1.0 / t.fan_in);
    for (std::size_t i = 0; i < t.size; ++i)
      params[t.offset + i] = static_cast<S>(rng.uniform(-bound, bound));
  }
}

template <typename S>
typename TinyEncoder<S>::Workspace TinyEncoder<S>::make_workspace() const {
  Workspace ws;
  ws.input = DenseArray<S>::zeros({in_t_, in_h_, in_w_, in_c_});
  for (const Conv3dGeom& g : geoms_) {
    ws.conv_out.push_back(DenseArray<S>::zeros({g.out_t, g.out_h, g.out_w, g.out_c}));
    ws.norm_out.push_back(DenseArray<S>::zeros({g.out_t, g.out_h, g.out_w, g.out_c}));
    ws.act.push_back(DenseArray<S>::zeros({g.out_t, g.out_h, g.out_w, g.out_c}));
    ws.inv_std.emplace_back(g.out_c, S(0));
  }
  ws.representation = DenseArray<S>::zeros({rep_dim_});
  for (std::size_t i = 1; i + 1 < mlp_dims_.size(); ++i) {
    ws.mlp_pre.push_back(DenseArray<S>::zeros({mlp_dims_[i]}));
    ws.mlp_act.push_back(DenseArray<S>::zeros({mlp_dims_[i]}));
  }
  ws.projection = DenseArray<S>::zeros({config_.output_dim});
  return ws;
}

template <typename S>
void TinyEncoder<S>::forward(std::span<const S> params, std::span<const S> input,
                             Workspace& ws) const {
  if (params.size() != param_count_) throw bounds_error("forward: parameter buffer size mismatch");
  if (input.size() != input_count_)
    throw bounds_error("forward: input has " + std::to_string(input.size()) +
                       " values, encoder expects " + std::to_string(input_count_));

  std::copy(input.begin(), input.end(), ws.input.values.begin());
  const S* x = ws.input.values.data();
  for (std::size_t i = 0; i < geoms_.size(); ++i) {
    const Conv3dGeom& g = geoms_[i];
    const S* w = params.data() + layout_[2 * i].offset;
    const S* b = params.data() + layout_[2 * i + 1].offset;
    conv3d_forward(g, x, w, b, ws.conv_out[i].values.data());
    const S* pre = ws.conv_out[i].values.data();
    if (config_.standardize) {
      standardize_forward(pre, g.out_t, g.out_h, g.out_w, g.out_c, S(1e-5),
                          ws.norm_out[i].values.data(), ws.inv_std[i].data());
      pre = ws.norm_out[i].values.data();
    }
    std::copy(pre, pre + ws.act[i].values.size(), ws.act[i].values.begin());
    relu_forward(ws.act[i].values.data(), ws.act[i].values.size());
    x = ws.act[i].values.data();
  }

  const Conv3dGeom& last = geoms_.back();
  global_avg_pool_forward(x, last.out_t, last.out_h, last.out_w, last.out_c,
                          ws.representation.values.data());

  std::size_t mlp_base = 2 * geoms_.size();
  const S* h = ws.representation.values.data();
  for (std::size_t i = 0; i + 1 < mlp_dims_.size(); ++i) {
    const S* w = params.data() + layout_[mlp_base + 2 * i].offset;
    const S* b = params.data() + layout_[mlp_base + 2 * i + 1].offset;
    bool is_last = i + 2 == mlp_dims_.size();
    S* out = is_last ? ws.projection.values.data() : ws.mlp_pre[i].values.data();
    linear_forward(h, mlp_dims_[i], w, b, out, mlp_dims_[i + 1]);
    if (!is_last) {
      ws.mlp_act[i].values = ws.mlp_pre[i].values;
      relu_forward(ws.mlp_act[i].values.data(), ws.mlp_act[i].values.size());
      h = ws.mlp_act[i].values.data();
    }
  }
  ws.forward_done = true;
}

template <typename S>
void TinyEncoder<S>::backward(std::span<const S> params, Workspace& ws,
                              std::span<const S> proj_grad, std::span<const S> rep_grad,
                              std::span<S> param_grad, std::span<S> input_grad) const {
  if (!ws.forward_done) throw state_error("backward called before forward");
  if (!param_grad.empty() && param_grad.size() != param_count_)
    throw bounds_error("backward: parameter gradient buffer size mismatch");
  if (!proj_grad.empty() && proj_grad.size() != static_cast<std::size_t>(config_.output_dim))
    throw bounds_error("backward: projection gradient size mismatch");
  if (!rep_grad.empty() && rep_grad.size() != static_cast<std::size_t>(rep_dim_))
    throw bounds_error("backward: representation gradient size mismatch");

  ws.representation.zero_grad();
  S* d_rep = ws.representation.grad.data();
  if (!rep_grad.empty())
    for (int i = 0; i < rep_dim_; ++i) d_rep[i] = rep_grad[i];

  std::size_t mlp_base = 2 * geoms_.size();
  if (!proj_grad.empty()) {
    // head backward, deepest layer first
    std::vector<S> cur(proj_grad.begin(), proj_grad.end());
    for (std::size_t ii = mlp_dims_.size() - 1; ii >= 1; --ii) {
      std::size_t i = ii - 1;  // linear index
      const S* w = params.data() + layout_[mlp_base + 2 * i].offset;
      const S* in =
          i == 0 ? ws.representation.values.data() : ws.mlp_act[i - 1].values.data();
      S* dw = param_grad.empty() ? nullptr : param_grad.data() + layout_[mlp_base + 2 * i].offset;
      S* db =
          param_grad.empty() ? nullptr : param_grad.data() + layout_[mlp_base + 2 * i + 1].offset;
      std::vector<S> din(mlp_dims_[i], S(0));
      linear_backward(in, mlp_dims_[i], w, cur.data(), mlp_dims_[i + 1], din.data(), dw, db);
      if (i == 0) {
        for (int d = 0; d < rep_dim_; ++d) d_rep[d] += din[d];
      } else {
        // through the hidden relu
        cur.assign(mlp_dims_[i], S(0));
        relu_backward(ws.mlp_act[i - 1].values.data(), din.data(), cur.data(), din.size());
      }
    }
  }

  const Conv3dGeom& last = geoms_.back();
  ws.act.back().zero_grad();
  global_avg_pool_backward(d_rep, last.out_t, last.out_h, last.out_w, last.out_c,
                           ws.act.back().grad.data());

  for (std::size_t ii = geoms_.size(); ii >= 1; --ii) {
    std::size_t i = ii - 1;
    const Conv3dGeom& g = geoms_[i];
    std::size_t n = ws.act[i].values.size();

    // relu: act grad -> (norm|conv) grad
    DenseArray<S>& pre = config_.standardize ? ws.norm_out[i] : ws.conv_out[i];
    pre.ensure_grad();
    std::fill(pre.grad.begin(), pre.grad.end(), S(0));
    relu_backward(ws.act[i].values.data(), ws.act[i].grad.data(), pre.grad.data(), n);

    const S* dconv_out;
    if (config_.standardize) {
      ws.conv_out[i].ensure_grad();
      std::fill(ws.conv_out[i].grad.begin(), ws.conv_out[i].grad.end(), S(0));
      standardize_backward(ws.norm_out[i].values.data(), ws.inv_std[i].data(), g.out_t, g.out_h,
                           g.out_w, g.out_c, ws.norm_out[i].grad.data(),
                           ws.conv_out[i].grad.data());
      dconv_out = ws.conv_out[i].grad.data();
    } else {
      dconv_out = ws.conv_out[i].grad.data();
    }

    const S* stage_in = i == 0 ? ws.input.values.data() : ws.act[i - 1].values.data();
    S* din = nullptr;
    if (i > 0) {
      ws.act[i - 1].zero_grad();
      din = ws.act[i - 1].grad.data();
    } else if (!input_grad.empty()) {
      if (input_grad.size() != input_count_)
        throw bounds_error("backward: input gradient buffer size mismatch");
      din = input_grad.data();
    }
    const S* w = params.data() + layout_[2 * i].offset;
    S* dw = param_grad.empty() ? nullptr : param_grad.data() + layout_[2 * i].offset;
    S* db = param_grad.empty() ? nullptr : param_grad.data() + layout_[2 * i + 1].offset;
    conv3d_backward(g, stage_in, w, dconv_out, din, dw, db);
  }
}

}  // namespace cvrl

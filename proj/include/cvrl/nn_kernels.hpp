#pragma once

#include <cmath>
#include <cstddef>

namespace cvrl {

// Differentiable kernels on (t, h, w, c) channels-last buffers. Convolutions
// use symmetric zero padding of floor(k/2) per dimension, so
// out = floor((in + 2*(k/2) - k)/stride) + 1.

struct Conv3dGeom {
  int in_t = 0, in_h = 0, in_w = 0, in_c = 0;
  int out_t = 0, out_h = 0, out_w = 0, out_c = 0;
  int kt = 1, kh = 1, kw = 1;
  int st = 1, sh = 1, sw = 1;
  int pt = 0, ph = 0, pw = 0;

  static int out_dim(int in, int k, int s) { return (in + 2 * (k / 2) - k) / s + 1; }

  static Conv3dGeom make(int in_t, int in_h, int in_w, int in_c, int out_c, int kt, int kh, int kw,
                         int st, int sh, int sw) {
    Conv3dGeom g;
    g.in_t = in_t; g.in_h = in_h; g.in_w = in_w; g.in_c = in_c;
    g.out_c = out_c;
    g.kt = kt; g.kh = kh; g.kw = kw;
    g.st = st; g.sh = sh; g.sw = sw;
    g.pt = kt / 2; g.ph = kh / 2; g.pw = kw / 2;
    g.out_t = out_dim(in_t, kt, st);
    g.out_h = out_dim(in_h, kh, sh);
    g.out_w = out_dim(in_w, kw, sw);
    return g;
  }

  std::size_t in_count() const { return static_cast<std::size_t>(in_t) * in_h * in_w * in_c; }
  std::size_t out_count() const { return static_cast<std::size_t>(out_t) * out_h * out_w * out_c; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(kt) * kh * kw * in_c * out_c;
  }
};

template <typename S>
void conv3d_forward(const Conv3dGeom& g, const S* in, const S* weight, const S* bias, S* out) {
  const int C = g.in_c, OC = g.out_c;
  for (int ot = 0; ot < g.out_t; ++ot) {
    for (int oh = 0; oh < g.out_h; ++oh) {
      for (int ow = 0; ow < g.out_w; ++ow) {
        S* acc = out + ((static_cast<std::size_t>(ot) * g.out_h + oh) * g.out_w + ow) * OC;
        for (int oc = 0; oc < OC; ++oc) acc[oc] = bias ? bias[oc] : S(0);
        for (int kt = 0; kt < g.kt; ++kt) {
          int ti = ot * g.st + kt - g.pt;
          if (ti < 0 || ti >= g.in_t) continue;
          for (int kh = 0; kh < g.kh; ++kh) {
            int hi = oh * g.sh + kh - g.ph;
            if (hi < 0 || hi >= g.in_h) continue;
            for (int kw = 0; kw < g.kw; ++kw) {
              int wi = ow * g.sw + kw - g.pw;
              if (wi < 0 || wi >= g.in_w) continue;
              const S* inp = in + ((static_cast<std::size_t>(ti) * g.in_h + hi) * g.in_w + wi) * C;
              const S* wsl = weight + ((static_cast<std::size_t>(kt) * g.kh + kh) * g.kw + kw) * C * OC;
              for (int ic = 0; ic < C; ++ic) {
                S v = inp[ic];
                const S* wrow = wsl + static_cast<std::size_t>(ic) * OC;
                for (int oc = 0; oc < OC; ++oc) acc[oc] += v * wrow[oc];
              }
            }
          }
        }
      }
    }
  }
}

// Any of din / dweight / dbias may be null to skip that gradient. Buffers are
// accumulated into (callers zero them beforehand).
template <typename S>
void conv3d_backward(const Conv3dGeom& g, const S* in, const S* weight, const S* dout, S* din,
                     S* dweight, S* dbias) {
  const int C = g.in_c, OC = g.out_c;
  for (int ot = 0; ot < g.out_t; ++ot) {
    for (int oh = 0; oh < g.out_h; ++oh) {
      for (int ow = 0; ow < g.out_w; ++ow) {
        const S* go = dout + ((static_cast<std::size_t>(ot) * g.out_h + oh) * g.out_w + ow) * OC;
        if (dbias)
          for (int oc = 0; oc < OC; ++oc) dbias[oc] += go[oc];
        for (int kt = 0; kt < g.kt; ++kt) {
          int ti = ot * g.st + kt - g.pt;
          if (ti < 0 || ti >= g.in_t) continue;
          for (int kh = 0; kh < g.kh; ++kh) {
            int hi = oh * g.sh + kh - g.ph;
            if (hi < 0 || hi >= g.in_h) continue;
            for (int kw = 0; kw < g.kw; ++kw) {
              int wi = ow * g.sw + kw - g.pw;
              if (wi < 0 || wi >= g.in_w) continue;
              std::size_t in_off = ((static_cast<std::size_t>(ti) * g.in_h + hi) * g.in_w + wi) * C;
              std::size_t w_off = ((static_cast<std::size_t>(kt) * g.kh + kh) * g.kw + kw) * C * OC;
              if (dweight) {
                const S* inp = in + in_off;
                S* dw = dweight + w_off;
                for (int ic = 0; ic < C; ++ic) {
                  S v = inp[ic];
                  S* dwrow = dw + static_cast<std::size_t>(ic) * OC;
                  for (int oc = 0; oc < OC; ++oc) dwrow[oc] += v * go[oc];
                }
              }
              if (din) {
                const S* w = weight + w_off;
                S* gi = din + in_off;
                for (int ic = 0; ic < C; ++ic) {
                  const S* wrow = w + static_cast<std::size_t>(ic) * OC;
                  S acc = S(0);
                  for (int oc = 0; oc < OC; ++oc) acc += wrow[oc] * go[oc];
                  gi[ic] += acc;
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename S>
void relu_forward(S* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] < S(0)) x[i] = S(0);
}

// mask comes from the forward *output*: max(y,0) > 0 iff y > 0.
template <typename S>
void relu_backward(const S* out, const S* dout, S* din, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) din[i] = out[i] > S(0) ? dout[i] : S(0);
}

template <typename S>
void global_avg_pool_forward(const S* in, int t, int h, int w, int c, S* out) {
  std::size_t cells = static_cast<std::size_t>(t) * h * w;
  for (int ch = 0; ch < c; ++ch) out[ch] = S(0);
  for (std::size_t i = 0; i < cells; ++i) {
    const S* px = in + i * c;
    for (int ch = 0; ch < c; ++ch) out[ch] += px[ch];
  }
  S inv = S(1) / static_cast<S>(cells);
  for (int ch = 0; ch < c; ++ch) out[ch] *= inv;
}

template <typename S>
void global_avg_pool_backward(const S* dout, int t, int h, int w, int c, S* din) {
  std::size_t cells = static_cast<std::size_t>(t) * h * w;
  S inv = S(1) / static_cast<S>(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    S* px = din + i * c;
    for (int ch = 0; ch < c; ++ch) px[ch] += dout[ch] * inv;
  }
}

// weight layout (in, out)
template <typename S>
void linear_forward(const S* in, int n_in, const S* weight, const S* bias, S* out, int n_out) {
  for (int o = 0; o < n_out; ++o) out[o] = bias ? bias[o] : S(0);
  for (int i = 0; i < n_in; ++i) {
    S v = in[i];
    const S* wrow = weight + static_cast<std::size_t>(i) * n_out;
    for (int o = 0; o < n_out; ++o) out[o] += v * wrow[o];
  }
}

template <typename S>
void linear_backward(const S* in, int n_in, const S* weight, const S* dout, int n_out, S* din,
                     S* dweight, S* dbias) {
  if (dbias)
    for (int o = 0; o < n_out; ++o) dbias[o] += dout[o];
  for (int i = 0; i < n_in; ++i) {
    const S* wrow = weight + static_cast<std::size_t>(i) * n_out;
    if (dweight) {
      S v = in[i];
      S* dwrow = dweight + static_cast<std::size_t>(i) * n_out;
      for (int o = 0; o < n_out; ++o) dwrow[o] += v * dout[o];
    }
    if (din) {
      S acc = S(0);
      for (int o = 0; o < n_out; ++o) acc += wrow[o] * dout[o];
      din[i] += acc;
    }
  }
}

// Per-channel standardization over the (t, h, w) cells of one sample:
// y = (x - mean_c) / sqrt(var_c + eps). inv_std (size c) is produced by the
// forward pass and consumed by the backward pass.
template <typename S>
void standardize_forward(const S* in, int t, int h, int w, int c, S eps, S* out, S* inv_std) {
  std::size_t cells = static_cast<std::size_t>(t) * h * w;
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (std::size_t i = 0; i < cells; ++i) mean += in[i * c + ch];
    mean /= static_cast<double>(cells);
    double var = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      double d = in[i * c + ch] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cells);
    double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[ch] = static_cast<S>(is);
    for (std::size_t i = 0; i < cells; ++i)
      out[i * c + ch] = static_cast<S>((in[i * c + ch] - mean) * is);
  }
}

template <typename S>
void standardize_backward(const S* y, const S* inv_std, int t, int h, int w, int c, const S* dout,
                          S* din) {
  std::size_t cells = static_cast<std::size_t>(t) * h * w;
  for (int ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dyy = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      sum_dy += dout[i * c + ch];
      sum_dyy += static_cast<double>(dout[i * c + ch]) * y[i * c + ch];
    }
    double mean_dy = sum_dy / static_cast<double>(cells);
    double mean_dyy = sum_dyy / static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      double dy = dout[i * c + ch];
      din[i * c + ch] +=
          static_cast<S>(inv_std[ch] * (dy - mean_dy - y[i * c + ch] * mean_dyy));
    }
  }
}

}  // namespace cvrl

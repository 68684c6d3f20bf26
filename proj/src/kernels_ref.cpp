#include "bbsteal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace bbsteal {
namespace kref {

void conv2d_fwd(const float* in, int n, int ci, int h, int w,
                const float* weight, const float* bias, int co, int k,
                int stride, int pad, float* out) {
  const int oh = conv_out_dim(h, k, stride, pad);
  const int ow = conv_out_dim(w, k, stride, pad);
  for (int b = 0; b < n; ++b) {
    for (int o = 0; o < co; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float acc = bias ? bias[o] : 0.0f;
          for (int c = 0; c < ci; ++c) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                acc += weight[((static_cast<int64_t>(o) * ci + c) * k + ky) * k + kx] *
                       in[((static_cast<int64_t>(b) * ci + c) * h + iy) * w + ix];
              }
            }
          }
          out[((static_cast<int64_t>(b) * co + o) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

void conv2d_bwd_input(const float* dout, int n, int co, int oh, int ow,
                      const float* weight, int ci, int k, int stride, int pad,
                      int h, int w, float* din) {
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < ci; ++c) {
      for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
          float acc = 0.0f;
          for (int o = 0; o < co; ++o) {
            for (int ky = 0; ky < k; ++ky) {
              const int ty = iy + pad - ky;
              if (ty < 0 || ty % stride != 0) continue;
              const int oy = ty / stride;
              if (oy >= oh) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int tx = ix + pad - kx;
                if (tx < 0 || tx % stride != 0) continue;
                const int ox = tx / stride;
                if (ox >= ow) continue;
                acc += dout[((static_cast<int64_t>(b) * co + o) * oh + oy) * ow + ox] *
                       weight[((static_cast<int64_t>(o) * ci + c) * k + ky) * k + kx];
              }
            }
          }
          din[((static_cast<int64_t>(b) * ci + c) * h + iy) * w + ix] = acc;
        }
      }
    }
  }
}

void conv2d_bwd_weights(const float* dout, int n, int co, int oh, int ow,
                        const float* in, int ci, int h, int w, int k,
                        int stride, int pad, float* dweight, float* dbias) {
  for (int o = 0; o < co; ++o) {
    for (int c = 0; c < ci; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          float acc = 0.0f;
          for (int b = 0; b < n; ++b) {
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                acc += dout[((static_cast<int64_t>(b) * co + o) * oh + oy) * ow + ox] *
                       in[((static_cast<int64_t>(b) * ci + c) * h + iy) * w + ix];
              }
            }
          }
          dweight[((static_cast<int64_t>(o) * ci + c) * k + ky) * k + kx] = acc;
        }
      }
    }
    if (dbias) {
      float acc = 0.0f;
      for (int b = 0; b < n; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            acc += dout[((static_cast<int64_t>(b) * co + o) * oh + oy) * ow + ox];
          }
        }
      }
      dbias[o] = acc;
    }
  }
}

void relu_fwd(const float* in, float* out, int64_t len) {
  for (int64_t i = 0; i < len; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_bwd(const float* dout, const float* out, float* din, int64_t len) {
  for (int64_t i = 0; i < len; ++i) din[i] = out[i] > 0.0f ? dout[i] : 0.0f;
}

void maxpool2_fwd(const float* in, int n, int c, int h, int w, float* out, int32_t* idx) {
  const int oh = h / 2, ow = w / 2;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const float* plane = in + (static_cast<int64_t>(b) * c + ch) * h * w;
      float* oplane = out + (static_cast<int64_t>(b) * c + ch) * oh * ow;
      int32_t* iplane = idx + (static_cast<int64_t>(b) * c + ch) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int best = (oy * 2) * w + ox * 2;  // ties keep first in scan order
          float bv = plane[best];
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int pos = (oy * 2 + dy) * w + (ox * 2 + dx);
              if (plane[pos] > bv) {
                bv = plane[pos];
                best = pos;
              }
            }
          }
          oplane[oy * ow + ox] = bv;
          iplane[oy * ow + ox] = best;
        }
      }
    }
  }
}

void maxpool2_bwd(const float* dout, int n, int c, int h, int w, const int32_t* idx, float* din) {
  const int oh = h / 2, ow = w / 2;
  std::memset(din, 0, sizeof(float) * static_cast<int64_t>(n) * c * h * w);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const float* oplane = dout + (static_cast<int64_t>(b) * c + ch) * oh * ow;
      const int32_t* iplane = idx + (static_cast<int64_t>(b) * c + ch) * oh * ow;
      float* plane = din + (static_cast<int64_t>(b) * c + ch) * h * w;
      for (int i = 0; i < oh * ow; ++i) plane[iplane[i]] += oplane[i];
    }
  }
}

void gap_fwd(const float* in, int n, int c, int h, int w, float* out) {
  const float inv = 1.0f / static_cast<float>(h * w);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const float* plane = in + (static_cast<int64_t>(b) * c + ch) * h * w;
      float acc = 0.0f;
      for (int i = 0; i < h * w; ++i) acc += plane[i];
      out[static_cast<int64_t>(b) * c + ch] = acc * inv;
    }
  }
}

void gap_bwd(const float* dout, int n, int c, int h, int w, float* din) {
  const float inv = 1.0f / static_cast<float>(h * w);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const float g = dout[static_cast<int64_t>(b) * c + ch] * inv;
      float* plane = din + (static_cast<int64_t>(b) * c + ch) * h * w;
      for (int i = 0; i < h * w; ++i) plane[i] = g;
    }
  }
}

void dense_fwd(const float* in, int n, int dim_in, const float* weight,
               const float* bias, int dim_out, float* out) {
  for (int b = 0; b < n; ++b) {
    for (int o = 0; o < dim_out; ++o) {
      float acc = bias ? bias[o] : 0.0f;
      const float* wrow = weight + static_cast<int64_t>(o) * dim_in;
      const float* x = in + static_cast<int64_t>(b) * dim_in;
      for (int i = 0; i < dim_in; ++i) acc += wrow[i] * x[i];
      out[static_cast<int64_t>(b) * dim_out + o] = acc;
    }
  }
}

void dense_bwd_input(const float* dout, int n, int dim_out, const float* weight,
                     int dim_in, float* din) {
  for (int b = 0; b < n; ++b) {
    for (int i = 0; i < dim_in; ++i) {
      float acc = 0.0f;
      for (int o = 0; o < dim_out; ++o) {
        acc += dout[static_cast<int64_t>(b) * dim_out + o] * weight[static_cast<int64_t>(o) * dim_in + i];
      }
      din[static_cast<int64_t>(b) * dim_in + i] = acc;
    }
  }
}

void dense_bwd_weights(const float* dout, int n, int dim_out, const float* in,
                       int dim_in, float* dweight, float* dbias) {
  for (int o = 0; o < dim_out; ++o) {
    for (int i = 0; i < dim_in; ++i) {
      float acc = 0.0f;
      for (int b = 0; b < n; ++b) {
        acc += dout[static_cast<int64_t>(b) * dim_out + o] * in[static_cast<int64_t>(b) * dim_in + i];
      }
      dweight[static_cast<int64_t>(o) * dim_in + i] = acc;
    }
    if (dbias) {
      float acc = 0.0f;
      for (int b = 0; b < n; ++b) acc += dout[static_cast<int64_t>(b) * dim_out + o];
      dbias[o] = acc;
    }
  }
}

void add_inplace(float* a, const float* b, int64_t len) {
  for (int64_t i = 0; i < len; ++i) a[i] += b[i];
}

void softmax_rows(const float* logits, int n, int c, float* probs) {
  for (int b = 0; b < n; ++b) {
    const float* z = logits + static_cast<int64_t>(b) * c;
    float* p = probs + static_cast<int64_t>(b) * c;
    float zmax = z[0];
    for (int i = 1; i < c; ++i) zmax = std::max(zmax, z[i]);
    float sum = 0.0f;
    for (int i = 0; i < c; ++i) {
      p[i] = std::exp(z[i] - zmax);
      sum += p[i];
    }
    const float inv = 1.0f / sum;
    for (int i = 0; i < c; ++i) p[i] *= inv;
  }
}

void bilinear_upsample(const float* in, int h, int w, float* out, int oh, int ow) {
  const float sy = static_cast<float>(h) / static_cast<float>(oh);
  const float sx = static_cast<float>(w) / static_cast<float>(ow);
  for (int y = 0; y < oh; ++y) {
    float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
    fy = std::min(std::max(fy, 0.0f), static_cast<float>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const float wy = fy - static_cast<float>(y0);
    for (int x = 0; x < ow; ++x) {
      float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
      fx = std::min(std::max(fx, 0.0f), static_cast<float>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const float wx = fx - static_cast<float>(x0);
      const float top = in[y0 * w + x0] * (1.0f - wx) + in[y0 * w + x1] * wx;
      const float bot = in[y1 * w + x0] * (1.0f - wx) + in[y1 * w + x1] * wx;
      out[y * ow + x] = top * (1.0f - wy) + bot * wy;
    }
  }
}

void sgd_update(float* param, const float* grad, float* velocity, int64_t len,
                float lr, float momentum, float weight_decay) {
  for (int64_t i = 0; i < len; ++i) {
    velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * param[i];
    param[i] -= lr * velocity[i];
  }
}

}  // namespace kref
}  // namespace bbsteal

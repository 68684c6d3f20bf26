#ifndef BBSTEAL_KERNELS_HPP
#define BBSTEAL_KERNELS_HPP

#include <cstdint>

namespace bbsteal {

// Dense NCHW kernels. kref:: holds the straightforward serial reference
// implementations; kpar:: holds the OpenMP versions used by the production
// path. Both accumulate into each output element in the same order, so
// results are bit-identical and the test suite asserts exact equality.
//
// Shapes follow out_h = (h + 2*pad - k) / stride + 1.

namespace kref {

void conv2d_fwd(const float* in, int n, int ci, int h, int w,
                const float* weight, const float* bias, int co, int k,
                int stride, int pad, float* out);

void conv2d_bwd_input(const float* dout, int n, int co, int oh, int ow,
                      const float* weight, int ci, int k, int stride, int pad,
                      int h, int w, float* din);

void conv2d_bwd_weights(const float* dout, int n, int co, int oh, int ow,
                        const float* in, int ci, int h, int w, int k,
                        int stride, int pad, float* dweight, float* dbias);

void relu_fwd(const float* in, float* out, int64_t len);
void relu_bwd(const float* dout, const float* out, float* din, int64_t len);

void maxpool2_fwd(const float* in, int n, int c, int h, int w, float* out, int32_t* idx);
void maxpool2_bwd(const float* dout, int n, int c, int h, int w, const int32_t* idx, float* din);

void gap_fwd(const float* in, int n, int c, int h, int w, float* out);
void gap_bwd(const float* dout, int n, int c, int h, int w, float* din);

void dense_fwd(const float* in, int n, int dim_in, const float* weight,
               const float* bias, int dim_out, float* out);
void dense_bwd_input(const float* dout, int n, int dim_out, const float* weight,
                     int dim_in, float* din);
void dense_bwd_weights(const float* dout, int n, int dim_out, const float* in,
                       int dim_in, float* dweight, float* dbias);

void add_inplace(float* a, const float* b, int64_t len);
void softmax_rows(const float* logits, int n, int c, float* probs);
void bilinear_upsample(const float* in, int h, int w, float* out, int oh, int ow);

void sgd_update(float* param, const float* grad, float* velocity, int64_t len,
                float lr, float momentum, float weight_decay);

}  // namespace kref

namespace kpar {

void conv2d_fwd(const float* in, int n, int ci, int h, int w,
                const float* weight, const float* bias, int co, int k,
                int stride, int pad, float* out);

void conv2d_bwd_input(const float* dout, int n, int co, int oh, int ow,
                      const float* weight, int ci, int k, int stride, int pad,
                      int h, int w, float* din);

void conv2d_bwd_weights(const float* dout, int n, int co, int oh, int ow,
                        const float* in, int ci, int h, int w, int k,
                        int stride, int pad, float* dweight, float* dbias);

void relu_fwd(const float* in, float* out, int64_t len);
void relu_bwd(const float* dout, const float* out, float* din, int64_t len);

void maxpool2_fwd(const float* in, int n, int c, int h, int w, float* out, int32_t* idx);
void maxpool2_bwd(const float* dout, int n, int c, int h, int w, const int32_t* idx, float* din);

void gap_fwd(const float* in, int n, int c, int h, int w, float* out);
void gap_bwd(const float* dout, int n, int c, int h, int w, float* din);

void dense_fwd(const float* in, int n, int dim_in, const float* weight,
               const float* bias, int dim_out, float* out);
void dense_bwd_input(const float* dout, int n, int dim_out, const float* weight,
                     int dim_in, float* din);
void dense_bwd_weights(const float* dout, int n, int dim_out, const float* in,
                       int dim_in, float* dweight, float* dbias);

void add_inplace(float* a, const float* b, int64_t len);
void softmax_rows(const float* logits, int n, int c, float* probs);
void bilinear_upsample(const float* in, int h, int w, float* out, int oh, int ow);

void sgd_update(float* param, const float* grad, float* velocity, int64_t len,
                float lr, float momentum, float weight_decay);

}  // namespace kpar

inline int conv_out_dim(int h, int k, int stride, int pad) {
  return (h + 2 * pad - k) / stride + 1;
}

}  // namespace bbsteal

#endif  // BBSTEAL_KERNELS_HPP

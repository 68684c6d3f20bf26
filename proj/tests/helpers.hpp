#ifndef BBSTEAL_TESTS_HELPERS_HPP
#define BBSTEAL_TESTS_HELPERS_HPP

#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/rng.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal::testing {

// 2-conv toy model: conv(3x3) -> relu -> conv(3x3) -> relu [attention] ->
// gap -> dense
inline Net make_toy2conv(Dims in, int classes, int c1 = 4, int c2 = 6) {
  Net net;
  net.in_dims = in;
  net.num_classes = classes;
  LayerSpec conv1;
  conv1.kind = LayerKind::conv;
  conv1.ci = in.c;
  conv1.co = c1;
  conv1.k = 3;
  conv1.stride = 1;
  conv1.pad = 1;
  LayerSpec relu;
  relu.kind = LayerKind::relu;
  LayerSpec conv2 = conv1;
  conv2.ci = c1;
  conv2.co = c2;
  LayerSpec gap;
  gap.kind = LayerKind::gap;
  LayerSpec fc;
  fc.kind = LayerKind::dense;
  fc.in_dim = c2;
  fc.out_dim = classes;
  net.layers = {conv1, relu, conv2, relu, gap, fc};
  net.attention_layer = 3;
  net.feature_layer = 4;
  net.finalize();
  return net;
}

inline ImageTensor random_image(int c, int h, int w, Rng& rng, const std::string& tag = "test") {
  Tensor3 t(c, h, w);
  for (auto& v : t.v) v = static_cast<float>(rng.uniform());
  return make_image(std::move(t), tag);
}

inline ProbVector random_prob(int n, Rng& rng) {
  ProbVector p;
  p.probs.resize(n);
  float sum = 0.0f;
  for (auto& v : p.probs) {
    v = static_cast<float>(rng.uniform()) + 1e-4f;
    sum += v;
  }
  for (auto& v : p.probs) v /= sum;
  return p;
}

// central differences of logit_c w.r.t. the attention activations, summed in
// double; independent of the analytic backward path. The networks here have a
// linear tail past the attention layer, so a large step keeps the difference
// exact while burying float rounding noise.
inline Tensor3 fd_attention_grad(const Classifier& model, const ImageTensor& x, int c,
                                 float step = 0.25f) {
  Tensor3 acts = model.attention_activations(x);
  Tensor3 grad(acts.c, acts.h, acts.w);
  for (size_t i = 0; i < acts.v.size(); ++i) {
    Tensor3 plus = acts, minus = acts;
    plus.v[i] += step;
    minus.v[i] -= step;
    const double zp = model.forward_from_attention(x, plus)[c];
    const double zm = model.forward_from_attention(x, minus)[c];
    grad.v[i] = static_cast<float>((zp - zm) / (2.0 * static_cast<double>(step)));
  }
  return grad;
}

}  // namespace bbsteal::testing

#endif  // BBSTEAL_TESTS_HELPERS_HPP

#ifndef BBSTEAL_NN_HPP
#define BBSTEAL_NN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bbsteal/rng.hpp"
#include "bbsteal/tensor.hpp"

namespace bbsteal {

// Small sequential-with-skips network representation driven by the kernels in
// kernels.hpp. skip_save copies the running activation aside; skip_add adds it
// back (through an optional 1x1 projection), which is enough for basic
// residual blocks.
enum class LayerKind { conv, relu, maxpool2, gap, dense, skip_save, skip_add };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int ci = 0, co = 0, k = 0, stride = 1, pad = 0;  // conv / skip_add projection
  int in_dim = 0, out_dim = 0;                     // dense
  bool has_proj = false;                           // skip_add
  int param_w = -1, param_b = -1;                  // indices into Net::params
  int save_idx = -1;                               // skip_add: paired skip_save layer
  float init_gain = 1.0f;
};

struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<float> v;

  int64_t size() const {
    int64_t s = 1;
    for (int d : shape) s *= d;
    return s;
  }
};

struct Dims {
  int c = 0, h = 0, w = 0;
  int64_t size() const { return static_cast<int64_t>(c) * h * w; }
};

struct Workspace {
  Batch input;
  std::vector<Batch> acts;                      // output of each layer
  std::vector<std::vector<int32_t>> pool_idx;   // per layer (empty unless maxpool)
};

using Grads = std::vector<std::vector<float>>;

class Net {
 public:
  std::vector<LayerSpec> layers;
  std::vector<Param> params;
  Dims in_dims;
  int num_classes = 0;
  int attention_layer = -1;  // layer whose output feeds Grad-CAM
  int feature_layer = -1;    // penultimate feature vector (GAP output)

  void finalize();  // computes output dims, pairs skips, allocates params
  void init_params(Rng& rng);

  const Dims& out_dims(int layer) const { return dims_[layer]; }
  Dims attention_dims() const { return dims_[attention_layer]; }
  int feature_dim() const { return dims_[feature_layer].c; }

  // Runs layers [from_layer, end). For from_layer > 0 the workspace must
  // already hold acts up to from_layer-1.
  void forward(const Batch& x, Workspace& ws, int from_layer = 0) const;
  void forward_from(Workspace& ws, int from_layer) const;

  // Backpropagates dlogits. Any of grads/dinput may be null. If stop_layer
  // >= 0, stops once the gradient w.r.t. acts[stop_layer] is complete and
  // writes it to dstop (param grads below that point are not computed).
  void backward(const Batch& dlogits, const Workspace& ws, Grads* grads,
                Batch* dinput, int stop_layer = -1, Batch* dstop = nullptr) const;

  Grads make_grads() const;

 private:
  std::vector<Dims> dims_;
};

// Architectures. Input dims are free; num_classes is the last-layer width.
Net make_smallcnn(Dims in, int num_classes);
Net make_resnet18(Dims in, int num_classes);
Net make_net(const std::string& arch, Dims in, int num_classes);
bool is_known_arch(const std::string& arch);

}  // namespace bbsteal

#endif  // BBSTEAL_NN_HPP

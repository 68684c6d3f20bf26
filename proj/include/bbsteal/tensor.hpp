#ifndef BBSTEAL_TENSOR_HPP
#define BBSTEAL_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace bbsteal {

// Dense CHW tensor, the unit every image-level operation works on.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_, float fill = 0.0f)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

  float& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
  float at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }
};

// Contiguous NCHW batch used by the kernels.
struct Batch {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> v;

  Batch() = default;
  Batch(int n_, int c_, int h_, int w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

  size_t sample_stride() const { return static_cast<size_t>(c) * h * w; }
  float* sample(int i) { return v.data() + sample_stride() * i; }
  const float* sample(int i) const { return v.data() + sample_stride() * i; }
};

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 1469598103934665603ULL);

// Content-addressed id: hash of shape + raw pixel bytes + provenance string,
// so erased variants never alias their parents.
std::string content_id(const Tensor3& t, const std::string& provenance);

struct ImageTensor {
  Tensor3 data;
  std::string id;
};

ImageTensor make_image(Tensor3 t, const std::string& provenance);

// Throws if any element falls outside [0,1].
void check_image_range(const Tensor3& t);

Batch pack_batch(const std::vector<const Tensor3*>& imgs);
Batch pack_batch(const std::vector<ImageTensor>& imgs);

}  // namespace bbsteal

#endif  // BBSTEAL_TENSOR_HPP

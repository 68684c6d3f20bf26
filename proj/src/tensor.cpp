#include "bbsteal/tensor.hpp"

#include <cstring>
#include <stdexcept>

namespace bbsteal {

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string content_id(const Tensor3& t, const std::string& provenance) {
  uint64_t h = fnv1a64(&t.c, sizeof(t.c));
  h = fnv1a64(&t.h, sizeof(t.h), h);
  h = fnv1a64(&t.w, sizeof(t.w), h);
  h = fnv1a64(t.v.data(), t.v.size() * sizeof(float), h);
  h = fnv1a64(provenance.data(), provenance.size(), h);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

ImageTensor make_image(Tensor3 t, const std::string& provenance) {
  ImageTensor img;
  img.id = content_id(t, provenance);
  img.data = std::move(t);
  return img;
}

void check_image_range(const Tensor3& t) {
  for (float x : t.v) {
    if (!(x >= 0.0f && x <= 1.0f)) {
      throw std::invalid_argument("image value outside [0,1]");
    }
  }
}

Batch pack_batch(const std::vector<const Tensor3*>& imgs) {
  if (imgs.empty()) throw std::invalid_argument("pack_batch: empty batch");
  const Tensor3& first = *imgs[0];
  Batch b(static_cast<int>(imgs.size()), first.c, first.h, first.w);
  for (size_t i = 0; i < imgs.size(); ++i) {
    if (!imgs[i]->same_shape(first)) throw std::invalid_argument("pack_batch: shape mismatch");
    std::memcpy(b.sample(static_cast<int>(i)), imgs[i]->v.data(), b.sample_stride() * sizeof(float));
  }
  return b;
}

Batch pack_batch(const std::vector<ImageTensor>& imgs) {
  std::vector<const Tensor3*> ptrs;
  ptrs.reserve(imgs.size());
  for (const auto& im : imgs) ptrs.push_back(&im.data);
  return pack_batch(ptrs);
}

}  // namespace bbsteal

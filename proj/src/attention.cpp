#include "bbsteal/attention.hpp"

#include <stdexcept>

#include "bbsteal/kernels.hpp"
#include "bbsteal/truncation.hpp"

namespace bbsteal {

AttentionMap compose_attention(const Tensor3& activations, const Tensor3& gradients,
                               int class_index, int image_h, int image_w) {
  if (!activations.same_shape(gradients)) {
    throw std::invalid_argument("compose_attention: shape mismatch");
  }
  const int k = activations.c, h = activations.h, w = activations.w;
  const float inv_z = 1.0f / static_cast<float>(h * w);

  AttentionMap map;
  map.class_index = class_index;
  map.h = h;
  map.w = w;
  map.values.assign(static_cast<size_t>(h) * w, 0.0f);

  for (int m = 0; m < k; ++m) {
    const float* grad = gradients.v.data() + static_cast<size_t>(m) * h * w;
    const float* act = activations.v.data() + static_cast<size_t>(m) * h * w;
    float alpha = 0.0f;
    for (int i = 0; i < h * w; ++i) alpha += grad[i];
    alpha *= inv_z;
    for (int i = 0; i < h * w; ++i) map.values[i] += alpha * act[i];
  }
  for (float& v : map.values) v = v > 0.0f ? v : 0.0f;

  map.image_h = image_h;
  map.image_w = image_w;
  map.upsampled.assign(static_cast<size_t>(image_h) * image_w, 0.0f);
  kpar::bilinear_upsample(map.values.data(), h, w, map.upsampled.data(), image_h, image_w);
  return map;
}

std::vector<AttentionMap> grad_cam_batch(const Classifier& model,
                                         const std::vector<const Tensor3*>& batch,
                                         std::vector<int> classes) {
  if (batch.empty() || batch.size() != classes.size()) {
    throw std::invalid_argument("grad_cam_batch: bad arguments");
  }
  // resolve "top-1" requests first
  bool need_predict = false;
  for (int c : classes) {
    if (c < 0) need_predict = true;
  }
  if (need_predict) {
    std::vector<ProbVector> probs = model.predict_tensors(batch);
    for (size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] < 0) classes[i] = argmax_lowest(probs[i].probs);
    }
  }
  std::vector<Tensor3> acts, grads;
  model.attention_batch(batch, classes, &acts, &grads);
  std::vector<AttentionMap> maps(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    maps[i] = compose_attention(acts[i], grads[i], classes[i], batch[i]->h, batch[i]->w);
  }
  return maps;
}

AttentionMap grad_cam(const Classifier& model, const ImageTensor& x, int class_index) {
  if (class_index < 0 || class_index >= model.num_classes()) {
    throw std::invalid_argument("grad_cam: class out of range");
  }
  return grad_cam_batch(model, {&x.data}, {class_index})[0];
}

AttentionMap substitute_attention(const Classifier& model, const ImageTensor& x) {
  return grad_cam_batch(model, {&x.data}, {-1})[0];
}

}  // namespace bbsteal

#ifndef BBSTEAL_ATTENTION_HPP
#define BBSTEAL_ATTENTION_HPP

#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

// Grad-CAM saliency for one class: non-negative map at feature resolution
// plus a bilinear upsample to image resolution.
struct AttentionMap {
  int class_index = -1;
  int h = 0, w = 0;            // feature-map resolution
  std::vector<float> values;   // h*w, ReLU applied
  int image_h = 0, image_w = 0;
  std::vector<float> upsampled;  // image_h * image_w
};

// Per-map weights are the spatial mean of d logit_c / dA^k; the map is
// ReLU(sum_k alpha_k A^k).
AttentionMap grad_cam(const Classifier& model, const ImageTensor& x, int class_index);

// Grad-CAM for the model's own top-1 class (lowest index on ties).
AttentionMap substitute_attention(const Classifier& model, const ImageTensor& x);

// Batched computation with one forward/backward per chunk. classes[i] < 0
// means "use the model's top-1 prediction for sample i".
std::vector<AttentionMap> grad_cam_batch(const Classifier& model,
                                         const std::vector<const Tensor3*>& batch,
                                         std::vector<int> classes);

// Builds the map from already-extracted activations and gradients; exposed so
// tests can drive it against an independent gradient oracle.
AttentionMap compose_attention(const Tensor3& activations, const Tensor3& gradients,
                               int class_index, int image_h, int image_w);

}  // namespace bbsteal

#endif  // BBSTEAL_ATTENTION_HPP

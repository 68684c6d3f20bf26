#ifndef BBSTEAL_CLASSIFIER_HPP
#define BBSTEAL_CLASSIFIER_HPP

#include <string>
#include <vector>

#include "bbsteal/nn.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

// Trainable image classifier: forward predictions, penultimate features and
// gradients of a chosen class logit w.r.t. the designated attention layer
// (the last convolutional block).
class Classifier {
 public:
  Classifier() = default;
  Classifier(std::string arch, Dims input, int num_classes, uint64_t init_seed);
  // wraps an already-built network (custom toy models in tests)
  Classifier(std::string arch_label, Net net, uint64_t init_seed);

  const std::string& arch() const { return arch_; }
  int num_classes() const { return net_.num_classes; }
  Dims input_dims() const { return net_.in_dims; }
  uint64_t init_seed() const { return init_seed_; }

  // Reinitializes all parameters from the given seed (fresh training start).
  void reinit(uint64_t seed);

  std::vector<ProbVector> predict(const std::vector<ImageTensor>& batch) const;
  ProbVector predict_one(const ImageTensor& x) const;
  std::vector<ProbVector> predict_tensors(const std::vector<const Tensor3*>& batch) const;

  std::vector<float> logits_one(const ImageTensor& x) const;

  // Penultimate (GAP) feature vectors.
  std::vector<std::vector<float>> features(const std::vector<ImageTensor>& batch) const;

  // Activations of the attention layer for one input: K maps of h x w.
  Tensor3 attention_activations(const ImageTensor& x) const;

  // d logit_c / dA for the attention activations A; same shape as the maps.
  Tensor3 class_score_gradients(const ImageTensor& x, int class_index) const;

  // Batched version: one forward + one partial backward for all samples.
  void attention_batch(const std::vector<const Tensor3*>& batch, const std::vector<int>& classes,
                       std::vector<Tensor3>* activations, std::vector<Tensor3>* gradients) const;

  // Logits of the tail network run from substituted attention activations.
  std::vector<float> forward_from_attention(const ImageTensor& x, const Tensor3& acts) const;

  Net& net() { return net_; }
  const Net& net() const { return net_; }

  static constexpr int kPredictChunk = 128;

 private:
  void check_input(const Tensor3& t) const;

  std::string arch_;
  uint64_t init_seed_ = 0;
  Net net_;
};

}  // namespace bbsteal

#endif  // BBSTEAL_CLASSIFIER_HPP

#include "bbsteal/classifier.hpp"

#include <cstring>
#include <stdexcept>

#include "bbsteal/kernels.hpp"

namespace bbsteal {

Classifier::Classifier(std::string arch, Dims input, int num_classes, uint64_t init_seed)
    : arch_(std::move(arch)), init_seed_(init_seed) {
  net_ = make_net(arch_, input, num_classes);
  Rng rng(init_seed_);
  net_.init_params(rng);
}

Classifier::Classifier(std::string arch_label, Net net, uint64_t init_seed)
    : arch_(std::move(arch_label)), init_seed_(init_seed), net_(std::move(net)) {
  Rng rng(init_seed_);
  net_.init_params(rng);
}

void Classifier::reinit(uint64_t seed) {
  init_seed_ = seed;
  Rng rng(seed);
  net_.init_params(rng);
}

void Classifier::check_input(const Tensor3& t) const {
  if (t.c != net_.in_dims.c || t.h != net_.in_dims.h || t.w != net_.in_dims.w) {
    throw std::invalid_argument("Classifier: input shape mismatch");
  }
}

std::vector<ProbVector> Classifier::predict_tensors(const std::vector<const Tensor3*>& batch) const {
  if (batch.empty()) throw std::invalid_argument("Classifier: empty batch");
  for (const Tensor3* t : batch) check_input(*t);
  std::vector<ProbVector> out(batch.size());
  Workspace ws;
  const int nc = num_classes();
  for (size_t start = 0; start < batch.size(); start += kPredictChunk) {
    const size_t end = std::min(batch.size(), start + kPredictChunk);
    std::vector<const Tensor3*> chunk(batch.begin() + start, batch.begin() + end);
    Batch b = pack_batch(chunk);
    net_.forward(b, ws);
    const Batch& logits = ws.acts.back();
    std::vector<float> probs(static_cast<size_t>(logits.n) * nc);
    kpar::softmax_rows(logits.v.data(), logits.n, nc, probs.data());
    for (size_t i = start; i < end; ++i) {
      out[i].probs.assign(probs.begin() + (i - start) * nc, probs.begin() + (i - start + 1) * nc);
    }
  }
  return out;
}

std::vector<ProbVector> Classifier::predict(const std::vector<ImageTensor>& batch) const {
  std::vector<const Tensor3*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& im : batch) ptrs.push_back(&im.data);
  return predict_tensors(ptrs);
}

ProbVector Classifier::predict_one(const ImageTensor& x) const {
  return predict({x})[0];
}

std::vector<float> Classifier::logits_one(const ImageTensor& x) const {
  check_input(x.data);
  Workspace ws;
  Batch b = pack_batch(std::vector<const Tensor3*>{&x.data});
  net_.forward(b, ws);
  return ws.acts.back().v;
}

std::vector<std::vector<float>> Classifier::features(const std::vector<ImageTensor>& batch) const {
  if (batch.empty()) return {};
  std::vector<std::vector<float>> out(batch.size());
  Workspace ws;
  const int fd = net_.feature_dim();
  for (size_t start = 0; start < batch.size(); start += kPredictChunk) {
    const size_t end = std::min(batch.size(), start + kPredictChunk);
    std::vector<const Tensor3*> chunk;
    chunk.reserve(end - start);
    for (size_t i = start; i < end; ++i) {
      check_input(batch[i].data);
      chunk.push_back(&batch[i].data);
    }
    Batch b = pack_batch(chunk);
    net_.forward(b, ws);
    const Batch& feats = ws.acts[net_.feature_layer];
    for (size_t i = start; i < end; ++i) {
      const float* row = feats.sample(static_cast<int>(i - start));
      out[i].assign(row, row + fd);
    }
  }
  return out;
}

Tensor3 Classifier::attention_activations(const ImageTensor& x) const {
  check_input(x.data);
  Workspace ws;
  Batch b = pack_batch(std::vector<const Tensor3*>{&x.data});
  net_.forward(b, ws);
  const Batch& act = ws.acts[net_.attention_layer];
  Tensor3 out(act.c, act.h, act.w);
  std::memcpy(out.v.data(), act.sample(0), sizeof(float) * out.size());
  return out;
}

Tensor3 Classifier::class_score_gradients(const ImageTensor& x, int class_index) const {
  std::vector<Tensor3> grads;
  attention_batch({&x.data}, {class_index}, nullptr, &grads);
  return std::move(grads[0]);
}

void Classifier::attention_batch(const std::vector<const Tensor3*>& batch,
                                 const std::vector<int>& classes,
                                 std::vector<Tensor3>* activations,
                                 std::vector<Tensor3>* gradients) const {
  if (batch.empty() || batch.size() != classes.size()) {
    throw std::invalid_argument("attention_batch: bad arguments");
  }
  const int nc = num_classes();
  for (int c : classes) {
    if (c < 0 || c >= nc) throw std::invalid_argument("attention_batch: class out of range");
  }
  if (activations) activations->resize(batch.size());
  if (gradients) gradients->resize(batch.size());
  Workspace ws;
  for (size_t start = 0; start < batch.size(); start += kPredictChunk) {
    const size_t end = std::min(batch.size(), start + kPredictChunk);
    std::vector<const Tensor3*> chunk(batch.begin() + start, batch.begin() + end);
    for (const Tensor3* t : chunk) check_input(*t);
    Batch b = pack_batch(chunk);
    net_.forward(b, ws);
    const Batch& act = ws.acts[net_.attention_layer];
    if (activations) {
      for (size_t i = start; i < end; ++i) {
        Tensor3 t(act.c, act.h, act.w);
        std::memcpy(t.v.data(), act.sample(static_cast<int>(i - start)), sizeof(float) * t.size());
        (*activations)[i] = std::move(t);
      }
    }
    if (gradients) {
      // d logit_{c_i} / dA for each sample: backward from one-hot logit grads
      Batch dlogits(b.n, nc, 1, 1);
      for (int i = 0; i < b.n; ++i) {
        dlogits.sample(i)[classes[start + i]] = 1.0f;
      }
      Batch datt;
      net_.backward(dlogits, ws, nullptr, nullptr, net_.attention_layer, &datt);
      for (size_t i = start; i < end; ++i) {
        Tensor3 t(datt.c, datt.h, datt.w);
        std::memcpy(t.v.data(), datt.sample(static_cast<int>(i - start)), sizeof(float) * t.size());
        (*gradients)[i] = std::move(t);
      }
    }
  }
}

std::vector<float> Classifier::forward_from_attention(const ImageTensor& x, const Tensor3& acts) const {
  check_input(x.data);
  const Dims ad = net_.attention_dims();
  if (acts.c != ad.c || acts.h != ad.h || acts.w != ad.w) {
    throw std::invalid_argument("forward_from_attention: activation shape mismatch");
  }
  Workspace ws;
  Batch b = pack_batch(std::vector<const Tensor3*>{&x.data});
  net_.forward(b, ws);
  Batch& att = ws.acts[net_.attention_layer];
  std::memcpy(att.sample(0), acts.v.data(), sizeof(float) * acts.size());
  net_.forward_from(ws, net_.attention_layer + 1);
  return ws.acts.back().v;
}

}  // namespace bbsteal

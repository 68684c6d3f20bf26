#include "bbsteal/train.hpp"

#include <cmath>
#include <stdexcept>

#include "bbsteal/kernels.hpp"

namespace bbsteal {

void TrainConfig::validate() const {
  if (epochs <= 0 || base_lr <= 0.0 || lr_decay_period <= 0 || batch_size <= 0) {
    throw std::invalid_argument("TrainConfig: fields must be positive");
  }
  if (lr_decay_factor <= 0.0 || lr_decay_factor >= 1.0) {
    throw std::invalid_argument("TrainConfig: lr_decay_factor must be in (0,1)");
  }
  if (momentum < 0.0 || weight_decay < 0.0) {
    throw std::invalid_argument("TrainConfig: momentum/weight_decay must be non-negative");
  }
}

double TrainConfig::effective_lr() const {
  return scale_lr_by_batch ? base_lr * static_cast<double>(batch_size) / 128.0 : base_lr;
}

namespace {

// dL/dlogits for one sample, written into dst. Returns the sample loss.
double loss_grad_row(LossKind kind, const float* probs, const float* target, int nc, float* dst,
                     float scale) {
  switch (kind) {
    case LossKind::cross_entropy: {
      double loss = 0.0;
      for (int j = 0; j < nc; ++j) {
        if (target[j] > 0.0f) {
          loss -= static_cast<double>(target[j]) *
                  std::log(std::max(static_cast<double>(probs[j]), 1e-12));
        }
        dst[j] = (probs[j] - target[j]) * scale;
      }
      return loss;
    }
    case LossKind::complement_log: {
      // target is one-hot; y = argmax(target)
      int y = 0;
      for (int j = 1; j < nc; ++j) {
        if (target[j] > target[y]) y = j;
      }
      const double py = probs[y];
      const double denom = std::max(1.0 - py, 1e-6);
      for (int j = 0; j < nc; ++j) {
        const float d = static_cast<float>(py * ((j == y ? 1.0 : 0.0) - probs[j]) / denom);
        dst[j] = d * scale;
      }
      return -std::log(std::max(denom, 1e-12));
    }
  }
  return 0.0;
}

}  // namespace

void fit(Classifier& model, const std::vector<TrainItem>& items, const TrainConfig& config,
         LossKind loss) {
  config.validate();
  if (items.empty()) throw std::invalid_argument("fit: empty training set");
  const int nc = model.num_classes();
  for (const TrainItem& it : items) {
    if (!it.image || !it.target) throw std::invalid_argument("fit: null item");
    if (static_cast<int>(it.target->size()) != nc) {
      throw std::invalid_argument("fit: target size mismatch");
    }
  }

  model.reinit(config.seed);
  Net& net = model.net();
  Rng rng = Rng(config.seed).derive(0x7261696eULL);

  Grads grads = net.make_grads();
  Grads velocity = net.make_grads();
  Workspace ws;
  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const double lr0 = config.effective_lr();
  std::vector<float> probs;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr0 * std::pow(config.lr_decay_factor, epoch / config.lr_decay_period);
    // Fisher-Yates shuffle
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    for (size_t start = 0; start < items.size(); start += config.batch_size) {
      const size_t end = std::min(items.size(), start + static_cast<size_t>(config.batch_size));
      const int bn = static_cast<int>(end - start);
      std::vector<const Tensor3*> imgs(bn);
      for (int i = 0; i < bn; ++i) imgs[i] = items[order[start + i]].image;
      Batch b = pack_batch(imgs);
      net.forward(b, ws);
      const Batch& logits = ws.acts.back();
      probs.resize(static_cast<size_t>(bn) * nc);
      kpar::softmax_rows(logits.v.data(), bn, nc, probs.data());

      Batch dlogits(bn, nc, 1, 1);
      const float scale = 1.0f / static_cast<float>(bn);
      for (int i = 0; i < bn; ++i) {
        loss_grad_row(loss, probs.data() + static_cast<size_t>(i) * nc,
                      items[order[start + i]].target->data(), nc, dlogits.sample(i), scale);
      }
      net.backward(dlogits, ws, &grads, nullptr);
      for (size_t p = 0; p < net.params.size(); ++p) {
        kpar::sgd_update(net.params[p].v.data(), grads[p].data(), velocity[p].data(),
                         net.params[p].size(), static_cast<float>(lr),
                         static_cast<float>(config.momentum),
                         static_cast<float>(config.weight_decay));
      }
    }
  }
}

std::vector<TrainItem> collect_items(const std::vector<const SampleSet*>& hard_sets,
                                     const SampleSet* pseudo_set) {
  std::vector<TrainItem> items;
  for (const SampleSet* set : hard_sets) {
    if (!set) continue;
    for (const Sample& s : set->items()) {
      TrainItem it;
      it.image = &s.image.data;
      if (const auto* h = std::get_if<HardLabel>(&s.label)) {
        it.target = &h->onehot;
      } else if (const auto* p = std::get_if<ProbVector>(&s.label)) {
        it.target = &p->probs;
      } else {
        throw std::invalid_argument("fit_substitute: unlabeled sample in hard set");
      }
      items.push_back(it);
    }
  }
  if (pseudo_set) {
    for (const Sample& s : pseudo_set->items()) {
      const auto* p = std::get_if<ProbVector>(&s.label);
      if (!p) throw std::invalid_argument("fit_substitute: pseudo sample without ProbVector");
      items.push_back(TrainItem{&s.image.data, &p->probs});
    }
  }
  return items;
}

void fit_substitute(Classifier& model, const std::vector<const SampleSet*>& hard_sets,
                    const SampleSet* pseudo_set, const TrainConfig& config) {
  std::vector<TrainItem> items = collect_items(hard_sets, pseudo_set);
  if (items.empty()) throw std::invalid_argument("fit_substitute: empty union of training sets");
  fit(model, items, config, LossKind::cross_entropy);
}

double total_loss(const Classifier& model, const std::vector<TrainItem>& items, LossKind loss) {
  if (items.empty()) throw std::invalid_argument("total_loss: empty set");
  const int nc = model.num_classes();
  std::vector<const Tensor3*> imgs(items.size());
  for (size_t i = 0; i < items.size(); ++i) imgs[i] = items[i].image;
  std::vector<ProbVector> probs = model.predict_tensors(imgs);
  double sum = 0.0;
  std::vector<float> scratch(nc);
  for (size_t i = 0; i < items.size(); ++i) {
    sum += loss_grad_row(loss, probs[i].probs.data(), items[i].target->data(), nc,
                         scratch.data(), 0.0f);
  }
  return sum;
}

}  // namespace bbsteal

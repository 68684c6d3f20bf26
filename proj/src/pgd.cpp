#include "bbsteal/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbsteal/kernels.hpp"
#include "bbsteal/truncation.hpp"

namespace bbsteal {

std::vector<ImageTensor> pgd_craft(const Classifier& model, const std::vector<ImageTensor>& images,
                                   const std::vector<int>& labels, const PgdConfig& config) {
  if (images.empty() || images.size() != labels.size()) {
    throw std::invalid_argument("pgd_craft: bad arguments");
  }
  if (config.eps < 0.0) throw std::invalid_argument("pgd_craft: eps must be >= 0");
  const int nc = model.num_classes();
  const float eps = static_cast<float>(config.eps);
  const float step = static_cast<float>(config.step_size);

  std::vector<ImageTensor> out(images.size());
  const Net& net = model.net();
  Workspace ws;

  constexpr size_t kChunk = 64;
  for (size_t start = 0; start < images.size(); start += kChunk) {
    const size_t end = std::min(images.size(), start + kChunk);
    const int bn = static_cast<int>(end - start);

    std::vector<const Tensor3*> clean(bn);
    for (int i = 0; i < bn; ++i) clean[i] = &images[start + i].data;
    Batch x0 = pack_batch(clean);
    Batch x = x0;

    // random start inside the ball, clipped to the valid range
    for (size_t i = start; i < end; ++i) {
      Rng rng(Rng::mix(config.seed, Rng::hash_str(images[i].id)));
      float* px = x.sample(static_cast<int>(i - start));
      const float* p0 = x0.sample(static_cast<int>(i - start));
      for (size_t j = 0; j < x.sample_stride(); ++j) {
        const float d = eps > 0.0f ? static_cast<float>(rng.uniform(-config.eps, config.eps)) : 0.0f;
        px[j] = std::clamp(p0[j] + d, 0.0f, 1.0f);
      }
    }

    std::vector<float> probs(static_cast<size_t>(bn) * nc);
    for (int it = 0; it < config.steps; ++it) {
      net.forward(x, ws);
      const Batch& logits = ws.acts.back();
      kpar::softmax_rows(logits.v.data(), bn, nc, probs.data());
      Batch dlogits(bn, nc, 1, 1);
      for (int i = 0; i < bn; ++i) {
        // ascend the cross-entropy of the original label
        float* row = dlogits.sample(i);
        const float* p = probs.data() + static_cast<size_t>(i) * nc;
        for (int j = 0; j < nc; ++j) row[j] = p[j] - (j == labels[start + i] ? 1.0f : 0.0f);
      }
      Batch dx;
      net.backward(dlogits, ws, nullptr, &dx);
      for (int i = 0; i < bn; ++i) {
        float* px = x.sample(i);
        const float* p0 = x0.sample(i);
        const float* g = dx.sample(i);
        for (size_t j = 0; j < x.sample_stride(); ++j) {
          float v = px[j] + step * (g[j] > 0.0f ? 1.0f : (g[j] < 0.0f ? -1.0f : 0.0f));
          v = std::clamp(v, p0[j] - eps, p0[j] + eps);
          px[j] = std::clamp(v, 0.0f, 1.0f);
        }
      }
    }

    for (size_t i = start; i < end; ++i) {
      Tensor3 t(x.c, x.h, x.w);
      const float* px = x.sample(static_cast<int>(i - start));
      std::copy(px, px + t.size(), t.v.begin());
      out[i] = make_image(std::move(t), "adversarial");
    }
  }
  return out;
}

double pgd_transfer(const Classifier& substitute, const Classifier& victim,
                    const LabeledData& test, const PgdConfig& config) {
  if (test.size() == 0) throw std::invalid_argument("pgd_transfer: empty test set");

  std::vector<ProbVector> vpred = victim.predict(test.images);
  std::vector<ImageTensor> eligible;
  std::vector<int> labels;
  for (size_t i = 0; i < test.size(); ++i) {
    if (config.max_samples > 0 && static_cast<int>(eligible.size()) >= config.max_samples) break;
    const int pred = argmax_lowest(vpred[i].probs);
    if (pred == test.labels[i].class_index) {
      eligible.push_back(test.images[i]);
      labels.push_back(pred);
    }
  }
  if (eligible.empty()) throw std::runtime_error("pgd_transfer: victim classifies nothing correctly");

  std::vector<ImageTensor> adv = pgd_craft(substitute, eligible, labels, config);
  std::vector<ProbVector> vadv = victim.predict(adv);
  size_t flipped = 0;
  for (size_t i = 0; i < adv.size(); ++i) {
    if (argmax_lowest(vadv[i].probs) != labels[i]) ++flipped;
  }
  return static_cast<double>(flipped) / static_cast<double>(adv.size());
}

}  // namespace bbsteal

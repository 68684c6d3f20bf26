#include "bbsteal/erase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bbsteal {

void EraseParams::validate() const {
  // degenerate point ranges (lo == hi) are allowed
  if (!(area_lo > 0.0 && area_hi < 1.0 && area_lo <= area_hi)) {
    throw std::invalid_argument("EraseParams: need 0 < area_lo <= area_hi < 1");
  }
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi)) {
    throw std::invalid_argument("EraseParams: need 0 < aspect_lo <= aspect_hi");
  }
}

void PriorMap::validate() const {
  if (h <= 0 || w <= 0 || weights.size() != static_cast<size_t>(h) * w) {
    throw std::invalid_argument("PriorMap: bad dimensions");
  }
  double sum = 0.0;
  for (double v : weights) {
    if (!(v >= 0.0)) throw std::invalid_argument("PriorMap: negative weight");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-6) throw std::invalid_argument("PriorMap: weights must sum to 1");
}

PriorMap uniform_prior(int height, int width) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("uniform_prior: bad dims");
  PriorMap p;
  p.h = height;
  p.w = width;
  p.weights.assign(static_cast<size_t>(height) * width,
                   1.0 / (static_cast<double>(height) * width));
  return p;
}

PriorMap attention_prior(const AttentionMap& attention) {
  if (attention.image_h <= 0 || attention.image_w <= 0) {
    throw std::invalid_argument("attention_prior: attention map not upsampled");
  }
  double sum = 0.0;
  for (float v : attention.upsampled) {
    if (v < 0.0f) throw std::invalid_argument("attention_prior: negative attention");
    sum += v;
  }
  if (sum <= 0.0) return uniform_prior(attention.image_h, attention.image_w);
  PriorMap p;
  p.h = attention.image_h;
  p.w = attention.image_w;
  p.weights.resize(attention.upsampled.size());
  for (size_t i = 0; i < p.weights.size(); ++i) p.weights[i] = attention.upsampled[i] / sum;
  return p;
}

namespace {
// inverse-CDF draw over the flattened weights
size_t sample_prior_index(const PriorMap& prior, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  size_t last_positive = 0;
  bool seen = false;
  for (size_t i = 0; i < prior.weights.size(); ++i) {
    if (prior.weights[i] <= 0.0) continue;
    acc += prior.weights[i];
    last_positive = i;
    seen = true;
    if (u < acc) return i;
  }
  if (!seen) throw std::invalid_argument("erase: prior has no positive weight");
  return last_positive;  // u landed in the rounding tail
}
}  // namespace

std::pair<ImageTensor, EraseRect> erase(const ImageTensor& image, const PriorMap& prior,
                                        const EraseParams& params, Rng& rng) {
  params.validate();
  prior.validate();
  const Tensor3& src = image.data;
  if (prior.h != src.h || prior.w != src.w) {
    throw std::invalid_argument("erase: prior size does not match image");
  }

  EraseRect rect;
  const double s_total = static_cast<double>(src.h) * src.w;
  rect.area_ratio = rng.uniform(params.area_lo, params.area_hi);
  rect.aspect = rng.uniform(params.aspect_lo, params.aspect_hi);
  const double area = rect.area_ratio * s_total;
  rect.half_h = std::sqrt(area * rect.aspect) / 2.0;
  rect.half_w = std::sqrt(area / rect.aspect) / 2.0;

  const size_t flat = sample_prior_index(prior, rng);
  rect.center_y = static_cast<int>(flat / prior.w);
  rect.center_x = static_cast<int>(flat % prior.w);

  // floor the continuous bounds; always cover the center pixel, then clip
  rect.x0 = static_cast<int>(std::floor(rect.center_x - rect.half_w));
  rect.x1 = static_cast<int>(std::floor(rect.center_x + rect.half_w));
  rect.y0 = static_cast<int>(std::floor(rect.center_y - rect.half_h));
  rect.y1 = static_cast<int>(std::floor(rect.center_y + rect.half_h));
  rect.x0 = std::min(rect.x0, rect.center_x);
  rect.x1 = std::max(rect.x1, rect.center_x + 1);
  rect.y0 = std::min(rect.y0, rect.center_y);
  rect.y1 = std::max(rect.y1, rect.center_y + 1);
  rect.x0 = std::max(rect.x0, 0);
  rect.y0 = std::max(rect.y0, 0);
  rect.x1 = std::min(rect.x1, src.w);
  rect.y1 = std::min(rect.y1, src.h);

  Tensor3 out = src;
  for (int c = 0; c < out.c; ++c) {
    for (int y = rect.y0; y < rect.y1; ++y) {
      for (int x = rect.x0; x < rect.x1; ++x) {
        out.at(c, y, x) = static_cast<float>(rng.uniform());
      }
    }
  }
  return {make_image(std::move(out), "erased"), rect};
}

}  // namespace bbsteal

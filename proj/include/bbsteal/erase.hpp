#ifndef BBSTEAL_ERASE_HPP
#define BBSTEAL_ERASE_HPP

#include <utility>
#include <vector>

#include "bbsteal/attention.hpp"
#include "bbsteal/rng.hpp"
#include "bbsteal/tensor.hpp"

namespace bbsteal {

struct EraseParams {
  double area_lo = 0.02;   // s_l
  double area_hi = 0.4;    // s_h
  double aspect_lo = 0.3;  // r_1
  double aspect_hi = 1.0 / 0.3;  // r_2

  void validate() const;
};

// Discrete distribution over pixel centers.
struct PriorMap {
  int h = 0, w = 0;
  std::vector<double> weights;  // h*w, non-negative, sums to 1

  void validate() const;
};

PriorMap uniform_prior(int height, int width);

// Weights proportional to the upsampled attention values; identically-zero
// attention falls back to the uniform prior.
PriorMap attention_prior(const AttentionMap& attention);

struct EraseRect {
  int center_x = 0, center_y = 0;  // sampled from the prior
  double half_w = 0.0, half_h = 0.0;  // W_e, H_e before rounding
  double area_ratio = 0.0;            // sampled S_e / S
  double aspect = 0.0;                // sampled r_e (height/width)
  // integer pixel bounds after flooring and clipping, half-open
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

// Rectangle occlusion with the center drawn from the prior; erased pixels are
// filled with independent uniform values in [0,1), all channels. Pixels
// outside the rectangle are untouched.
std::pair<ImageTensor, EraseRect> erase(const ImageTensor& image, const PriorMap& prior,
                                        const EraseParams& params, Rng& rng);

}  // namespace bbsteal

#endif  // BBSTEAL_ERASE_HPP

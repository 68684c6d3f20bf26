#ifndef BBSTEAL_PGD_HPP
#define BBSTEAL_PGD_HPP

#include <cstdint>

#include "bbsteal/classifier.hpp"
#include "bbsteal/dataset.hpp"

namespace bbsteal {

struct PgdConfig {
  double eps = 8.0 / 255.0;
  double step_size = 2.0 / 255.0;
  int steps = 20;
  int max_samples = 0;  // 0 = use the whole test set
  uint64_t seed = 0;
};

// Untargeted L-inf PGD on `model`, maximizing cross-entropy against
// `labels` (class indices), random start inside the ball, iterates clipped
// to the ball and to [0,1].
std::vector<ImageTensor> pgd_craft(const Classifier& model, const std::vector<ImageTensor>& images,
                                   const std::vector<int>& labels, const PgdConfig& config);

// Fraction of correctly victim-classified test inputs whose victim label
// flips under adversarial examples crafted on the substitute. Uses an
// evaluation copy of the victim; no ledger involved.
double pgd_transfer(const Classifier& substitute, const Classifier& victim,
                    const LabeledData& test, const PgdConfig& config);

}  // namespace bbsteal

#endif  // BBSTEAL_PGD_HPP

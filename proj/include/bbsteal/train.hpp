#ifndef BBSTEAL_TRAIN_HPP
#define BBSTEAL_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

struct TrainConfig {
  int epochs = 30;
  double base_lr = 0.02;
  bool scale_lr_by_batch = true;  // effective lr = base_lr * batch_size / 128
  double lr_decay_factor = 0.1;
  int lr_decay_period = 10;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 32;
  uint64_t seed = 0;

  void validate() const;
  double effective_lr() const;
};

enum class LossKind {
  cross_entropy,   // -sum_j t_j log p_j
  complement_log,  // -log(1 - p_y): pushes probability away from the true class
};

struct TrainItem {
  const Tensor3* image = nullptr;
  const std::vector<float>* target = nullptr;  // distribution (one-hot or soft)
};

// SGD with momentum, weight decay and step decay. Reinitializes the model
// from config.seed before training (every fit starts from scratch).
void fit(Classifier& model, const std::vector<TrainItem>& items, const TrainConfig& config,
         LossKind loss = LossKind::cross_entropy);

// Objective over hard-labeled sets plus an optional soft pseudo-labeled set:
// unweighted sum of per-sample cross-entropies over all sets.
void fit_substitute(Classifier& model, const std::vector<const SampleSet*>& hard_sets,
                    const SampleSet* pseudo_set, const TrainConfig& config);

// Total loss (sum over samples) of the same objective; used for reporting and
// for checking that training reduced it.
double total_loss(const Classifier& model, const std::vector<TrainItem>& items,
                  LossKind loss = LossKind::cross_entropy);

std::vector<TrainItem> collect_items(const std::vector<const SampleSet*>& hard_sets,
                                     const SampleSet* pseudo_set);

}  // namespace bbsteal

#endif  // BBSTEAL_TRAIN_HPP

#ifndef BBSTEAL_METRICS_HPP
#define BBSTEAL_METRICS_HPP

#include "bbsteal/types.hpp"

namespace bbsteal {

// Fraction of positions where both sequences predict the same class.
double agreement(const std::vector<HardLabel>& preds_a, const std::vector<HardLabel>& preds_b);

// Fraction of predictions matching ground truth.
double accuracy(const std::vector<HardLabel>& preds, const std::vector<HardLabel>& truth);

// Shannon entropy in nats; 0 log 0 = 0.
double prob_entropy(const ProbVector& p);

// Maximum softmax probability.
float msp(const ProbVector& p);

}  // namespace bbsteal

#endif  // BBSTEAL_METRICS_HPP

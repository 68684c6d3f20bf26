#include "bbsteal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bbsteal {

namespace {
double matching_fraction(const std::vector<HardLabel>& a, const std::vector<HardLabel>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("metrics: empty prediction sequence");
  if (a.size() != b.size()) throw std::invalid_argument("metrics: length mismatch");
  size_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].class_index == b[i].class_index) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(a.size());
}
}  // namespace

double agreement(const std::vector<HardLabel>& preds_a, const std::vector<HardLabel>& preds_b) {
  return matching_fraction(preds_a, preds_b);
}

double accuracy(const std::vector<HardLabel>& preds, const std::vector<HardLabel>& truth) {
  return matching_fraction(preds, truth);
}

double prob_entropy(const ProbVector& p) {
  double h = 0.0;
  for (float q : p.probs) {
    if (q > 0.0f) h -= static_cast<double>(q) * std::log(static_cast<double>(q));
  }
  return h;
}

float msp(const ProbVector& p) {
  if (p.probs.empty()) throw std::invalid_argument("msp: empty");
  return *std::max_element(p.probs.begin(), p.probs.end());
}

}  // namespace bbsteal

#include "bbsteal/truncation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bbsteal {

int argmax_lowest(const std::vector<float>& v) {
  if (v.empty()) throw std::invalid_argument("argmax_lowest: empty vector");
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

HardLabel truncate_hard(const ProbVector& probs) {
  probs.validate();
  return hard_label_from_class(argmax_lowest(probs.probs), probs.num_classes());
}

ProbVector truncate_topk(const ProbVector& probs, int k) {
  probs.validate();
  const int n = probs.num_classes();
  if (k < 1 || k > n) throw std::invalid_argument("truncate_topk: k out of range");
  if (k == n) return probs;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // descending by probability, lower index first among equals
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs.probs[a] > probs.probs[b]; });

  ProbVector out;
  out.probs.assign(n, 0.0f);
  float kept = 0.0f;
  for (int i = 0; i < k; ++i) kept += probs.probs[order[i]];
  if (kept <= 0.0f) {
    // all kept entries zero: fall back to uniform mass over the kept set
    for (int i = 0; i < k; ++i) out.probs[order[i]] = 1.0f / static_cast<float>(k);
    return out;
  }
  for (int i = 0; i < k; ++i) out.probs[order[i]] = probs.probs[order[i]] / kept;
  return out;
}

}  // namespace bbsteal

#ifndef BBSTEAL_TRUNCATION_HPP
#define BBSTEAL_TRUNCATION_HPP

#include "bbsteal/types.hpp"

namespace bbsteal {

// argmax with the documented tie policy: lowest class index wins.
int argmax_lowest(const std::vector<float>& v);

// Top-1 truncation to a one-hot vector.
HardLabel truncate_hard(const ProbVector& probs);

// Keep the k largest entries (ties resolved toward lower indices) and
// renormalize. k == N returns the input unchanged.
ProbVector truncate_topk(const ProbVector& probs, int k);

}  // namespace bbsteal

#endif  // BBSTEAL_TRUNCATION_HPP

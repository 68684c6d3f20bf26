#ifndef BBSTEAL_SAMPLERS_HPP
#define BBSTEAL_SAMPLERS_HPP

#include <string>
#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/rng.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

enum class SamplerKind { random, entropy, k_center };

SamplerKind sampler_from_name(const std::string& s);
const char* sampler_name(SamplerKind k);

// Picks `count` distinct indices from the unlabeled remainder of the pool
// (available[i] == true). random: uniform without replacement. entropy:
// highest prediction entropy under the substitute. k_center: greedy 2-approx
// max-min on penultimate features, seeded by the already-labeled samples'
// features. Throws if fewer than `count` samples remain.
std::vector<int> select_pool_samples(const std::vector<ImageTensor>& pool,
                                     const std::vector<bool>& available,
                                     const Classifier* substitute,
                                     const std::vector<std::vector<float>>& labeled_features,
                                     SamplerKind kind, int count, Rng& rng);

// Greedy max-min selection used by k_center; exposed for the brute-force
// oracle comparison.
std::vector<int> k_center_greedy(const std::vector<std::vector<float>>& candidates,
                                 const std::vector<std::vector<float>>& seeds, int count,
                                 Rng& rng);

double squared_distance(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace bbsteal

#endif  // BBSTEAL_SAMPLERS_HPP

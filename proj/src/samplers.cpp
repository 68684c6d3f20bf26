#include "bbsteal/samplers.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bbsteal/metrics.hpp"

namespace bbsteal {

SamplerKind sampler_from_name(const std::string& s) {
  if (s == "random") return SamplerKind::random;
  if (s == "entropy") return SamplerKind::entropy;
  if (s == "k_center" || s == "k-center" || s == "kcenter") return SamplerKind::k_center;
  throw std::invalid_argument("unknown sampler: " + s);
}

const char* sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::random: return "random";
    case SamplerKind::entropy: return "entropy";
    case SamplerKind::k_center: return "k_center";
  }
  return "?";
}

double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

std::vector<int> k_center_greedy(const std::vector<std::vector<float>>& candidates,
                                 const std::vector<std::vector<float>>& seeds, int count,
                                 Rng& rng) {
  const int n = static_cast<int>(candidates.size());
  if (count > n) throw std::invalid_argument("k_center_greedy: not enough candidates");
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  for (const auto& s : seeds) {
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(candidates[i], s));
    }
  }
  std::vector<int> picked;
  picked.reserve(count);
  for (int step = 0; step < count; ++step) {
    int best = -1;
    if (seeds.empty() && step == 0) {
      // no centers yet: the max-min criterion is degenerate, start at random
      best = static_cast<int>(rng.uniform_index(n));
    } else {
      double best_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (min_dist[i] > best_d) {
          best_d = min_dist[i];
          best = i;
        }
      }
    }
    taken[best] = true;
    picked.push_back(best);
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(candidates[i], candidates[best]));
    }
  }
  return picked;
}

std::vector<int> select_pool_samples(const std::vector<ImageTensor>& pool,
                                     const std::vector<bool>& available,
                                     const Classifier* substitute,
                                     const std::vector<std::vector<float>>& labeled_features,
                                     SamplerKind kind, int count, Rng& rng) {
  if (count <= 0) return {};
  std::vector<int> remainder;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (available[i]) remainder.push_back(static_cast<int>(i));
  }
  if (static_cast<size_t>(count) > remainder.size()) {
    throw std::runtime_error("select_pool_samples: pool exhausted (" +
                             std::to_string(remainder.size()) + " left, " +
                             std::to_string(count) + " requested)");
  }

  switch (kind) {
    case SamplerKind::random: {
      // partial Fisher-Yates over the remainder
      for (int i = 0; i < count; ++i) {
        const size_t j = i + rng.uniform_index(remainder.size() - i);
        std::swap(remainder[i], remainder[j]);
      }
      remainder.resize(count);
      return remainder;
    }
    case SamplerKind::entropy: {
      if (!substitute) throw std::invalid_argument("entropy sampler needs a substitute model");
      std::vector<ImageTensor> imgs;
      imgs.reserve(remainder.size());
      for (int idx : remainder) imgs.push_back(pool[idx]);
      std::vector<ProbVector> probs = substitute->predict(imgs);
      std::vector<size_t> order(remainder.size());
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> ent(remainder.size());
      for (size_t i = 0; i < remainder.size(); ++i) ent[i] = prob_entropy(probs[i]);
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return ent[a] > ent[b]; });
      std::vector<int> out(count);
      for (int i = 0; i < count; ++i) out[i] = remainder[order[i]];
      return out;
    }
    case SamplerKind::k_center: {
      if (!substitute) throw std::invalid_argument("k_center sampler needs a substitute model");
      std::vector<ImageTensor> imgs;
      imgs.reserve(remainder.size());
      for (int idx : remainder) imgs.push_back(pool[idx]);
      std::vector<std::vector<float>> feats = substitute->features(imgs);
      std::vector<int> local = k_center_greedy(feats, labeled_features, count, rng);
      std::vector<int> out(count);
      for (int i = 0; i < count; ++i) out[i] = remainder[local[i]];
      return out;
    }
  }
  throw std::logic_error("select_pool_samples: unreachable");
}

}  // namespace bbsteal

#include "bbsteal/attack.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "bbsteal/metrics.hpp"
#include "bbsteal/truncation.hpp"

namespace bbsteal {

void AttackConfig::validate() const {
  if (budgets.empty()) throw std::invalid_argument("AttackConfig: empty budget schedule");
  uint64_t prev = 0;
  for (uint64_t b : budgets) {
    if (b <= prev) throw std::invalid_argument("AttackConfig: budgets must be strictly increasing");
    prev = b;
  }
  if (step1_fraction < 0.0 || step1_fraction > 1.0) {
    throw std::invalid_argument("AttackConfig: step1_fraction in [0,1]");
  }
  if (erase_reps < 1) throw std::invalid_argument("AttackConfig: erase_reps must be >= 1");
  erase_params.validate();
  train.validate();
}

int pi_select(const std::vector<ProbVector>& candidate_probs, int hard_class) {
  if (candidate_probs.empty()) throw std::invalid_argument("pi_select: no candidates");
  int best = 0;
  for (size_t i = 1; i < candidate_probs.size(); ++i) {
    if (candidate_probs[i].probs.at(hard_class) < candidate_probs[best].probs.at(hard_class)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<int> msp_rank(const std::vector<float>& confidences) {
  std::vector<int> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return confidences[a] > confidences[b]; });
  return order;
}

std::vector<ErasedCandidate> cam_erase_candidates(const Classifier& substitute,
                                                  const SampleSet& transfer_set,
                                                  const SampleSet& erased_set,
                                                  const EraseParams& params, int reps, Rng& rng) {
  if (transfer_set.empty()) throw std::invalid_argument("cam_erase_candidates: empty D_T");
  if (reps < 1) throw std::invalid_argument("cam_erase_candidates: reps must be >= 1");

  const size_t n = transfer_set.size();
  std::vector<const Tensor3*> imgs(n);
  for (size_t i = 0; i < n; ++i) imgs[i] = &transfer_set[i].image.data;

  // attention for the substitute's own top-1 class on each clean image
  std::vector<AttentionMap> maps = grad_cam_batch(substitute, imgs, std::vector<int>(n, -1));

  // per-sample erasures, each driven by its own derived stream
  std::vector<std::vector<ImageTensor>> variants(n);
  for (size_t i = 0; i < n; ++i) {
    Rng sample_rng = rng.derive(i);
    PriorMap prior = attention_prior(maps[i]);
    variants[i].reserve(reps);
    for (int r = 0; r < reps; ++r) {
      variants[i].push_back(erase(transfer_set[i].image, prior, params, sample_rng).first);
    }
  }

  // one batched prediction pass over all variants
  std::vector<const Tensor3*> flat;
  flat.reserve(n * reps);
  for (const auto& vs : variants) {
    for (const auto& v : vs) flat.push_back(&v.data);
  }
  std::vector<ProbVector> flat_probs = substitute.predict_tensors(flat);

  std::vector<ErasedCandidate> out;
  out.reserve(n);
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < n; ++i) {
    std::vector<ProbVector> probs(flat_probs.begin() + i * reps,
                                  flat_probs.begin() + (i + 1) * reps);
    const int hard_class = label_class(transfer_set[i].label);
    const int k = pi_select(probs, hard_class);
    ErasedCandidate cand;
    cand.parent_index = static_cast<int>(i);
    cand.image = variants[i][k];
    cand.substitute_probs = probs[k];
    cand.confidence = msp(probs[k]);
    if (erased_set.contains(cand.image.id) || !seen.insert(cand.image.id).second) continue;
    out.push_back(std::move(cand));
  }
  return out;
}

void rank_and_query_erased(std::vector<ErasedCandidate>& candidates, uint64_t budget,
                           VictimOracle& oracle, SampleSet& erased_set) {
  if (budget == 0 || candidates.empty()) return;
  std::vector<float> conf(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) conf[i] = candidates[i].confidence;
  std::vector<int> order = msp_rank(conf);
  const size_t take = std::min<size_t>(budget, candidates.size());

  std::vector<ImageTensor> batch;
  batch.reserve(take);
  for (size_t i = 0; i < take; ++i) batch.push_back(candidates[order[i]].image);

  // refusal throws before any mutation of D_E
  std::vector<Label> labels = oracle.query(batch, "step2.1");
  for (size_t i = 0; i < take; ++i) {
    Sample s;
    s.image = std::move(batch[i]);
    s.label = std::move(labels[i]);
    s.provenance = Provenance::erased;
    erased_set.add(std::move(s));
  }
}

ProbVector pseudo_label(const Classifier& substitute, const ImageTensor& x, int reps,
                        const EraseParams& params, Rng& rng) {
  if (reps < 1) throw std::invalid_argument("pseudo_label: reps must be >= 1");
  const PriorMap uniform = uniform_prior(x.data.h, x.data.w);
  std::vector<ImageTensor> variants;
  variants.reserve(reps);
  for (int r = 0; r < reps; ++r) variants.push_back(erase(x, uniform, params, rng).first);
  std::vector<ProbVector> probs = substitute.predict(variants);
  ProbVector out;
  out.probs.assign(substitute.num_classes(), 0.0f);
  for (const ProbVector& p : probs) {
    for (size_t i = 0; i < out.probs.size(); ++i) out.probs[i] += p.probs[i];
  }
  const float inv = 1.0f / static_cast<float>(reps);
  for (float& v : out.probs) v *= inv;
  return out;
}

namespace {

// batched pseudo-labeling; bitwise identical to calling pseudo_label per
// sample (per-sample kernels and the same per-sample stream derivation)
SampleSet build_pseudo_set(const Classifier& substitute, const std::vector<const Sample*>& picked,
                           int reps, const EraseParams& params, Rng& rng) {
  SampleSet dp;
  if (picked.empty()) return dp;
  std::vector<std::vector<ImageTensor>> variants(picked.size());
  for (size_t i = 0; i < picked.size(); ++i) {
    Rng sample_rng = rng.derive(i);
    const PriorMap uniform = uniform_prior(picked[i]->image.data.h, picked[i]->image.data.w);
    variants[i].reserve(reps);
    for (int r = 0; r < reps; ++r) {
      variants[i].push_back(erase(picked[i]->image, uniform, params, sample_rng).first);
    }
  }
  std::vector<const Tensor3*> flat;
  flat.reserve(picked.size() * reps);
  for (const auto& vs : variants) {
    for (const auto& v : vs) flat.push_back(&v.data);
  }
  std::vector<ProbVector> flat_probs = substitute.predict_tensors(flat);
  const int nc = substitute.num_classes();
  for (size_t i = 0; i < picked.size(); ++i) {
    ProbVector y;
    y.probs.assign(nc, 0.0f);
    for (int r = 0; r < reps; ++r) {
      const ProbVector& p = flat_probs[i * reps + r];
      for (int j = 0; j < nc; ++j) y.probs[j] += p.probs[j];
    }
    const float inv = 1.0f / static_cast<float>(reps);
    for (float& v : y.probs) v *= inv;
    Sample s;
    s.image = picked[i]->image;
    s.label = std::move(y);
    s.provenance = Provenance::pseudo;
    dp.add(std::move(s));
  }
  return dp;
}

}  // namespace

AttackResult run_attack(const AttackConfig& config, VictimOracle& oracle, const SampleSet& pool,
                        const EvalFn& eval, AttackState* resume_state, const IterationHook& hook) {
  config.validate();
  if (oracle.ledger().cap() != config.budgets.back()) {
    throw std::invalid_argument("run_attack: ledger cap must equal the last schedule entry");
  }
  for (const Sample& s : pool.items()) {
    if (s.provenance != Provenance::unlabeled) {
      throw std::invalid_argument("run_attack: pool must be unlabeled");
    }
  }

  std::vector<ImageTensor> pool_imgs;
  pool_imgs.reserve(pool.size());
  std::unordered_map<std::string, size_t> pool_index;
  for (size_t i = 0; i < pool.size(); ++i) {
    pool_imgs.push_back(pool[i].image);
    pool_index[pool[i].image.id] = i;
  }

  AttackState state;
  if (resume_state) {
    state = std::move(*resume_state);
  }
  Classifier substitute;
  if (state.next_iteration > 0) {
    if (!state.has_substitute) {
      throw std::invalid_argument("run_attack: resume state lacks the substitute snapshot");
    }
    substitute = std::move(state.substitute);
  } else {
    const Dims in_dims = {pool_imgs[0].data.c, pool_imgs[0].data.h, pool_imgs[0].data.w};
    substitute = Classifier(config.substitute_arch, in_dims, oracle.num_classes(),
                            Rng::mix(config.seed, 0xfeedULL));
  }
  state.has_substitute = false;

  std::vector<bool> available(pool_imgs.size(), true);
  for (const Sample& s : state.transfer_set.items()) {
    auto it = pool_index.find(s.image.id);
    if (it != pool_index.end()) available[it->second] = false;
  }

  AttackResult result;
  result.completed = true;

  Rng master(config.seed);
  const int total_iterations = static_cast<int>(config.budgets.size());

  for (int iter = state.next_iteration; iter < total_iterations; ++iter) {
    Rng iter_rng = master.derive(static_cast<uint64_t>(iter) + 1);
    TrainConfig iter_train = config.train;
    iter_train.seed = Rng::mix(config.seed, static_cast<uint64_t>(iter));

    const uint64_t target_q = config.budgets[iter];
    const uint64_t spent = oracle.ledger().spent();
    const uint64_t increment = target_q > spent ? target_q - spent : 0;
    uint64_t step1_quota =
        config.cam_erasing
            ? static_cast<uint64_t>(static_cast<double>(increment) * config.step1_fraction + 0.5)
            : increment;
    step1_quota = std::min(step1_quota, increment);

    size_t available_count = 0;
    for (bool a : available) available_count += a ? 1 : 0;

    bool pool_exhausted = false;

    // ---- step 1: grow the transfer set ----
    const uint64_t step1_count = std::min<uint64_t>(step1_quota, available_count);
    if (step1_count < step1_quota) pool_exhausted = true;
    if (step1_count > 0) {
      std::vector<std::vector<float>> labeled_feats;
      if (config.strategy == SamplerKind::k_center && !state.transfer_set.empty()) {
        std::vector<ImageTensor> labeled_imgs;
        labeled_imgs.reserve(state.transfer_set.size());
        for (const Sample& s : state.transfer_set.items()) labeled_imgs.push_back(s.image);
        labeled_feats = substitute.features(labeled_imgs);
      }
      Rng select_rng = iter_rng.derive(1);
      std::vector<int> picked =
          select_pool_samples(pool_imgs, available, &substitute, labeled_feats, config.strategy,
                              static_cast<int>(step1_count), select_rng);
      std::vector<ImageTensor> batch;
      batch.reserve(picked.size());
      for (int idx : picked) batch.push_back(pool_imgs[idx]);
      std::vector<Label> labels;
      try {
        labels = oracle.query(batch, "step1");
      } catch (const BudgetExceeded&) {
        result.completed = false;
        result.stop_reason = "budget_refused";
        break;
      }
      for (size_t i = 0; i < picked.size(); ++i) {
        available[picked[i]] = false;
        Sample s;
        s.image = std::move(batch[i]);
        s.label = std::move(labels[i]);
        s.provenance = Provenance::transfer;
        state.transfer_set.add(std::move(s));
      }
    }
    if (state.transfer_set.empty()) {
      result.completed = false;
      result.stop_reason = "pool_exhausted";
      break;
    }

    // pass after step 1: fresh-initialization training on D_T
    fit_substitute(substitute, {&state.transfer_set}, nullptr, iter_train);

    // ---- step 2.1: CAM-driven erasing ----
    if (config.cam_erasing) {
      const uint64_t budget21 = target_q > oracle.ledger().spent()
                                    ? target_q - oracle.ledger().spent()
                                    : 0;
      if (budget21 > 0) {
        Rng erase_rng = iter_rng.derive(2);
        std::vector<ErasedCandidate> candidates = cam_erase_candidates(
            substitute, state.transfer_set, state.erased_set, config.erase_params,
            config.erase_reps, erase_rng);
        try {
          rank_and_query_erased(candidates, budget21, oracle, state.erased_set);
        } catch (const BudgetExceeded&) {
          result.completed = false;
          result.stop_reason = "budget_refused";
          break;
        }
      }
      // a D_T-only pass with the same seed would reproduce the pass above
      // bit-for-bit, so the retrain only matters once D_E is non-empty
      if (!state.erased_set.empty()) {
        fit_substitute(substitute, {&state.transfer_set, &state.erased_set}, nullptr, iter_train);
      }
    }

    // ---- step 2.2: random-erasing pseudo-labels (no oracle queries) ----
    state.pseudo_set.clear();
    if (config.self_kd) {
      std::vector<int> remainder;
      for (size_t i = 0; i < available.size(); ++i) {
        if (available[i]) remainder.push_back(static_cast<int>(i));
      }
      const size_t want = std::min<size_t>(state.transfer_set.size(), remainder.size());
      if (want > 0) {
        Rng dp_rng = iter_rng.derive(3);
        for (size_t i = 0; i < want; ++i) {
          const size_t j = i + dp_rng.uniform_index(remainder.size() - i);
          std::swap(remainder[i], remainder[j]);
        }
        std::vector<const Sample*> picked;
        picked.reserve(want);
        for (size_t i = 0; i < want; ++i) picked.push_back(&pool[remainder[i]]);
        Rng label_rng = iter_rng.derive(4);
        state.pseudo_set = build_pseudo_set(substitute, picked, config.erase_reps,
                                            config.erase_params, label_rng);
        fit_substitute(substitute, {&state.transfer_set, &state.erased_set},
                       &state.pseudo_set, iter_train);
      }
    }

    TracePoint tp;
    tp.iteration = iter;
    tp.q = oracle.ledger().spent();
    const auto [agr, acc] = eval(substitute);
    tp.agreement = agr;
    tp.accuracy = acc;
    tp.dt_size = state.transfer_set.size();
    tp.de_size = state.erased_set.size();
    tp.dp_size = state.pseudo_set.size();
    state.trace.push_back(tp);
    state.next_iteration = iter + 1;
    if (hook) hook(state, substitute);

    if (pool_exhausted) {
      result.completed = false;
      result.stop_reason = "pool_exhausted";
      break;
    }
  }

  result.trace = state.trace;
  if (resume_state) {
    state.substitute = substitute;
    state.has_substitute = true;
    *resume_state = std::move(state);
  }
  result.substitute = std::move(substitute);
  return result;
}

}  // namespace bbsteal

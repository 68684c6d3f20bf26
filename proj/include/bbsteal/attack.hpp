#ifndef BBSTEAL_ATTACK_HPP
#define BBSTEAL_ATTACK_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/erase.hpp"
#include "bbsteal/samplers.hpp"
#include "bbsteal/train.hpp"
#include "bbsteal/victim.hpp"

namespace bbsteal {

struct AttackConfig {
  SamplerKind strategy = SamplerKind::random;
  std::vector<uint64_t> budgets;     // cumulative query caps, one per iteration
  double step1_fraction = 0.5;       // share of each increment spent in step 1
  int erase_reps = 5;                // N, both for selection and pseudo-labels
  EraseParams erase_params;
  bool cam_erasing = true;
  bool self_kd = true;
  std::string substitute_arch = "smallcnn";
  TrainConfig train;
  uint64_t seed = 0;

  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  uint64_t q = 0;
  double agreement = 0.0;
  double accuracy = 0.0;
  size_t dt_size = 0, de_size = 0, dp_size = 0;
};

// D_T / D_E / D_P plus the loop position; everything needed to resume.
struct AttackState {
  SampleSet transfer_set;  // D_T
  SampleSet erased_set;    // D_E
  SampleSet pseudo_set;    // D_P (rebuilt every iteration)
  int next_iteration = 0;
  std::vector<TracePoint> trace;
  // substitute after the last completed iteration; required when resuming
  // with next_iteration > 0
  Classifier substitute;
  bool has_substitute = false;
};

struct AttackResult {
  Classifier substitute;
  std::vector<TracePoint> trace;
  bool completed = true;
  std::string stop_reason;  // "pool_exhausted" / "budget_refused" when partial
};

// agreement and accuracy of a candidate substitute on the held-out test set
using EvalFn = std::function<std::pair<double, double>(const Classifier&)>;
// called after every completed iteration (checkpointing hook)
using IterationHook = std::function<void(const AttackState&, const Classifier&)>;

struct ErasedCandidate {
  int parent_index = -1;           // position in D_T
  ImageTensor image;               // selected erased variant
  ProbVector substitute_probs;     // substitute prediction on that variant
  float confidence = 0.0f;         // MSP of substitute_probs
};

// --- building blocks (exposed for tests and oracles) ---

// Picks the variant whose substitute probability on the oracle's hard-label
// class is smallest (the most different one).
int pi_select(const std::vector<ProbVector>& candidate_probs, int hard_class);

// Indices sorted by descending confidence, ties toward lower index.
std::vector<int> msp_rank(const std::vector<float>& confidences);

// For every sample in D_T: N attention-prior erasures, keep the pi-selected
// variant. Candidates whose content id already sits in D_E are dropped.
std::vector<ErasedCandidate> cam_erase_candidates(const Classifier& substitute,
                                                  const SampleSet& transfer_set,
                                                  const SampleSet& erased_set,
                                                  const EraseParams& params, int reps, Rng& rng);

// Queries the top-`budget` candidates by confidence and appends the results
// to D_E. On refusal D_E is left unchanged and the exception propagates.
void rank_and_query_erased(std::vector<ErasedCandidate>& candidates, uint64_t budget,
                           VictimOracle& oracle, SampleSet& erased_set);

// Mean substitute prediction over N uniform-prior erasures of x.
ProbVector pseudo_label(const Classifier& substitute, const ImageTensor& x, int reps,
                        const EraseParams& params, Rng& rng);

// Full loop: per schedule entry, step 1 (sample + query + train), step 2.1
// (CAM-driven erasing), step 2.2 (random-erasing pseudo-labels), with a
// fresh-initialization training pass after each set update.
AttackResult run_attack(const AttackConfig& config, VictimOracle& oracle, const SampleSet& pool,
                        const EvalFn& eval, AttackState* resume_state = nullptr,
                        const IterationHook& hook = nullptr);

}  // namespace bbsteal

#endif  // BBSTEAL_ATTACK_HPP

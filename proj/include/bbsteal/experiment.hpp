#ifndef BBSTEAL_EXPERIMENT_HPP
#define BBSTEAL_EXPERIMENT_HPP

#include <map>
#include <string>

#include "bbsteal/manifest.hpp"

namespace bbsteal {

struct VictimBundle {
  Classifier victim;
  std::shared_ptr<const Defense> defense;  // null when kind == none
  double victim_test_accuracy = 0.0;
};

// Trains (or loads cached) victim-side models for the manifest: the victim
// itself and, when configured, the misinformation model / poisoning
// surrogate. Artifacts live under <out>/victim/.
VictimBundle prepare_victim(const ExperimentManifest& m, const std::string& out_dir);

LabeledData build_labeled_dataset(const DatasetSpec& spec, int hw, const std::string& tag);
SampleSet build_pool(const DatasetSpec& spec, int hw);

struct RunOutcome {
  std::vector<TracePoint> trace;
  bool completed = true;
  std::string stop_reason;
};

// Runs the attack for every seed in the manifest. Each seed writes
// <out>/seed_<s>/{trace.jsonl, ledger.jsonl, substitute_final.ckpt,
// state/last_state.bin}. With resume=true, picks each seed up from its last
// completed iteration.
std::map<uint64_t, RunOutcome> run_experiment(const ExperimentManifest& m,
                                              const std::string& out_dir, bool resume = false);

// PGD transferability for every finished seed; writes <out>/transfer.csv and
// returns seed -> success rate.
std::map<uint64_t, double> eval_transfer(const ExperimentManifest& m, const std::string& out_dir);

// Expands a sweep axis into derived manifests and runs each into
// <out>/<name>/. Supported axes: misinformation_tau, poisoning_eps, topk
// (adds a hard-label run alongside the top-k values).
void run_sweep(const ExperimentManifest& base, const std::string& axis,
               const std::vector<double>& values, const std::string& out_dir, bool resume = false);

std::vector<TracePoint> load_trace(const std::string& path);
void save_trace(const std::string& path, const std::vector<TracePoint>& trace);

}  // namespace bbsteal

#endif  // BBSTEAL_EXPERIMENT_HPP

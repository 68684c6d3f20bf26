#ifndef BBSTEAL_REPORT_HPP
#define BBSTEAL_REPORT_HPP

#include <string>

namespace bbsteal {

// Aggregates every trace found under `dir` into comma-separated tables:
//   summary.csv  per run and schedule point, mean +/- sample std over seeds
//   curves.csv   per-seed accuracy/agreement vs queries (long format)
// and, when checkpoints are present, side-by-side victim/substitute attention
// heatmaps under heatmaps/. Regeneration is idempotent. Throws if no traces
// are found.
void emit_report(const std::string& dir);

}  // namespace bbsteal

#endif  // BBSTEAL_REPORT_HPP

#include "bbsteal/victim.hpp"

#include "bbsteal/truncation.hpp"

namespace bbsteal {

OracleMode oracle_mode_from_name(const std::string& s) {
  if (s == "soft") return OracleMode::soft;
  if (s == "topk") return OracleMode::topk;
  if (s == "hard") return OracleMode::hard;
  throw std::invalid_argument("unknown oracle mode: " + s);
}

const char* oracle_mode_name(OracleMode m) {
  switch (m) {
    case OracleMode::soft: return "soft";
    case OracleMode::topk: return "topk";
    case OracleMode::hard: return "hard";
  }
  return "?";
}

VictimOracle::VictimOracle(const Classifier& model, OracleConfig config,
                           std::shared_ptr<const Defense> defense, QueryLedger& ledger)
    : model_(model), config_(config), defense_(std::move(defense)), ledger_(ledger) {
  if (config_.mode == OracleMode::topk &&
      (config_.k < 1 || config_.k > model_.num_classes())) {
    throw std::invalid_argument("VictimOracle: top-k out of range");
  }
}

std::vector<Label> VictimOracle::query(const std::vector<ImageTensor>& batch,
                                       const std::string& phase) {
  if (batch.empty()) throw std::invalid_argument("VictimOracle: empty batch");
  std::lock_guard<std::mutex> lock(mu_);

  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (const auto& im : batch) ids.push_back(im.id);
  if (!ledger_.try_debit(phase, batch.size(), std::move(ids))) {
    throw BudgetExceeded("query refused: batch of " + std::to_string(batch.size()) +
                         " exceeds remaining budget " + std::to_string(ledger_.remaining()));
  }

  std::vector<ProbVector> probs = model_.predict(batch);
  std::vector<Label> out;
  out.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    ProbVector adjusted = defense_ ? defense_->adjust(probs[i], batch[i]) : probs[i];
    switch (config_.mode) {
      case OracleMode::soft:
        out.emplace_back(std::move(adjusted));
        break;
      case OracleMode::topk:
        out.emplace_back(truncate_topk(adjusted, config_.k));
        break;
      case OracleMode::hard:
        out.emplace_back(truncate_hard(adjusted));
        break;
    }
  }
  return out;
}

}  // namespace bbsteal

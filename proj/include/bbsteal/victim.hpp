#ifndef BBSTEAL_VICTIM_HPP
#define BBSTEAL_VICTIM_HPP

#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/defense.hpp"
#include "bbsteal/ledger.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

enum class OracleMode { soft, topk, hard };

OracleMode oracle_mode_from_name(const std::string& s);
const char* oracle_mode_name(OracleMode m);

struct OracleConfig {
  OracleMode mode = OracleMode::hard;
  int k = 0;  // for topk
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

// Black-box face of the victim. Every query runs defense -> truncation ->
// ledger debit as one serialized step; a batch that does not fit the
// remaining budget is refused whole, with no state change and no results.
// Only outputs escape this class.
class VictimOracle {
 public:
  VictimOracle(const Classifier& model, OracleConfig config, std::shared_ptr<const Defense> defense,
               QueryLedger& ledger);

  std::vector<Label> query(const std::vector<ImageTensor>& batch, const std::string& phase);

  const OracleConfig& config() const { return config_; }
  int num_classes() const { return model_.num_classes(); }
  const QueryLedger& ledger() const { return ledger_; }

 private:
  const Classifier& model_;
  OracleConfig config_;
  std::shared_ptr<const Defense> defense_;
  QueryLedger& ledger_;
  std::mutex mu_;
};

}  // namespace bbsteal

#endif  // BBSTEAL_VICTIM_HPP

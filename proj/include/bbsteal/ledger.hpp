#ifndef BBSTEAL_LEDGER_HPP
#define BBSTEAL_LEDGER_HPP

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace bbsteal {

struct LedgerRecord {
  std::string phase;
  uint64_t count = 0;
  uint64_t cumulative_q = 0;
  int64_t timestamp_ms = 0;
  std::vector<std::string> sample_ids;
};

// Monotone counter of victim queries against the cap Q. The budget check is
// atomic with the debit: a refused batch leaves q untouched, and q can never
// exceed Q. The log is append-only, one record per successful batch.
class QueryLedger {
 public:
  explicit QueryLedger(uint64_t cap);

  // All-or-nothing debit. Returns true and appends a record on success;
  // returns false (state unchanged) if count would push q past Q.
  bool try_debit(const std::string& phase, uint64_t count,
                 std::vector<std::string> sample_ids = {});

  uint64_t spent() const;
  uint64_t cap() const { return cap_; }
  uint64_t remaining() const;

  std::vector<LedgerRecord> log() const;

  // Line-delimited JSON, one record per line.
  void save_log(const std::string& path) const;

  // Replays a persisted log into this (fresh) ledger.
  void replay_log(const std::string& path);

 private:
  mutable std::mutex mu_;
  uint64_t q_ = 0;
  uint64_t cap_;
  std::vector<LedgerRecord> log_;
};

}  // namespace bbsteal

#endif  // BBSTEAL_LEDGER_HPP

#include "bbsteal/ledger.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bbsteal {

namespace {
int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}
}  // namespace

QueryLedger::QueryLedger(uint64_t cap) : cap_(cap) {
  if (cap == 0) throw std::invalid_argument("QueryLedger: cap must be positive");
}

bool QueryLedger::try_debit(const std::string& phase, uint64_t count,
                            std::vector<std::string> sample_ids) {
  std::lock_guard<std::mutex> lock(mu_);
  if (count == 0) return true;
  if (q_ + count > cap_) return false;
  q_ += count;
  LedgerRecord rec;
  rec.phase = phase;
  rec.count = count;
  rec.cumulative_q = q_;
  rec.timestamp_ms = now_ms();
  rec.sample_ids = std::move(sample_ids);
  log_.push_back(std::move(rec));
  return true;
}

uint64_t QueryLedger::spent() const {
  std::lock_guard<std::mutex> lock(mu_);
  return q_;
}

uint64_t QueryLedger::remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cap_ - q_;
}

std::vector<LedgerRecord> QueryLedger::log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

void QueryLedger::save_log(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("QueryLedger: cannot write " + path);
  for (const auto& rec : log_) {
    nlohmann::json j;
    j["phase"] = rec.phase;
    j["count"] = rec.count;
    j["q"] = rec.cumulative_q;
    j["t_ms"] = rec.timestamp_ms;
    j["ids"] = rec.sample_ids;
    out << j.dump() << '\n';
  }
}

void QueryLedger::replay_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("QueryLedger: cannot read " + path);
  std::lock_guard<std::mutex> lock(mu_);
  if (q_ != 0 || !log_.empty()) throw std::logic_error("QueryLedger: replay into a used ledger");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    LedgerRecord rec;
    rec.phase = j.at("phase").get<std::string>();
    rec.count = j.at("count").get<uint64_t>();
    rec.cumulative_q = j.at("q").get<uint64_t>();
    rec.timestamp_ms = j.at("t_ms").get<int64_t>();
    rec.sample_ids = j.at("ids").get<std::vector<std::string>>();
    if (rec.cumulative_q != q_ + rec.count || rec.cumulative_q > cap_) {
      throw std::runtime_error("QueryLedger: corrupt log at " + path);
    }
    q_ = rec.cumulative_q;
    log_.push_back(std::move(rec));
  }
}

}  // namespace bbsteal

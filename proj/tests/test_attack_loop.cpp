#include <doctest.h>

#include "bbsteal/attack.hpp"
#include "bbsteal/dataset.hpp"
#include "bbsteal/metrics.hpp"
#include "bbsteal/truncation.hpp"
#include "helpers.hpp"

using namespace bbsteal;

namespace {

struct MiniWorld {
  Classifier victim;
  SampleSet pool;
  LabeledData test;
  std::vector<HardLabel> victim_labels;

  EvalFn eval() {
    return [this](const Classifier& substitute) {
      const auto probs = substitute.predict(test.images);
      std::vector<HardLabel> preds;
      preds.reserve(probs.size());
      for (const auto& p : probs) preds.push_back(truncate_hard(p));
      return std::make_pair(agreement(preds, victim_labels), accuracy(preds, test.labels));
    };
  }
};

MiniWorld make_world(int pool_n = 120) {
  MiniWorld w;
  w.victim = Classifier("smallcnn", Dims{3, 16, 16}, 10, 1001);
  // an untrained victim still gives consistent labels; training here would
  // only slow the loop tests down
  auto imgs = make_mixed_pool(pool_n, 7, 16);
  for (auto& im : imgs) {
    Sample s;
    s.image = std::move(im);
    s.provenance = Provenance::unlabeled;
    w.pool.add(std::move(s));
  }
  w.test = make_shapes_data(40, 8, 16);
  const auto probs = w.victim.predict(w.test.images);
  for (const auto& p : probs) w.victim_labels.push_back(truncate_hard(p));
  return w;
}

AttackConfig mini_config(uint64_t seed) {
  AttackConfig cfg;
  cfg.strategy = SamplerKind::random;
  cfg.budgets = {20, 40};
  cfg.step1_fraction = 0.5;
  cfg.erase_reps = 2;
  cfg.cam_erasing = true;
  cfg.self_kd = true;
  cfg.substitute_arch = "smallcnn";
  cfg.train.epochs = 2;
  cfg.train.base_lr = 0.02;
  cfg.train.batch_size = 16;
  cfg.train.lr_decay_period = 2;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("run_attack: budget accounting, provenance, trace shape") {
  MiniWorld w = make_world();
  QueryLedger ledger(40);
  VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
  const AttackConfig cfg = mini_config(5);

  AttackResult result = run_attack(cfg, oracle, w.pool, w.eval());
  CHECK(result.completed);
  REQUIRE(result.trace.size() == 2);
  CHECK(result.trace[0].q == 20);
  CHECK(result.trace[1].q == 40);
  CHECK(ledger.spent() == 40);

  // hard mode: every D_T and D_E label is a hard label; q == |D_T| + |D_E|
  CHECK(result.trace[1].dt_size + result.trace[1].de_size == 40);
  // pseudo labels never consume budget
  CHECK(result.trace[1].dp_size > 0);

  uint64_t from_log = 0;
  for (const auto& rec : ledger.log()) from_log += rec.count;
  CHECK(from_log == 40);

  // metrics are fractions
  for (const auto& tp : result.trace) {
    CHECK(tp.agreement >= 0.0);
    CHECK(tp.agreement <= 1.0);
    CHECK(tp.accuracy >= 0.0);
    CHECK(tp.accuracy <= 1.0);
  }
}

TEST_CASE("run_attack: deterministic for a fixed seed, different across seeds") {
  MiniWorld w = make_world();
  auto run_once = [&](uint64_t seed) {
    QueryLedger ledger(40);
    VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
    return run_attack(mini_config(seed), oracle, w.pool, w.eval());
  };
  const AttackResult a = run_once(5);
  const AttackResult b = run_once(5);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].agreement == b.trace[i].agreement);
    CHECK(a.trace[i].accuracy == b.trace[i].accuracy);
    CHECK(a.trace[i].q == b.trace[i].q);
  }
  for (size_t p = 0; p < a.substitute.net().params.size(); ++p) {
    CHECK(a.substitute.net().params[p].v == b.substitute.net().params[p].v);
  }
  const AttackResult c = run_once(6);
  bool any_diff = false;
  for (size_t i = 0; i < a.trace.size(); ++i) {
    if (a.trace[i].agreement != c.trace[i].agreement) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("run_attack: hard-label provenance invariant via the state hook") {
  MiniWorld w = make_world();
  QueryLedger ledger(40);
  VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
  bool checked = false;
  IterationHook hook = [&](const AttackState& st, const Classifier&) {
    for (const Sample& s : st.transfer_set.items()) {
      CHECK(s.provenance == Provenance::transfer);
      CHECK(has_hard_label(s.label));
    }
    for (const Sample& s : st.erased_set.items()) {
      CHECK(s.provenance == Provenance::erased);
      CHECK(has_hard_label(s.label));
    }
    for (const Sample& s : st.pseudo_set.items()) {
      CHECK(s.provenance == Provenance::pseudo);
      CHECK(has_prob_label(s.label));
    }
    checked = true;
  };
  run_attack(mini_config(7), oracle, w.pool, w.eval(), nullptr, hook);
  CHECK(checked);
}

TEST_CASE("run_attack: cam_erasing off + self_kd off spends everything in step 1") {
  MiniWorld w = make_world();
  QueryLedger ledger(40);
  VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
  AttackConfig cfg = mini_config(9);
  cfg.cam_erasing = false;
  cfg.self_kd = false;
  const AttackResult result = run_attack(cfg, oracle, w.pool, w.eval());
  CHECK(result.completed);
  CHECK(result.trace.back().dt_size == 40);
  CHECK(result.trace.back().de_size == 0);
  CHECK(result.trace.back().dp_size == 0);
}

TEST_CASE("run_attack: pool exhaustion terminates cleanly with a partial trace") {
  MiniWorld w = make_world(24);  // schedule wants 40 queries; pool has 24
  QueryLedger ledger(40);
  VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
  AttackConfig cfg = mini_config(11);
  cfg.cam_erasing = false;  // force all budget through the pool
  cfg.self_kd = false;
  const AttackResult result = run_attack(cfg, oracle, w.pool, w.eval());
  CHECK_FALSE(result.completed);
  CHECK(result.stop_reason == "pool_exhausted");
  CHECK(!result.trace.empty());
  CHECK(ledger.spent() == 24);
}

TEST_CASE("run_attack: resume from a mid-run snapshot reproduces the full run") {
  MiniWorld w = make_world();

  // uninterrupted reference
  QueryLedger ledger_a(40);
  VictimOracle oracle_a(w.victim, {OracleMode::hard, 0}, nullptr, ledger_a);
  const AttackResult full = run_attack(mini_config(13), oracle_a, w.pool, w.eval());

  // capture the state after iteration 0, then resume in a fresh context
  QueryLedger ledger_b(40);
  VictimOracle oracle_b(w.victim, {OracleMode::hard, 0}, nullptr, ledger_b);
  AttackState snapshot;
  bool grabbed = false;
  IterationHook grab = [&](const AttackState& st, const Classifier& sub) {
    if (!grabbed) {
      snapshot = st;
      snapshot.substitute = sub;
      snapshot.has_substitute = true;
      grabbed = true;
    }
  };
  AttackConfig cfg = mini_config(13);
  {
    // run only the first iteration by shrinking the ledger through budgets
    AttackConfig first = cfg;
    first.budgets = {20};
    QueryLedger ledger_first(20);
    VictimOracle oracle_first(w.victim, {OracleMode::hard, 0}, nullptr, ledger_first);
    run_attack(first, oracle_first, w.pool, w.eval(), nullptr, grab);
  }
  REQUIRE(grabbed);
  // replay the spent budget into the fresh ledger, as the experiment layer
  // does when it reloads the ledger log
  ledger_b.try_debit("step1", 10);
  ledger_b.try_debit("step2.1", 10);

  AttackState resume = snapshot;
  const AttackResult tail = run_attack(cfg, oracle_b, w.pool, w.eval(), &resume);
  REQUIRE(tail.trace.size() == full.trace.size());
  CHECK(tail.trace.back().agreement == full.trace.back().agreement);
  CHECK(tail.trace.back().accuracy == full.trace.back().accuracy);
  CHECK(tail.trace.back().q == full.trace.back().q);
  for (size_t p = 0; p < full.substitute.net().params.size(); ++p) {
    CHECK(tail.substitute.net().params[p].v == full.substitute.net().params[p].v);
  }
}

TEST_CASE("run_attack: rejects a ledger whose cap is not the last budget") {
  MiniWorld w = make_world();
  QueryLedger ledger(99);
  VictimOracle oracle(w.victim, {OracleMode::hard, 0}, nullptr, ledger);
  CHECK_THROWS(run_attack(mini_config(1), oracle, w.pool, w.eval()));
}

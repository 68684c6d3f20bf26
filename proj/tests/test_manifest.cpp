#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bbsteal/checkpoint.hpp"
#include "bbsteal/experiment.hpp"
#include "helpers.hpp"

using namespace bbsteal;
namespace fs = std::filesystem;

namespace {

// a manifest tiny enough for in-test end-to-end runs
ExperimentManifest tiny_manifest() {
  ExperimentManifest m = default_manifest();
  m.name = "tiny";
  m.seeds = {4};
  m.victim_data = {"shapes", 150, 77, ""};
  m.test_data = {"shapes", 40, 99, ""};
  m.pool_data = {"shapes-mixed", 120, 88, ""};
  m.victim_train.epochs = 4;
  m.victim_train.lr_decay_period = 2;
  m.attack.budgets = {20, 40};
  m.attack.erase_reps = 2;
  m.attack.train.epochs = 2;
  m.attack.train.lr_decay_period = 2;
  m.attack.train.batch_size = 16;
  m.pgd.max_samples = 10;
  return m;
}

}  // namespace

TEST_CASE("manifest: serialize/parse round-trip is bit-identical") {
  const ExperimentManifest m = default_manifest();
  const std::string text = manifest_to_json_text(m);
  const ExperimentManifest parsed = manifest_from_json_text(text);
  CHECK(manifest_to_json_text(parsed) == text);

  // defense variants survive the round trip too
  ExperimentManifest d = m;
  d.defense.kind = "misinformation";
  d.defense.tau = 0.9;
  const std::string dt = manifest_to_json_text(d);
  CHECK(manifest_to_json_text(manifest_from_json_text(dt)) == dt);

  ExperimentManifest p = m;
  p.defense.kind = "poisoning";
  p.defense.eps = 0.8;
  const std::string pt = manifest_to_json_text(p);
  CHECK(manifest_to_json_text(manifest_from_json_text(pt)) == pt);
}

TEST_CASE("manifest: validation rejects bad values") {
  ExperimentManifest m = default_manifest();
  m.seeds.clear();
  CHECK_THROWS(m.validate());
  m = default_manifest();
  m.victim_arch = "alexnet";
  CHECK_THROWS(m.validate());
  m = default_manifest();
  m.attack.budgets = {100, 100};
  CHECK_THROWS(m.validate());
  m = default_manifest();
  m.defense.kind = "watermark";
  CHECK_THROWS(m.validate());
}

TEST_CASE("run_experiment: deterministic traces, artifacts, resume equivalence") {
  const fs::path dir_a = "exp_test_a";
  const fs::path dir_b = "exp_test_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const ExperimentManifest m = tiny_manifest();

  const auto out_a = run_experiment(m, dir_a.string());
  const auto out_b = run_experiment(m, dir_b.string());
  REQUIRE(out_a.count(4) == 1);
  REQUIRE(out_b.count(4) == 1);
  const auto& ta = out_a.at(4).trace;
  const auto& tb = out_b.at(4).trace;
  REQUIRE(ta.size() == tb.size());
  for (size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].agreement == tb[i].agreement);
    CHECK(ta[i].accuracy == tb[i].accuracy);
    CHECK(ta[i].q == tb[i].q);
  }

  // identical trace files on disk
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir_a / "seed_4" / "trace.jsonl") == slurp(dir_b / "seed_4" / "trace.jsonl"));
  CHECK(fs::exists(dir_a / "victim" / "victim.ckpt"));
  CHECK(fs::exists(dir_a / "seed_4" / "substitute_final.ckpt"));
  CHECK(fs::exists(dir_a / "manifest.json"));
  CHECK(fs::exists(dir_a / "seed_4" / "ledger.jsonl"));

  // resume: truncate to the first iteration's snapshot and rerun
  const fs::path state_path = dir_b / "seed_4" / "state" / "last_state.bin";
  REQUIRE(fs::exists(state_path));
  AttackState st = load_attack_state(state_path.string());
  REQUIRE(st.next_iteration == 2);
  // rewind the saved state to iteration 1 is not possible once finished, so
  // emulate an interrupted run: keep only iteration 0 artifacts
  {
    AttackState cut = st;
    cut.next_iteration = 1;
    cut.trace.resize(1);
    // D_T and D_E grew in iteration 1; an interrupted run would have saved the
    // iteration-0 state. Rebuild it by rerunning with a one-entry schedule.
    ExperimentManifest first = m;
    first.attack.budgets = {m.attack.budgets[0]};
    const fs::path dir_c = "exp_test_c";
    fs::remove_all(dir_c);
    run_experiment(first, dir_c.string());
    AttackState st1 = load_attack_state((dir_c / "seed_4" / "state" / "last_state.bin").string());
    CHECK(st1.next_iteration == 1);
    // plant the truncated artifacts into dir_b and resume
    save_attack_state(state_path.string(), st1);
    fs::copy_file(dir_c / "seed_4" / "ledger.jsonl", dir_b / "seed_4" / "ledger.jsonl",
                  fs::copy_options::overwrite_existing);
    fs::remove_all(dir_c);
  }
  const auto resumed = run_experiment(m, dir_b.string(), /*resume=*/true);
  const auto& tr = resumed.at(4).trace;
  REQUIRE(tr.size() == ta.size());
  for (size_t i = 0; i < ta.size(); ++i) {
    CHECK(tr[i].agreement == ta[i].agreement);
    CHECK(tr[i].accuracy == ta[i].accuracy);
    CHECK(tr[i].q == ta[i].q);
  }

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("run_experiment: ablation flags land in the manifest copy") {
  const fs::path dir = "exp_test_ablate";
  fs::remove_all(dir);
  ExperimentManifest m = tiny_manifest();
  m.name = "no-self-kd";
  m.attack.self_kd = false;
  m.attack.budgets = {20};
  run_experiment(m, dir.string());
  const ExperimentManifest reloaded = load_manifest((dir / "manifest.json").string());
  CHECK(reloaded.name == "no-self-kd");
  CHECK_FALSE(reloaded.attack.self_kd);
  CHECK(reloaded.attack.cam_erasing);
  fs::remove_all(dir);
}

TEST_CASE("degradation sweep: k = N reproduces the soft run, k = 1 the hard run") {
  // direct library-level check of the truncation-identity plumbing: the same
  // attack under topk(N), soft, topk(1) and hard oracles
  ExperimentManifest base = tiny_manifest();
  base.attack.budgets = {16};
  base.attack.train.epochs = 2;
  base.pool_data.n = 60;
  base.test_data.n = 24;
  base.victim_data.n = 120;
  base.victim_train.epochs = 3;

  auto run_mode = [&](OracleMode mode, int k, const fs::path& dir) {
    fs::remove_all(dir);
    ExperimentManifest m = base;
    m.oracle.mode = mode;
    m.oracle.k = k;
    const auto out = run_experiment(m, dir.string());
    return out.at(4).trace;
  };

  const auto soft = run_mode(OracleMode::soft, 0, "exp_mode_soft");
  const auto topn = run_mode(OracleMode::topk, 10, "exp_mode_topn");
  const auto hard = run_mode(OracleMode::hard, 0, "exp_mode_hard");
  const auto top1 = run_mode(OracleMode::topk, 1, "exp_mode_top1");

  REQUIRE(soft.size() == topn.size());
  for (size_t i = 0; i < soft.size(); ++i) {
    CHECK(soft[i].agreement == topn[i].agreement);
    CHECK(soft[i].accuracy == topn[i].accuracy);
  }
  REQUIRE(hard.size() == top1.size());
  for (size_t i = 0; i < hard.size(); ++i) {
    CHECK(hard[i].agreement == top1[i].agreement);
    CHECK(hard[i].accuracy == top1[i].accuracy);
  }
  for (const char* d : {"exp_mode_soft", "exp_mode_topn", "exp_mode_hard", "exp_mode_top1"}) {
    fs::remove_all(d);
  }
}

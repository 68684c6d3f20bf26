#include "bbsteal/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "bbsteal/checkpoint.hpp"
#include "bbsteal/metrics.hpp"
#include "bbsteal/truncation.hpp"

namespace fs = std::filesystem;

namespace bbsteal {

LabeledData build_labeled_dataset(const DatasetSpec& spec, int hw, const std::string& tag) {
  if (spec.kind == "shapes") return make_shapes_data(spec.n, spec.seed, hw, tag);
  if (spec.kind == "file") return load_labeled_data(spec.path);
  throw std::invalid_argument("build_labeled_dataset: unsupported kind " + spec.kind);
}

SampleSet build_pool(const DatasetSpec& spec, int hw) {
  std::vector<ImageTensor> imgs;
  if (spec.kind == "shapes-mixed") {
    imgs = make_mixed_pool(spec.n, spec.seed, hw);
  } else if (spec.kind == "shapes") {
    imgs = make_shapes_data(spec.n, spec.seed, hw, "pool-shapes").images;
  } else if (spec.kind == "file") {
    imgs = load_labeled_data(spec.path).images;
  } else {
    throw std::invalid_argument("build_pool: unsupported kind " + spec.kind);
  }
  SampleSet pool;
  for (auto& im : imgs) {
    Sample s;
    s.image = std::move(im);
    s.provenance = Provenance::unlabeled;
    pool.add(std::move(s));
  }
  return pool;
}

namespace {

std::vector<TrainItem> labeled_items(const LabeledData& data) {
  std::vector<TrainItem> items(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    items[i] = TrainItem{&data.images[i].data, &data.labels[i].onehot};
  }
  return items;
}

double eval_accuracy(const Classifier& model, const LabeledData& data) {
  std::vector<ProbVector> probs = model.predict(data.images);
  std::vector<HardLabel> preds;
  preds.reserve(probs.size());
  for (const auto& p : probs) preds.push_back(truncate_hard(p));
  return accuracy(preds, data.labels);
}

}  // namespace

VictimBundle prepare_victim(const ExperimentManifest& m, const std::string& out_dir) {
  m.validate();
  const fs::path vdir = fs::path(out_dir) / "victim";
  fs::create_directories(vdir);
  const Dims in = {3, m.image_hw, m.image_hw};

  const fs::path vckpt = m.victim_checkpoint.empty() ? vdir / "victim.ckpt"
                                                     : fs::path(m.victim_checkpoint);
  VictimBundle bundle;
  LabeledData train_data;  // built lazily
  auto victim_train_data = [&]() -> LabeledData& {
    if (train_data.size() == 0) {
      train_data = build_labeled_dataset(m.victim_data, m.image_hw, "victim-train");
    }
    return train_data;
  };

  if (fs::exists(vckpt)) {
    bundle.victim = load_classifier(vckpt.string());
  } else {
    if (!m.victim_checkpoint.empty()) {
      throw std::runtime_error("prepare_victim: missing victim checkpoint " + vckpt.string() +
                               " (train it first or drop victim.checkpoint from the manifest)");
    }
    Classifier victim(m.victim_arch, in, m.classes, m.victim_train.seed);
    fit(victim, labeled_items(victim_train_data()), m.victim_train);
    save_classifier(vckpt.string(), victim);
    bundle.victim = std::move(victim);
  }

  const LabeledData test = build_labeled_dataset(m.test_data, m.image_hw, "test");
  bundle.victim_test_accuracy = eval_accuracy(bundle.victim, test);

  if (m.defense.kind == "misinformation") {
    const fs::path mckpt = vdir / "misinfo.ckpt";
    Classifier misinfo;
    if (fs::exists(mckpt)) {
      misinfo = load_classifier(mckpt.string());
    } else {
      TrainConfig cfg = m.defense.misinfo_train;
      misinfo = Classifier(m.victim_arch, in, m.classes, cfg.seed);
      train_misinformation_model(misinfo, labeled_items(victim_train_data()), cfg);
      save_classifier(mckpt.string(), misinfo);
    }
    bundle.defense = std::make_shared<MisinformationDefense>(std::move(misinfo), m.defense.nu,
                                                             m.defense.tau);
  } else if (m.defense.kind == "poisoning") {
    PoisonConfig cfg;
    cfg.eps = m.defense.eps;
    cfg.steps = m.defense.steps;
    cfg.step_size = m.defense.step_size;
    cfg.scope = m.defense.scope == "all" ? PoisonScope::all_params : PoisonScope::last_layer;
    Classifier surrogate;
    if (m.defense.surrogate == "victim") {
      surrogate = bundle.victim;
    } else if (m.defense.surrogate.rfind("fresh:", 0) == 0) {
      const uint64_t seed = std::stoull(m.defense.surrogate.substr(6));
      surrogate = Classifier(m.victim_arch, in, m.classes, seed);
    } else {
      throw std::invalid_argument("prepare_victim: bad poisoning surrogate spec");
    }
    bundle.defense = std::make_shared<PoisoningDefense>(std::move(surrogate), cfg);
  }
  return bundle;
}

void save_trace(const std::string& path, const std::vector<TracePoint>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace: cannot write " + path);
  for (const TracePoint& tp : trace) {
    nlohmann::ordered_json j;
    j["iteration"] = tp.iteration;
    j["q"] = tp.q;
    j["agreement"] = tp.agreement;
    j["accuracy"] = tp.accuracy;
    j["dt"] = tp.dt_size;
    j["de"] = tp.de_size;
    j["dp"] = tp.dp_size;
    out << j.dump() << '\n';
  }
}

std::vector<TracePoint> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace: cannot read " + path);
  std::vector<TracePoint> trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    TracePoint tp;
    tp.iteration = j.at("iteration").get<int>();
    tp.q = j.at("q").get<uint64_t>();
    tp.agreement = j.at("agreement").get<double>();
    tp.accuracy = j.at("accuracy").get<double>();
    tp.dt_size = j.at("dt").get<size_t>();
    tp.de_size = j.at("de").get<size_t>();
    tp.dp_size = j.at("dp").get<size_t>();
    trace.push_back(tp);
  }
  return trace;
}

std::map<uint64_t, RunOutcome> run_experiment(const ExperimentManifest& m,
                                              const std::string& out_dir, bool resume) {
  m.validate();
  fs::create_directories(out_dir);
  save_manifest((fs::path(out_dir) / "manifest.json").string(), m);

  VictimBundle bundle = prepare_victim(m, out_dir);
  const LabeledData test = build_labeled_dataset(m.test_data, m.image_hw, "test");
  const SampleSet pool = build_pool(m.pool_data, m.image_hw);

  // evaluation-time victim labels (out of protocol, no ledger)
  std::vector<HardLabel> victim_labels;
  {
    std::vector<ProbVector> probs = bundle.victim.predict(test.images);
    victim_labels.reserve(probs.size());
    for (const auto& p : probs) victim_labels.push_back(truncate_hard(p));
  }

  std::map<uint64_t, RunOutcome> outcomes;
  for (uint64_t seed : m.seeds) {
    const fs::path run_dir = fs::path(out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(run_dir / "state");
    const std::string state_path = (run_dir / "state" / "last_state.bin").string();
    const std::string ledger_path = (run_dir / "ledger.jsonl").string();
    const std::string trace_path = (run_dir / "trace.jsonl").string();

    QueryLedger ledger(m.attack.budgets.back());
    AttackState state;
    bool have_state = false;
    if (resume && fs::exists(state_path) && fs::exists(ledger_path)) {
      state = load_attack_state(state_path);
      ledger.replay_log(ledger_path);
      have_state = true;
    }

    VictimOracle oracle(bundle.victim, m.oracle, bundle.defense, ledger);

    AttackConfig cfg = m.attack;
    cfg.seed = seed;
    cfg.train.seed = seed;  // per-pass seeds derive from (seed, iteration)

    EvalFn eval = [&](const Classifier& substitute) {
      std::vector<ProbVector> probs = substitute.predict(test.images);
      std::vector<HardLabel> preds;
      preds.reserve(probs.size());
      for (const auto& p : probs) preds.push_back(truncate_hard(p));
      return std::make_pair(agreement(preds, victim_labels), accuracy(preds, test.labels));
    };

    IterationHook hook = [&](const AttackState& st, const Classifier& substitute) {
      save_trace(trace_path, st.trace);
      ledger.save_log(ledger_path);
      AttackState to_save = st;
      to_save.substitute = substitute;
      to_save.has_substitute = true;
      save_attack_state(state_path, to_save);
    };

    AttackResult result =
        run_attack(cfg, oracle, pool, eval, have_state ? &state : nullptr, hook);

    save_trace(trace_path, result.trace);
    ledger.save_log(ledger_path);
    save_classifier((run_dir / "substitute_final.ckpt").string(), result.substitute);

    RunOutcome outcome;
    outcome.trace = result.trace;
    outcome.completed = result.completed;
    outcome.stop_reason = result.stop_reason;
    outcomes[seed] = std::move(outcome);
  }

  // victim-side reference numbers for the report
  {
    nlohmann::ordered_json j;
    j["victim_test_accuracy"] = bundle.victim_test_accuracy;
    j["defense"] = m.defense.kind;
    std::ofstream out((fs::path(out_dir) / "victim_eval.json").string());
    out << j.dump(2) << '\n';
  }
  return outcomes;
}

std::map<uint64_t, double> eval_transfer(const ExperimentManifest& m, const std::string& out_dir) {
  m.validate();
  VictimBundle bundle = prepare_victim(m, out_dir);
  const LabeledData test = build_labeled_dataset(m.test_data, m.image_hw, "test");

  std::map<uint64_t, double> rates;
  for (uint64_t seed : m.seeds) {
    const fs::path ckpt = fs::path(out_dir) / ("seed_" + std::to_string(seed)) /
                          "substitute_final.ckpt";
    if (!fs::exists(ckpt)) {
      throw std::runtime_error("eval_transfer: missing " + ckpt.string() +
                               " (run the attack first)");
    }
    Classifier substitute = load_classifier(ckpt.string());
    PgdConfig cfg = m.pgd;
    cfg.seed = seed;
    rates[seed] = pgd_transfer(substitute, bundle.victim, test, cfg);
  }

  std::ofstream out((fs::path(out_dir) / "transfer.csv").string());
  out << "seed,pgd_eps,pgd_steps,success_rate\n";
  for (const auto& [seed, rate] : rates) {
    out << seed << ',' << m.pgd.eps << ',' << m.pgd.steps << ',' << rate << '\n';
  }
  return rates;
}

void run_sweep(const ExperimentManifest& base, const std::string& axis,
               const std::vector<double>& values, const std::string& out_dir, bool resume) {
  if (values.empty()) throw std::invalid_argument("run_sweep: no values");
  std::vector<ExperimentManifest> runs;
  if (axis == "misinformation_tau") {
    for (double tau : values) {
      ExperimentManifest m = base;
      m.defense.kind = "misinformation";
      m.defense.tau = tau;
      m.name = base.name + "-tau" + std::to_string(tau).substr(0, 4);
      runs.push_back(std::move(m));
    }
  } else if (axis == "poisoning_eps") {
    for (double eps : values) {
      ExperimentManifest m = base;
      m.defense.kind = "poisoning";
      m.defense.eps = eps;
      m.name = base.name + "-eps" + std::to_string(eps).substr(0, 4);
      runs.push_back(std::move(m));
    }
  } else if (axis == "topk") {
    for (double kv : values) {
      ExperimentManifest m = base;
      m.oracle.mode = OracleMode::topk;
      m.oracle.k = static_cast<int>(kv);
      m.name = base.name + "-top" + std::to_string(m.oracle.k);
      runs.push_back(std::move(m));
    }
    ExperimentManifest hard = base;
    hard.oracle.mode = OracleMode::hard;
    hard.name = base.name + "-hard";
    runs.push_back(std::move(hard));
  } else {
    throw std::invalid_argument("run_sweep: unknown axis " + axis);
  }

  for (const ExperimentManifest& m : runs) {
    const std::string sub = (fs::path(out_dir) / m.name).string();
    std::cout << "[sweep] " << m.name << "\n";
    run_experiment(m, sub, resume);
  }
}

}  // namespace bbsteal

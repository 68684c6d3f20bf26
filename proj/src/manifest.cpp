#include "bbsteal/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bbsteal {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json train_to_json(const TrainConfig& t) {
  ordered_json j;
  j["epochs"] = t.epochs;
  j["base_lr"] = t.base_lr;
  j["scale_lr_by_batch"] = t.scale_lr_by_batch;
  j["lr_decay_factor"] = t.lr_decay_factor;
  j["lr_decay_period"] = t.lr_decay_period;
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["batch_size"] = t.batch_size;
  return j;
}

TrainConfig train_from_json(const ordered_json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.base_lr = j.at("base_lr").get<double>();
  t.scale_lr_by_batch = j.at("scale_lr_by_batch").get<bool>();
  t.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  t.lr_decay_period = j.at("lr_decay_period").get<int>();
  t.momentum = j.at("momentum").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.validate();
  return t;
}

ordered_json dataset_to_json(const DatasetSpec& d) {
  ordered_json j;
  j["kind"] = d.kind;
  j["n"] = d.n;
  j["seed"] = d.seed;
  if (!d.path.empty()) j["path"] = d.path;
  return j;
}

DatasetSpec dataset_from_json(const ordered_json& j) {
  DatasetSpec d;
  d.kind = j.at("kind").get<std::string>();
  d.n = j.at("n").get<int>();
  d.seed = j.at("seed").get<uint64_t>();
  if (j.contains("path")) d.path = j.at("path").get<std::string>();
  if (d.kind != "shapes" && d.kind != "shapes-mixed" && d.kind != "file") {
    throw std::invalid_argument("manifest: unknown dataset kind " + d.kind);
  }
  return d;
}

}  // namespace

void ExperimentManifest::validate() const {
  if (seeds.empty()) throw std::invalid_argument("manifest: needs at least one seed");
  if (classes < 2) throw std::invalid_argument("manifest: classes must be >= 2");
  if (image_hw < 12) throw std::invalid_argument("manifest: image_hw too small");
  if (!is_known_arch(victim_arch)) throw std::invalid_argument("manifest: bad victim arch");
  if (!is_known_arch(attack.substitute_arch)) {
    throw std::invalid_argument("manifest: bad substitute arch");
  }
  if (oracle.mode == OracleMode::topk && (oracle.k < 1 || oracle.k > classes)) {
    throw std::invalid_argument("manifest: top-k out of range");
  }
  if (defense.kind != "none" && defense.kind != "misinformation" && defense.kind != "poisoning") {
    throw std::invalid_argument("manifest: unknown defense kind " + defense.kind);
  }
  victim_train.validate();
  attack.validate();
}

std::string manifest_to_json_text(const ExperimentManifest& m) {
  ordered_json j;
  j["name"] = m.name;
  j["seeds"] = m.seeds;
  j["classes"] = m.classes;
  j["image_hw"] = m.image_hw;

  ordered_json victim;
  victim["arch"] = m.victim_arch;
  victim["data"] = dataset_to_json(m.victim_data);
  victim["train"] = train_to_json(m.victim_train);
  if (!m.victim_checkpoint.empty()) victim["checkpoint"] = m.victim_checkpoint;
  victim["mode"] = oracle_mode_name(m.oracle.mode);
  if (m.oracle.mode == OracleMode::topk) victim["k"] = m.oracle.k;

  ordered_json defense;
  defense["kind"] = m.defense.kind;
  if (m.defense.kind == "misinformation") {
    defense["nu"] = m.defense.nu;
    defense["tau"] = m.defense.tau;
    defense["train"] = train_to_json(m.defense.misinfo_train);
  } else if (m.defense.kind == "poisoning") {
    defense["eps"] = m.defense.eps;
    defense["steps"] = m.defense.steps;
    defense["step_size"] = m.defense.step_size;
    defense["scope"] = m.defense.scope;
    defense["surrogate"] = m.defense.surrogate;
  }
  victim["defense"] = defense;
  j["victim"] = victim;

  j["pool"] = dataset_to_json(m.pool_data);
  j["test"] = dataset_to_json(m.test_data);

  ordered_json attack;
  attack["strategy"] = sampler_name(m.attack.strategy);
  attack["budgets"] = m.attack.budgets;
  attack["step1_fraction"] = m.attack.step1_fraction;
  attack["erase_reps"] = m.attack.erase_reps;
  ordered_json erase;
  erase["area_lo"] = m.attack.erase_params.area_lo;
  erase["area_hi"] = m.attack.erase_params.area_hi;
  erase["aspect_lo"] = m.attack.erase_params.aspect_lo;
  erase["aspect_hi"] = m.attack.erase_params.aspect_hi;
  attack["erase"] = erase;
  attack["cam_erasing"] = m.attack.cam_erasing;
  attack["self_kd"] = m.attack.self_kd;
  attack["substitute_arch"] = m.attack.substitute_arch;
  attack["train"] = train_to_json(m.attack.train);
  j["attack"] = attack;

  ordered_json pgd;
  pgd["eps"] = m.pgd.eps;
  pgd["step_size"] = m.pgd.step_size;
  pgd["steps"] = m.pgd.steps;
  pgd["max_samples"] = m.pgd.max_samples;
  j["pgd"] = pgd;

  return j.dump(2) + "\n";
}

ExperimentManifest manifest_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  ExperimentManifest m;
  m.name = j.at("name").get<std::string>();
  m.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  m.classes = j.at("classes").get<int>();
  m.image_hw = j.at("image_hw").get<int>();

  const ordered_json& victim = j.at("victim");
  m.victim_arch = victim.at("arch").get<std::string>();
  m.victim_data = dataset_from_json(victim.at("data"));
  m.victim_train = train_from_json(victim.at("train"));
  if (victim.contains("checkpoint")) m.victim_checkpoint = victim.at("checkpoint").get<std::string>();
  m.oracle.mode = oracle_mode_from_name(victim.at("mode").get<std::string>());
  if (m.oracle.mode == OracleMode::topk) m.oracle.k = victim.at("k").get<int>();

  const ordered_json& defense = victim.at("defense");
  m.defense.kind = defense.at("kind").get<std::string>();
  if (m.defense.kind == "misinformation") {
    m.defense.nu = defense.at("nu").get<double>();
    m.defense.tau = defense.at("tau").get<double>();
    m.defense.misinfo_train = train_from_json(defense.at("train"));
  } else if (m.defense.kind == "poisoning") {
    m.defense.eps = defense.at("eps").get<double>();
    m.defense.steps = defense.at("steps").get<int>();
    m.defense.step_size = defense.at("step_size").get<double>();
    m.defense.scope = defense.at("scope").get<std::string>();
    m.defense.surrogate = defense.at("surrogate").get<std::string>();
  }

  m.pool_data = dataset_from_json(j.at("pool"));
  m.test_data = dataset_from_json(j.at("test"));

  const ordered_json& attack = j.at("attack");
  m.attack.strategy = sampler_from_name(attack.at("strategy").get<std::string>());
  m.attack.budgets = attack.at("budgets").get<std::vector<uint64_t>>();
  m.attack.step1_fraction = attack.at("step1_fraction").get<double>();
  m.attack.erase_reps = attack.at("erase_reps").get<int>();
  const ordered_json& erase = attack.at("erase");
  m.attack.erase_params.area_lo = erase.at("area_lo").get<double>();
  m.attack.erase_params.area_hi = erase.at("area_hi").get<double>();
  m.attack.erase_params.aspect_lo = erase.at("aspect_lo").get<double>();
  m.attack.erase_params.aspect_hi = erase.at("aspect_hi").get<double>();
  m.attack.cam_erasing = attack.at("cam_erasing").get<bool>();
  m.attack.self_kd = attack.at("self_kd").get<bool>();
  m.attack.substitute_arch = attack.at("substitute_arch").get<std::string>();
  m.attack.train = train_from_json(attack.at("train"));

  const ordered_json& pgd = j.at("pgd");
  m.pgd.eps = pgd.at("eps").get<double>();
  m.pgd.step_size = pgd.at("step_size").get<double>();
  m.pgd.steps = pgd.at("steps").get<int>();
  m.pgd.max_samples = pgd.at("max_samples").get<int>();

  m.validate();
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_json_text(text);
}

void save_manifest(const std::string& path, const ExperimentManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_manifest: cannot write " + path);
  out << manifest_to_json_text(m);
}

ExperimentManifest default_manifest() {
  ExperimentManifest m;
  m.name = "dissect-random";
  m.seeds = {1, 2, 3};
  m.classes = 10;
  m.image_hw = 16;

  m.victim_arch = "smallcnn";
  m.victim_data = {"shapes", 2000, 77, ""};
  m.test_data = {"shapes", 600, 99, ""};
  m.pool_data = {"shapes-mixed", 4000, 88, ""};

  // paper-shaped victim schedule at desk-scale duration
  m.victim_train.epochs = 40;
  m.victim_train.base_lr = 0.05;
  m.victim_train.scale_lr_by_batch = false;
  m.victim_train.lr_decay_factor = 0.1;
  m.victim_train.lr_decay_period = 15;
  m.victim_train.momentum = 0.5;
  m.victim_train.weight_decay = 5e-4;
  m.victim_train.batch_size = 32;
  m.victim_train.seed = 4242;

  m.oracle.mode = OracleMode::hard;

  m.attack.strategy = SamplerKind::random;
  m.attack.budgets = {200, 500, 1000, 2000};
  m.attack.step1_fraction = 0.5;
  m.attack.erase_reps = 5;
  m.attack.cam_erasing = true;
  m.attack.self_kd = true;
  m.attack.substitute_arch = "smallcnn";
  m.attack.train.epochs = 30;
  m.attack.train.base_lr = 0.02;
  m.attack.train.scale_lr_by_batch = true;
  m.attack.train.lr_decay_factor = 0.1;
  m.attack.train.lr_decay_period = 10;
  m.attack.train.momentum = 0.9;
  m.attack.train.weight_decay = 5e-4;
  m.attack.train.batch_size = 32;

  m.pgd.max_samples = 300;
  return m;
}

}  // namespace bbsteal

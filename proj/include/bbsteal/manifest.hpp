#ifndef BBSTEAL_MANIFEST_HPP
#define BBSTEAL_MANIFEST_HPP

#include <optional>
#include <string>
#include <vector>

#include "bbsteal/attack.hpp"
#include "bbsteal/dataset.hpp"
#include "bbsteal/defense.hpp"
#include "bbsteal/pgd.hpp"
#include "bbsteal/victim.hpp"

namespace bbsteal {

struct DatasetSpec {
  std::string kind = "shapes";  // shapes | shapes-mixed | file
  int n = 0;
  uint64_t seed = 0;
  std::string path;  // for kind == file
};

struct DefenseSpec {
  std::string kind = "none";  // none | misinformation | poisoning
  // misinformation
  double nu = 1000.0;
  double tau = 0.7;
  TrainConfig misinfo_train;
  // poisoning
  double eps = 0.5;
  int steps = 50;
  double step_size = 0.0;  // 0 -> eps/10
  std::string scope = "last_layer";  // last_layer | all
  std::string surrogate = "victim";  // victim | fresh:<seed>
};

// Everything that determines a run: victim, pool, attack and evaluation
// settings plus the seed list. Serializes to JSON bit-identically.
struct ExperimentManifest {
  std::string name = "run";
  std::vector<uint64_t> seeds = {1};
  int classes = 10;
  int image_hw = 16;

  std::string victim_arch = "smallcnn";
  DatasetSpec victim_data;
  DatasetSpec test_data;
  DatasetSpec pool_data;
  TrainConfig victim_train;
  std::string victim_checkpoint;  // load instead of training when present

  OracleConfig oracle;
  DefenseSpec defense;

  AttackConfig attack;  // attack.seed is overridden per run seed
  PgdConfig pgd;

  void validate() const;
};

ExperimentManifest manifest_from_json_text(const std::string& text);
std::string manifest_to_json_text(const ExperimentManifest& m);
ExperimentManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const ExperimentManifest& m);

// A manifest with defaults matching the desk-scale experiment setup.
ExperimentManifest default_manifest();

}  // namespace bbsteal

#endif  // BBSTEAL_MANIFEST_HPP

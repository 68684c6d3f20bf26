#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bbsteal/experiment.hpp"
#include "bbsteal/report.hpp"

using namespace bbsteal;

int main(int argc, char** argv) {
  CLI::App app{"bbsteal: hard-label model stealing attack lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed_override = 0;
  bool seed_set = false, resume = false;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    if (need_config) {
      cmd->add_option("--config", config_path, "experiment manifest (JSON)")->required();
    }
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--seed", seed_override, "override the manifest seed list with one seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_flag("--resume", resume, "resume from the last completed iteration");
  };

  CLI::App* train_victim = app.add_subcommand("train-victim", "train the victim (and defense models)");
  add_common(train_victim, true);

  CLI::App* attack = app.add_subcommand("attack", "run the stealing attack per the manifest");
  add_common(attack, true);

  CLI::App* eval_tr = app.add_subcommand("eval-transfer", "PGD transferability of finished substitutes");
  add_common(eval_tr, true);

  CLI::App* sweep = app.add_subcommand("sweep", "run a manifest across a parameter axis");
  add_common(sweep, true);
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "misinformation_tau | poisoning_eps | topk")->required();
  sweep->add_option("--values", values, "axis values")->required();

  CLI::App* report = app.add_subcommand("report", "aggregate traces into tables and heatmaps");
  report->add_option("--out", out_dir, "directory holding run outputs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(report)) {
      emit_report(out_dir);
      std::cout << "report written to " << out_dir << "\n";
      return 0;
    }

    ExperimentManifest m = load_manifest(config_path);
    if (seed_set) m.seeds = {seed_override};

    if (app.got_subcommand(train_victim)) {
      VictimBundle bundle = prepare_victim(m, out_dir);
      std::cout << "victim test accuracy: " << bundle.victim_test_accuracy << "\n";
      if (bundle.defense) std::cout << "defense prepared: " << bundle.defense->kind() << "\n";
      return 0;
    }
    if (app.got_subcommand(attack)) {
      auto outcomes = run_experiment(m, out_dir, resume);
      for (const auto& [seed, outcome] : outcomes) {
        if (outcome.trace.empty()) {
          std::cout << "seed " << seed << ": no completed iterations\n";
          continue;
        }
        const TracePoint& tp = outcome.trace.back();
        std::cout << "seed " << seed << ": q=" << tp.q << " agreement=" << tp.agreement
                  << " accuracy=" << tp.accuracy
                  << (outcome.completed ? "" : " (stopped: " + outcome.stop_reason + ")") << "\n";
      }
      return 0;
    }
    if (app.got_subcommand(eval_tr)) {
      auto rates = eval_transfer(m, out_dir);
      for (const auto& [seed, rate] : rates) {
        std::cout << "seed " << seed << ": transfer success " << rate << "\n";
      }
      return 0;
    }
    if (app.got_subcommand(sweep)) {
      run_sweep(m, axis, values, out_dir, resume);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

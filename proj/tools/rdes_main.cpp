#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "rdes/error.hpp"
#include "rdes/harness.hpp"

namespace {

int inspect(const std::string& path) {
  const auto d = rdes::load_jsonl(path);
  std::cout << "dataset: " << d.name() << "\n";
  std::cout << "records: " << d.size() << "\n";
  std::cout << "labels:  " << d.labels().size() << "\n";
  std::map<std::string, long> histogram;
  for (const auto& e : d.examples()) ++histogram[e.label];
  for (const auto& [label, count] : histogram) {
    std::cout << "  " << label << ": " << count << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RDES: reinforcement-learning-driven demonstration selection"};
  app.require_subcommand(1);

  auto* data = app.add_subcommand("data", "dataset utilities");
  data->require_subcommand(1);
  auto* data_inspect = data->add_subcommand("inspect", "print record count and label histogram");
  std::string inspect_path;
  data_inspect->add_option("path", inspect_path, "JSONL dataset")->required();

  auto* train_cmd = app.add_subcommand("train", "train a selection policy");
  std::string train_config;
  std::string train_out = "runs/train";
  train_cmd->add_option("--config", train_config, "run config JSON")->required();
  train_cmd->add_option("--out", train_out, "output run directory");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the held-out pool");
  std::string eval_config;
  std::string eval_checkpoint;
  std::string eval_out = "runs/eval";
  eval_cmd->add_option("--config", eval_config, "run config JSON")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--out", eval_out, "output run directory");

  auto* baseline_cmd = app.add_subcommand("baseline", "run a non-learning comparison arm");
  std::string baseline_config;
  std::string baseline_kind;
  std::string baseline_out = "runs/baseline";
  baseline_cmd->add_option("--config", baseline_config, "run config JSON")->required();
  baseline_cmd->add_option("--kind", baseline_kind, "random_fs or topk_sim")->required();
  baseline_cmd->add_option("--out", baseline_out, "output run directory");

  auto* report_cmd = app.add_subcommand("report", "tabulate finished runs");
  std::vector<std::string> report_dirs;
  std::string report_csv_path;
  report_cmd->add_option("dirs", report_dirs, "run directories")->required()->expected(-1);
  report_cmd->add_option("--csv", report_csv_path, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (data_inspect->parsed()) {
      return inspect(inspect_path);
    }
    if (train_cmd->parsed()) {
      const auto cfg = rdes::load_run_config(train_config);
      const auto result = rdes::train(cfg, train_out);
      std::cout << "trained " << result.metrics.episodes
                << " episodes; accuracy=" << result.metrics.accuracy
                << " mean_diversity=" << result.metrics.mean_diversity << "\n";
      std::cout << "checkpoint: " << result.checkpoint_path.string() << "\n";
      return 0;
    }
    if (eval_cmd->parsed()) {
      const auto cfg = rdes::load_run_config(eval_config);
      const auto metrics = rdes::evaluate_file(eval_checkpoint, cfg, eval_out);
      std::cout << "evaluated " << metrics.episodes << " episodes; accuracy=" << metrics.accuracy
                << " mean_diversity=" << metrics.mean_diversity << "\n";
      return 0;
    }
    if (baseline_cmd->parsed()) {
      const auto cfg = rdes::load_run_config(baseline_config);
      const auto kind = rdes::agent_kind_from_string(baseline_kind);
      const auto metrics = rdes::run_baseline(kind, cfg, baseline_out);
      std::cout << "baseline " << baseline_kind << ": " << metrics.episodes
                << " episodes; accuracy=" << metrics.accuracy
                << " mean_diversity=" << metrics.mean_diversity << "\n";
      return 0;
    }
    if (report_cmd->parsed()) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto rows = rdes::collect_report(dirs);
      std::cout << rdes::report_text(rows);
      if (!report_csv_path.empty()) {
        std::ofstream out(report_csv_path);
        out << rdes::report_csv(rows);
      }
      return 0;
    }
  } catch (const rdes::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

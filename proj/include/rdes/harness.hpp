#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdes/corpus.hpp"
#include "rdes/env.hpp"
#include "rdes/llm.hpp"
#include "rdes/ppo.hpp"
#include "rdes/qlearn.hpp"

namespace rdes {

inline constexpr const char* kCheckpointVersion = "checkpoint-v1";
inline constexpr const char* kCheckpointHeader = "rdes-checkpoint-v1";

enum class AgentKind { qlearn, ppo, random_fs, topk_sim };

AgentKind agent_kind_from_string(const std::string& s);
std::string to_string(AgentKind k);

// Flat experiment configuration; every field has a JSON key of the same
// name. Unknown keys in a config file are rejected.
struct RunConfig {
  AgentKind agent = AgentKind::qlearn;
  std::string dataset;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  long episodes = 100;
  int pool_size = 20;
  int max_features = 512;
  int bins = 8;
  int projection_dims = 16;
  PromptStyle prompt_style = PromptStyle::standard;
  RewardConfig env;
  QConfig qlearn_cfg;
  PpoConfig ppo_cfg;
  BackendConfig backend;

  void validate() const;
  // Canonical JSON of the effective config (all fields, sorted keys).
  std::string to_json() const;
  // FNV-1a hex digest of the canonical JSON.
  std::string digest() const;
};

RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

struct EpisodeRecord {
  long episode = 0;
  int input_id = 0;
  std::string true_label;
  std::vector<int> selected_ids;
  std::string prediction;
  bool correct = false;
  bool parse_failed = false;
  std::vector<double> rewards;
  double diversity = 0.0;
  double discounted_return = 0.0;
  long t_start = 0;      // global step counter at episode start
  double lambda = 0.0;   // lambda_at(t_start)
};

struct PpoUpdateRecord {
  long update = 0;
  double clip_old = 0.0;   // clipped surrogate at the pre-update parameters
  double clip_new = 0.0;   // same batch, post-update parameters
  double total_old = 0.0;
  double total_new = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double mean_diversity = 0.0;
  double mean_return = 0.0;
  long episodes = 0;
  long correct = 0;
  long updates_performed = 0;  // agent updates; must stay 0 for eval/baselines
  std::vector<EpisodeRecord> episode_log;
  std::vector<PpoUpdateRecord> ppo_updates;
};

struct TrainResult {
  Metrics metrics;
  std::string checkpoint_payload;           // version-checked JSON payload
  std::filesystem::path checkpoint_path;    // empty when out_dir was empty
};

// Algorithm loop: sample a training input, build its candidate pool, roll k
// agent selections, prompt the backend, reward with the annealed diversity
// coefficient, and update the agent. Fully reproducible for a fixed seed
// with the mock backend. Writes metrics.json, episodes.jsonl, report.csv and
// checkpoint.json into out_dir unless out_dir is empty.
TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir = {});

// Greedy one-pass evaluation of a trained checkpoint over the held-out test
// pool. Never updates the agent.
Metrics evaluate(const std::string& checkpoint_payload, const RunConfig& cfg,
                 const std::filesystem::path& out_dir = {});
Metrics evaluate_file(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                      const std::filesystem::path& out_dir = {});

// random_fs: k uniform KB picks per test input; topk_sim: the k most
// query-similar KB entries. Both share the prompting and metric path.
Metrics run_baseline(AgentKind kind, const RunConfig& cfg,
                     const std::filesystem::path& out_dir = {});

// Checkpoint files carry a checksum header line followed by the payload.
void save_checkpoint(const std::string& payload, const std::filesystem::path& path);
std::string load_checkpoint(const std::filesystem::path& path);

std::string metrics_to_json(const Metrics& m, const RunConfig& cfg);
std::string episodes_to_jsonl(const Metrics& m);

// Accuracy/diversity/return table over finished run directories, sorted by
// accuracy descending. Also emits CSV.
struct ReportRow {
  std::string run;
  std::string agent;
  double accuracy = 0.0;
  double mean_diversity = 0.0;
  double mean_return = 0.0;
  long episodes = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

std::vector<ReportRow> collect_report(const std::vector<std::filesystem::path>& run_dirs);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_text(const std::vector<ReportRow>& rows);

}  // namespace rdes

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdes/corpus.hpp"
#include "rdes/featurize.hpp"

namespace rdes {

enum class PredictionMode { per_step_prediction, terminal_prediction };

PredictionMode prediction_mode_from_string(const std::string& s);
std::string to_string(PredictionMode m);

// The M most query-similar knowledge-base entries, ordered by descending
// similarity (ties broken by lower id). Slots already chosen in an episode
// are never offered again.
struct CandidatePool {
  std::vector<int> ids;
  std::vector<double> scores;
  std::vector<bool> taken;

  int size() const { return static_cast<int>(ids.size()); }
  std::vector<bool> available() const;
  int available_count() const;
};

// Scores every KB entry against the query and keeps the top pool_size.
// kb_vectors[i] must be the TF-IDF vector of kb.examples()[i]. An entry with
// id exclude_id is skipped (used to keep a training input out of its own
// candidate pool).
CandidatePool build_pool(const Dataset& kb, const std::vector<SparseVector>& kb_vectors,
                         const SparseVector& query_vec, int pool_size, int k,
                         int exclude_id = -1);

// Convenience overload that vectorizes the KB on the fly.
CandidatePool build_pool(const Dataset& kb, const TfidfModel& m, const std::string& query,
                         int pool_size, int k);

// Distinct labels among the selected demos over k; 0 for the empty set.
double diversity_score(const std::vector<Example>& selected, int k);

struct RewardConfig {
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  double eta = 0.001;
  double gamma = 0.9;
  int k = 5;
  PredictionMode mode = PredictionMode::terminal_prediction;

  void validate() const;
};

// Annealed diversity coefficient at global training step t:
// lambda_min + (lambda_max - lambda_min) * exp(-eta * t).
double lambda_at(const RewardConfig& c, long t);

// r = 1(correct) + lambda(t_global) * diversity_delta; an absent `correct`
// contributes 0 (intermediate steps of terminal-prediction episodes).
double reward(const RewardConfig& c, std::optional<bool> correct, double diversity_delta,
              long t_global);

// Discounted sum of a reward sequence.
double episode_return(const std::vector<double>& rewards, double gamma);

// Live MDP tuple for one episode. The input's label stays out of the state
// and the prompt; the environment reads it only for reward computation.
struct EpisodeState {
  Example input;
  std::vector<Example> selected;
  std::optional<std::string> prediction;
  double diversity = 0.0;
  int step = 0;
};

struct TransitionRecord {
  StateEmbedding state_before;
  int action = 0;
  double reward = 0.0;
  StateEmbedding state_after;
  bool terminal = false;
};

// Appends the chosen candidate to the selected set, marks the slot taken,
// and returns the diversity delta D_{t+1} - D_t.
double step(EpisodeState& st, CandidatePool& pool, int slot, const Dataset& kb, int k);

}  // namespace rdes

#include "rdes/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdes/error.hpp"
#include "rdes/kernels.hpp"

namespace rdes {

PredictionMode prediction_mode_from_string(const std::string& s) {
  if (s == "per_step_prediction") return PredictionMode::per_step_prediction;
  if (s == "terminal_prediction") return PredictionMode::terminal_prediction;
  throw ConfigError("unknown prediction_mode '" + s + "'");
}

std::string to_string(PredictionMode m) {
  return m == PredictionMode::per_step_prediction ? "per_step_prediction"
                                                  : "terminal_prediction";
}

std::vector<bool> CandidatePool::available() const {
  std::vector<bool> out(taken.size());
  for (std::size_t i = 0; i < taken.size(); ++i) out[i] = !taken[i];
  return out;
}

int CandidatePool::available_count() const {
  return static_cast<int>(std::count(taken.begin(), taken.end(), false));
}

CandidatePool build_pool(const Dataset& kb, const std::vector<SparseVector>& kb_vectors,
                         const SparseVector& query_vec, int pool_size, int k,
                         int exclude_id) {
  if (kb_vectors.size() != kb.size()) throw Error("build_pool: kb_vectors size mismatch");
  if (pool_size < k) throw Error("build_pool: pool_size must be >= k");

  const auto scores = kernels::cosine_scan(query_vec, kb_vectors);

  std::vector<int> order;
  order.reserve(kb.size());
  for (std::size_t i = 0; i < kb.size(); ++i) {
    if (kb.examples()[i].id != exclude_id) order.push_back(static_cast<int>(i));
  }
  if (pool_size > static_cast<int>(order.size())) {
    throw Error("build_pool: pool_size exceeds knowledge base size");
  }

  auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return kb.examples()[a].id < kb.examples()[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + pool_size, order.end(), better);
  order.resize(pool_size);

  CandidatePool pool;
  pool.ids.reserve(order.size());
  pool.scores.reserve(order.size());
  for (int pos : order) {
    pool.ids.push_back(kb.examples()[pos].id);
    pool.scores.push_back(scores[pos]);
  }
  pool.taken.assign(order.size(), false);
  return pool;
}

CandidatePool build_pool(const Dataset& kb, const TfidfModel& m, const std::string& query,
                         int pool_size, int k) {
  std::vector<std::string> texts;
  texts.reserve(kb.size());
  for (const auto& e : kb.examples()) texts.push_back(e.text);
  return build_pool(kb, kernels::transform_corpus(m, texts), m.transform(query), pool_size, k);
}

double diversity_score(const std::vector<Example>& selected, int k) {
  if (k < 1) throw Error("diversity_score: k must be >= 1");
  if (selected.empty()) return 0.0;
  std::vector<std::string> distinct;
  for (const auto& e : selected) {
    if (std::find(distinct.begin(), distinct.end(), e.label) == distinct.end()) {
      distinct.push_back(e.label);
    }
  }
  return static_cast<double>(distinct.size()) / k;
}

void RewardConfig::validate() const {
  if (lambda_min < 0.0) throw ConfigError("lambda_min must be >= 0");
  if (lambda_max < lambda_min) throw ConfigError("lambda_max must be >= lambda_min");
  if (eta <= 0.0) throw ConfigError("eta must be > 0");
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
  if (k < 1) throw ConfigError("k must be >= 1");
}

double lambda_at(const RewardConfig& c, long t) {
  if (t < 0) throw Error("lambda_at: t must be >= 0");
  return c.lambda_min + (c.lambda_max - c.lambda_min) * std::exp(-c.eta * static_cast<double>(t));
}

double reward(const RewardConfig& c, std::optional<bool> correct, double diversity_delta,
              long t_global) {
  const double indicator = correct.value_or(false) ? 1.0 : 0.0;
  return indicator + lambda_at(c, t_global) * diversity_delta;
}

double episode_return(const std::vector<double>& rewards, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) throw Error("episode_return: gamma must be in [0,1)");
  double total = 0.0;
  double factor = 1.0;
  for (double r : rewards) {
    total += factor * r;
    factor *= gamma;
  }
  return total;
}

double step(EpisodeState& st, CandidatePool& pool, int slot, const Dataset& kb, int k) {
  if (st.step >= k) throw Error("step: episode already complete");
  if (slot < 0 || slot >= pool.size()) throw Error("step: slot out of range");
  if (pool.taken[static_cast<std::size_t>(slot)]) {
    throw Error("step: slot " + std::to_string(slot) + " already taken");
  }

  pool.taken[static_cast<std::size_t>(slot)] = true;
  st.selected.push_back(kb.by_id(pool.ids[static_cast<std::size_t>(slot)]));
  st.step += 1;
  const double before = st.diversity;
  st.diversity = diversity_score(st.selected, k);
  return st.diversity - before;
}

}  // namespace rdes

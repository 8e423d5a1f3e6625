#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rdes/rng.hpp"

namespace rdes {

inline constexpr const char* kPpoVersion = "ppo-v1";

// Minimal row-major dense matrix; enough for two-layer heads.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  static Matrix zeros(int rows, int cols) {
    return Matrix{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)};
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Policy head: logits = w2 * tanh(w1 * x + b1) + b2, softmax over available
// slots. Value head: v = w4 * tanh(w3 * x + b3) + b4. The heads share no
// parameters. Also reused as the value bag for gradients and Adam moments.
struct MlpParams {
  Matrix w1;               // hidden x state_dim
  std::vector<double> b1;  // hidden
  Matrix w2;               // actions x hidden
  std::vector<double> b2;  // actions
  Matrix w3;               // hidden x state_dim
  std::vector<double> b3;  // hidden
  Matrix w4;               // 1 x hidden
  std::vector<double> b4;  // 1

  int state_dim = 0;
  int hidden = 0;
  int actions = 0;

  // Weights uniform in [-0.08, 0.08], biases zero, seeded.
  static MlpParams init(int state_dim, int hidden, int actions, std::uint64_t seed);
  static MlpParams zeros_like(const MlpParams& p);

  std::string to_json() const;
  static MlpParams from_json(const std::string& text);
};

using MlpGrads = MlpParams;

struct PpoConfig {
  double clip_eps = 0.2;
  double c1 = 0.5;   // value loss coefficient
  double c2 = 0.01;  // entropy bonus coefficient
  double gae_lambda = 0.95;
  double gamma = 0.9;
  double lr = 3e-4;
  int epochs_per_batch = 4;
  int batch_episodes = 16;
  int hidden = 64;
  bool normalize_advantages = true;

  void validate() const;
};

// Selection probabilities over the M slots; unavailable slots get exactly 0
// and the rest sum to 1.
std::vector<double> policy_forward(const MlpParams& p, const std::vector<double>& state,
                                   const std::vector<bool>& available);

double value_forward(const MlpParams& p, const std::vector<double>& state);

// Categorical sample; returns (slot, log probability). Errors unless the
// probabilities sum to 1 within 1e-6.
std::pair<int, double> sample_action(const std::vector<double>& probs, Rng& rng);

// Greedy argmax over available slots, lowest index on ties.
int argmax_action(const std::vector<double>& probs);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma V_{t+1} - V_t;  A_t = delta_t + gamma lambda A_{t+1}.
// The value beyond the horizon is bootstrap_value, or 0 when terminal.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      bool terminal, double gamma, double gae_lambda,
                      double bootstrap_value = 0.0);

struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<bool>> masks;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> logprobs_old;
  bool terminal = true;

  // Filled by prepare_batch.
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
};

// GAE per trajectory, then advantage normalization over the whole batch when
// configured (zero mean, unit variance).
void prepare_batch(std::vector<Trajectory>& batch, const PpoConfig& c);

struct LossBreakdown {
  double total = 0.0;    // clip - c1*vf + c2*entropy (maximized)
  double clip = 0.0;     // mean clipped surrogate
  double vf = 0.0;       // mean squared value error
  double entropy = 0.0;  // mean policy entropy
};

LossBreakdown ppo_loss(const MlpParams& p, const std::vector<Trajectory>& batch,
                       const PpoConfig& c);

// Exact gradient of the total objective with respect to every parameter
// block. Steps where the clipped branch of the min is active contribute zero
// policy gradient; at the clip boundary the step is treated as unclipped.
// Trajectories are differentiated in parallel and merged in batch order, so
// the result does not depend on the thread count.
MlpGrads backward(const MlpParams& p, const std::vector<Trajectory>& batch, const PpoConfig& c);

struct AdamState {
  MlpParams m;
  MlpParams v;
  long t = 0;

  static AdamState init(const MlpParams& p);
};

// Adam ascent step (beta1=0.9, beta2=0.999, eps=1e-8) on the PPO objective.
void optimizer_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr);

}  // namespace rdes

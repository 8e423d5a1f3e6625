#include "rdes/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "rdes/error.hpp"

namespace rdes {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void fill_uniform(std::vector<double>& v, Rng& rng, double scale) {
  for (auto& x : v) x = (rng.next_double() * 2.0 - 1.0) * scale;
}

std::vector<double> affine(const Matrix& w, const std::vector<double>& b,
                           const std::vector<double>& x) {
  std::vector<double> out(b);
  for (int r = 0; r < w.rows; ++r) {
    double acc = 0.0;
    const double* row = w.data.data() + static_cast<std::size_t>(r) * w.cols;
    for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] += acc;
  }
  return out;
}

std::vector<double> tanh_vec(std::vector<double> v) {
  for (auto& x : v) x = std::tanh(x);
  return v;
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& available) {
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i < available.size() && available[i]) {
      any = true;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  if (!any) throw Error("policy_forward: no available slot");

  std::vector<double> probs(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i < available.size() && available[i]) {
      probs[i] = std::exp(logits[i] - max_logit);
      total += probs[i];
    }
  }
  for (auto& p : probs) p /= total;
  return probs;
}

void check_state_dim(const MlpParams& p, const std::vector<double>& state) {
  if (static_cast<int>(state.size()) != p.state_dim) {
    throw Error("state dimension " + std::to_string(state.size()) + " does not match network (" +
                std::to_string(p.state_dim) + ")");
  }
}

void check_trajectory(const Trajectory& t) {
  const auto n = t.size();
  if (t.states.size() != n || t.masks.size() != n || t.rewards.size() != n ||
      t.values.size() != n || t.logprobs_old.size() != n || t.advantages.size() != n ||
      t.returns.size() != n) {
    throw Error("trajectory field lengths disagree (was prepare_batch called?)");
  }
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v, double s) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
}

// Gradient of one trajectory's summed (not yet averaged) objective terms.
void backward_one(const MlpParams& p, const Trajectory& traj, const PpoConfig& c,
                  double inv_steps, MlpGrads& g) {
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& x = traj.states[t];
    const auto& mask = traj.masks[t];
    check_state_dim(p, x);

    // Forward, policy head.
    const auto h1 = tanh_vec(affine(p.w1, p.b1, x));
    const auto logits = affine(p.w2, p.b2, h1);
    const auto probs = masked_softmax(logits, mask);
    const int a = traj.actions[t];
    const double logprob_new = std::log(probs[static_cast<std::size_t>(a)]);
    const double ratio = std::exp(logprob_new - traj.logprobs_old[t]);
    const double adv = traj.advantages[t];

    // Forward, value head.
    const auto h3 = tanh_vec(affine(p.w3, p.b3, x));
    double value = p.b4[0];
    for (int i = 0; i < p.hidden; ++i) value += p.w4.at(0, i) * h3[static_cast<std::size_t>(i)];

    // min(r*A, clip(r)*A): the clipped branch is flat, so a step where it is
    // strictly active contributes no policy gradient. Exact boundary hits
    // pass through as unclipped.
    const double clipped_ratio = std::clamp(ratio, 1.0 - c.clip_eps, 1.0 + c.clip_eps);
    const bool clipped_active =
        clipped_ratio * adv < ratio * adv && (ratio < 1.0 - c.clip_eps || ratio > 1.0 + c.clip_eps);

    double entropy = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) entropy -= probs[i] * std::log(probs[i]);
    }

    // d(objective)/d(logits).
    std::vector<double> g_logits(probs.size(), 0.0);
    const double clip_coeff = clipped_active ? 0.0 : ratio * adv * inv_steps;
    const double ent_coeff = c.c2 * inv_steps;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i >= mask.size() || !mask[i]) continue;
      const double indicator = (static_cast<int>(i) == a) ? 1.0 : 0.0;
      double grad = clip_coeff * (indicator - probs[i]);
      grad -= ent_coeff * probs[i] * (std::log(probs[i]) + entropy);
      g_logits[i] = grad;
    }

    // Policy backprop.
    std::vector<double> g_h1(static_cast<std::size_t>(p.hidden), 0.0);
    for (int r = 0; r < p.actions; ++r) {
      const double gl = g_logits[static_cast<std::size_t>(r)];
      if (gl == 0.0) continue;
      g.b2[static_cast<std::size_t>(r)] += gl;
      for (int col = 0; col < p.hidden; ++col) {
        g.w2.at(r, col) += gl * h1[static_cast<std::size_t>(col)];
        g_h1[static_cast<std::size_t>(col)] += gl * p.w2.at(r, col);
      }
    }
    for (int r = 0; r < p.hidden; ++r) {
      const double hr = h1[static_cast<std::size_t>(r)];
      const double gz = g_h1[static_cast<std::size_t>(r)] * (1.0 - hr * hr);
      if (gz == 0.0) continue;
      g.b1[static_cast<std::size_t>(r)] += gz;
      for (int col = 0; col < p.state_dim; ++col) {
        g.w1.at(r, col) += gz * x[static_cast<std::size_t>(col)];
      }
    }

    // Value backprop: objective term is -c1 * (V - R)^2.
    const double g_value = -c.c1 * 2.0 * (value - traj.returns[t]) * inv_steps;
    if (g_value != 0.0) {
      g.b4[0] += g_value;
      for (int i = 0; i < p.hidden; ++i) {
        const double hi = h3[static_cast<std::size_t>(i)];
        g.w4.at(0, i) += g_value * hi;
        const double gz = g_value * p.w4.at(0, i) * (1.0 - hi * hi);
        g.b3[static_cast<std::size_t>(i)] += gz;
        for (int col = 0; col < p.state_dim; ++col) {
          g.w3.at(i, col) += gz * x[static_cast<std::size_t>(col)];
        }
      }
    }
  }
}

void check_finite_block(const std::vector<double>& v, const char* name) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(std::string("backward: non-finite gradient in ") + name);
  }
}

void accumulate(MlpGrads& acc, const MlpGrads& g) {
  add_scaled(acc.w1.data, g.w1.data, 1.0);
  add_scaled(acc.b1, g.b1, 1.0);
  add_scaled(acc.w2.data, g.w2.data, 1.0);
  add_scaled(acc.b2, g.b2, 1.0);
  add_scaled(acc.w3.data, g.w3.data, 1.0);
  add_scaled(acc.b3, g.b3, 1.0);
  add_scaled(acc.w4.data, g.w4.data, 1.0);
  add_scaled(acc.b4, g.b4, 1.0);
}

}  // namespace

void PpoConfig::validate() const {
  if (clip_eps <= 0.0 || clip_eps >= 1.0) throw ConfigError("clip_eps must be in (0,1)");
  if (c1 < 0.0) throw ConfigError("c1 must be >= 0");
  if (c2 < 0.0) throw ConfigError("c2 must be >= 0");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("gae_lambda must be in [0,1]");
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (epochs_per_batch < 1) throw ConfigError("epochs_per_batch must be >= 1");
  if (batch_episodes < 1) throw ConfigError("batch_episodes must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
}

MlpParams MlpParams::init(int state_dim, int hidden, int actions, std::uint64_t seed) {
  MlpParams p;
  p.state_dim = state_dim;
  p.hidden = hidden;
  p.actions = actions;
  p.w1 = Matrix::zeros(hidden, state_dim);
  p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
  p.w2 = Matrix::zeros(actions, hidden);
  p.b2.assign(static_cast<std::size_t>(actions), 0.0);
  p.w3 = Matrix::zeros(hidden, state_dim);
  p.b3.assign(static_cast<std::size_t>(hidden), 0.0);
  p.w4 = Matrix::zeros(1, hidden);
  p.b4.assign(1, 0.0);

  Rng rng(derive_seed(seed, 0x9901ULL));
  constexpr double kScale = 0.08;
  fill_uniform(p.w1.data, rng, kScale);
  fill_uniform(p.w2.data, rng, kScale);
  fill_uniform(p.w3.data, rng, kScale);
  fill_uniform(p.w4.data, rng, kScale);
  return p;
}

MlpParams MlpParams::zeros_like(const MlpParams& p) {
  MlpParams z;
  z.state_dim = p.state_dim;
  z.hidden = p.hidden;
  z.actions = p.actions;
  z.w1 = Matrix::zeros(p.hidden, p.state_dim);
  z.b1.assign(static_cast<std::size_t>(p.hidden), 0.0);
  z.w2 = Matrix::zeros(p.actions, p.hidden);
  z.b2.assign(static_cast<std::size_t>(p.actions), 0.0);
  z.w3 = Matrix::zeros(p.hidden, p.state_dim);
  z.b3.assign(static_cast<std::size_t>(p.hidden), 0.0);
  z.w4 = Matrix::zeros(1, p.hidden);
  z.b4.assign(1, 0.0);
  return z;
}

std::string MlpParams::to_json() const {
  nlohmann::json j;
  j["version"] = kPpoVersion;
  j["state_dim"] = state_dim;
  j["hidden"] = hidden;
  j["actions"] = actions;
  j["w1"] = w1.data;
  j["b1"] = b1;
  j["w2"] = w2.data;
  j["b2"] = b2;
  j["w3"] = w3.data;
  j["b3"] = b3;
  j["w4"] = w4.data;
  j["b4"] = b4;
  return j.dump();
}

MlpParams MlpParams::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"] != kPpoVersion) {
    throw CheckpointError("ppo checkpoint: unsupported version");
  }
  MlpParams p;
  p.state_dim = j.at("state_dim").get<int>();
  p.hidden = j.at("hidden").get<int>();
  p.actions = j.at("actions").get<int>();
  auto expect = [](std::vector<double> v, std::size_t n, const char* name) {
    if (v.size() != n) {
      throw CheckpointError(std::string("ppo checkpoint: bad shape for ") + name);
    }
    return v;
  };
  const auto h = static_cast<std::size_t>(p.hidden);
  const auto d = static_cast<std::size_t>(p.state_dim);
  const auto m = static_cast<std::size_t>(p.actions);
  p.w1 = Matrix{p.hidden, p.state_dim, expect(j.at("w1").get<std::vector<double>>(), h * d, "w1")};
  p.b1 = expect(j.at("b1").get<std::vector<double>>(), h, "b1");
  p.w2 = Matrix{p.actions, p.hidden, expect(j.at("w2").get<std::vector<double>>(), m * h, "w2")};
  p.b2 = expect(j.at("b2").get<std::vector<double>>(), m, "b2");
  p.w3 = Matrix{p.hidden, p.state_dim, expect(j.at("w3").get<std::vector<double>>(), h * d, "w3")};
  p.b3 = expect(j.at("b3").get<std::vector<double>>(), h, "b3");
  p.w4 = Matrix{1, p.hidden, expect(j.at("w4").get<std::vector<double>>(), h, "w4")};
  p.b4 = expect(j.at("b4").get<std::vector<double>>(), 1, "b4");
  return p;
}

std::vector<double> policy_forward(const MlpParams& p, const std::vector<double>& state,
                                   const std::vector<bool>& available) {
  check_state_dim(p, state);
  const auto h1 = tanh_vec(affine(p.w1, p.b1, state));
  const auto logits = affine(p.w2, p.b2, h1);
  return masked_softmax(logits, available);
}

double value_forward(const MlpParams& p, const std::vector<double>& state) {
  check_state_dim(p, state);
  const auto h3 = tanh_vec(affine(p.w3, p.b3, state));
  double v = p.b4[0];
  for (int i = 0; i < p.hidden; ++i) v += p.w4.at(0, i) * h3[static_cast<std::size_t>(i)];
  return v;
}

std::pair<int, double> sample_action(const std::vector<double>& probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) throw Error("sample_action: invalid distribution");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-6) {
    throw Error("sample_action: probabilities sum to " + std::to_string(total));
  }

  const double u = rng.next_double() * total;
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cum) break;
  }
  if (last_positive < 0) throw Error("sample_action: all probabilities zero");
  return {last_positive, std::log(probs[static_cast<std::size_t>(last_positive)])};
}

int argmax_action(const std::vector<double>& probs) {
  int best = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    if (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  if (best < 0) throw Error("argmax_action: all probabilities zero");
  return best;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      bool terminal, double gamma, double gae_lambda, double bootstrap_value) {
  if (rewards.size() != values.size()) throw Error("compute_gae: length mismatch");
  const auto n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_advantage = 0.0;
  double next_value = terminal ? 0.0 : bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    out.advantages[i] = delta + gamma * gae_lambda * next_advantage;
    out.returns[i] = out.advantages[i] + values[i];
    next_advantage = out.advantages[i];
    next_value = values[i];
  }
  return out;
}

void prepare_batch(std::vector<Trajectory>& batch, const PpoConfig& c) {
  std::size_t total = 0;
  for (auto& traj : batch) {
    const auto gae = compute_gae(traj.rewards, traj.values, traj.terminal, c.gamma, c.gae_lambda);
    traj.advantages = gae.advantages;
    traj.returns = gae.returns;
    total += traj.size();
  }
  if (!c.normalize_advantages || total == 0) return;

  double mean = 0.0;
  for (const auto& traj : batch) {
    for (double a : traj.advantages) mean += a;
  }
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (const auto& traj : batch) {
    for (double a : traj.advantages) var += (a - mean) * (a - mean);
  }
  var /= static_cast<double>(total);
  const double inv_std = 1.0 / std::sqrt(var + 1e-8);
  for (auto& traj : batch) {
    for (double& a : traj.advantages) a = (a - mean) * inv_std;
  }
}

LossBreakdown ppo_loss(const MlpParams& p, const std::vector<Trajectory>& batch,
                       const PpoConfig& c) {
  std::size_t total_steps = 0;
  for (const auto& traj : batch) {
    check_trajectory(traj);
    total_steps += traj.size();
  }
  if (total_steps == 0) throw Error("ppo_loss: empty batch");

  LossBreakdown out;
  for (const auto& traj : batch) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto probs = policy_forward(p, traj.states[t], traj.masks[t]);
      const double pa = probs[static_cast<std::size_t>(traj.actions[t])];
      const double ratio = std::exp(std::log(pa) - traj.logprobs_old[t]);
      const double adv = traj.advantages[t];
      const double clipped = std::clamp(ratio, 1.0 - c.clip_eps, 1.0 + c.clip_eps);
      out.clip += std::min(ratio * adv, clipped * adv);

      const double v = value_forward(p, traj.states[t]);
      out.vf += (v - traj.returns[t]) * (v - traj.returns[t]);

      for (double pi : probs) {
        if (pi > 0.0) out.entropy -= pi * std::log(pi);
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(total_steps);
  out.clip *= inv;
  out.vf *= inv;
  out.entropy *= inv;
  out.total = out.clip - c.c1 * out.vf + c.c2 * out.entropy;
  if (!std::isfinite(out.total)) throw Error("ppo_loss: non-finite objective");
  return out;
}

MlpGrads backward(const MlpParams& p, const std::vector<Trajectory>& batch, const PpoConfig& c) {
  std::size_t total_steps = 0;
  for (const auto& traj : batch) {
    check_trajectory(traj);
    total_steps += traj.size();
  }
  if (total_steps == 0) throw Error("backward: empty batch");
  const double inv_steps = 1.0 / static_cast<double>(total_steps);

  // Per-trajectory gradients computed in parallel, merged in batch order.
  std::vector<MlpGrads> partial(batch.size());
  const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    partial[static_cast<std::size_t>(i)] = MlpParams::zeros_like(p);
    backward_one(p, batch[static_cast<std::size_t>(i)], c, inv_steps,
                 partial[static_cast<std::size_t>(i)]);
  }

  MlpGrads g = MlpParams::zeros_like(p);
  for (const auto& part : partial) accumulate(g, part);

  check_finite_block(g.w1.data, "w1");
  check_finite_block(g.b1, "b1");
  check_finite_block(g.w2.data, "w2");
  check_finite_block(g.b2, "b2");
  check_finite_block(g.w3.data, "w3");
  check_finite_block(g.b3, "b3");
  check_finite_block(g.w4.data, "w4");
  check_finite_block(g.b4, "b4");
  return g;
}

AdamState AdamState::init(const MlpParams& p) {
  return AdamState{MlpParams::zeros_like(p), MlpParams::zeros_like(p), 0};
}

namespace {

void adam_block(std::vector<double>& theta, const std::vector<double>& grad,
                std::vector<double>& m, std::vector<double>& v, double lr, long t) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] += lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
  }
}

}  // namespace

void optimizer_step(MlpParams& p, const MlpGrads& g, AdamState& state, double lr) {
  if (g.state_dim != p.state_dim || g.hidden != p.hidden || g.actions != p.actions) {
    throw Error("optimizer_step: gradient shape mismatch");
  }
  state.t += 1;
  adam_block(p.w1.data, g.w1.data, state.m.w1.data, state.v.w1.data, lr, state.t);
  adam_block(p.b1, g.b1, state.m.b1, state.v.b1, lr, state.t);
  adam_block(p.w2.data, g.w2.data, state.m.w2.data, state.v.w2.data, lr, state.t);
  adam_block(p.b2, g.b2, state.m.b2, state.v.b2, lr, state.t);
  adam_block(p.w3.data, g.w3.data, state.m.w3.data, state.v.w3.data, lr, state.t);
  adam_block(p.b3, g.b3, state.m.b3, state.v.b3, lr, state.t);
  adam_block(p.w4.data, g.w4.data, state.m.w4.data, state.v.w4.data, lr, state.t);
  adam_block(p.b4, g.b4, state.m.b4, state.v.b4, lr, state.t);
}

}  // namespace rdes

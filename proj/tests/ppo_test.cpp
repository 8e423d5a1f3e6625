#include <doctest.h>

#include <cmath>
#include <vector>

#include "rdes/error.hpp"
#include "rdes/ppo.hpp"
#include "rdes/rng.hpp"
#include "ppo_check_util.hpp"

using namespace rdes;
using testutil::finite_difference_check;
using testutil::param_blocks;
using testutil::random_params;
using testutil::random_prepared_trajectory;
using testutil::random_state;

namespace {

// Brute-force reference forward pass, kept independent of the library path.
std::vector<double> ref_policy_forward(const MlpParams& p, const std::vector<double>& x,
                                       const std::vector<bool>& avail) {
  std::vector<double> hidden(static_cast<std::size_t>(p.hidden), 0.0);
  for (int r = 0; r < p.hidden; ++r) {
    double z = p.b1[static_cast<std::size_t>(r)];
    for (int c = 0; c < p.state_dim; ++c) z += p.w1.at(r, c) * x[static_cast<std::size_t>(c)];
    hidden[static_cast<std::size_t>(r)] = std::tanh(z);
  }
  std::vector<double> logits(static_cast<std::size_t>(p.actions), 0.0);
  for (int r = 0; r < p.actions; ++r) {
    double z = p.b2[static_cast<std::size_t>(r)];
    for (int c = 0; c < p.hidden; ++c) z += p.w2.at(r, c) * hidden[static_cast<std::size_t>(c)];
    logits[static_cast<std::size_t>(r)] = z;
  }
  double denom = 0.0;
  std::vector<double> probs(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (avail[i]) denom += std::exp(logits[i]);
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (avail[i]) probs[i] = std::exp(logits[i]) / denom;
  }
  return probs;
}

double ref_value_forward(const MlpParams& p, const std::vector<double>& x) {
  double v = p.b4[0];
  for (int r = 0; r < p.hidden; ++r) {
    double z = p.b3[static_cast<std::size_t>(r)];
    for (int c = 0; c < p.state_dim; ++c) z += p.w3.at(r, c) * x[static_cast<std::size_t>(c)];
    v += p.w4.at(0, r) * std::tanh(z);
  }
  return v;
}

}  // namespace

TEST_CASE("policy_forward basics") {
  SUBCASE("all-zero weights give a uniform distribution over available slots") {
    auto p = MlpParams::init(3, 4, 4, 1);
    for (auto* block : param_blocks(p)) std::fill(block->begin(), block->end(), 0.0);
    const auto probs = policy_forward(p, {0.1, 0.2, 0.3}, {true, true, true, true});
    for (double pr : probs) CHECK(pr == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("a single available slot takes probability one") {
    Rng rng(2);
    const auto p = random_params(3, 4, 4, rng);
    const auto probs = policy_forward(p, {0.1, -0.2, 0.3}, {false, false, true, false});
    CHECK(probs[2] == doctest::Approx(1.0));
    CHECK(probs[0] == 0.0);
    CHECK(probs[1] == 0.0);
    CHECK(probs[3] == 0.0);
  }
  SUBCASE("no available slot errors") {
    Rng rng(2);
    const auto p = random_params(3, 4, 4, rng);
    CHECK_THROWS_AS(policy_forward(p, {0.1, -0.2, 0.3}, {false, false, false, false}), Error);
  }
  SUBCASE("matches the brute-force reference") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
      const auto p = random_params(5, 6, 4, rng);
      const auto x = random_state(5, rng);
      const std::vector<bool> avail{true, trial % 2 == 0, true, true};
      const auto ours = policy_forward(p, x, avail);
      const auto ref = ref_policy_forward(p, x, avail);
      double total = 0.0;
      for (std::size_t i = 0; i < ours.size(); ++i) {
        CHECK(ours[i] == doctest::Approx(ref[i]).epsilon(1e-9));
        CHECK(ours[i] >= 0.0);
        total += ours[i];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("value_forward basics") {
  auto p = MlpParams::init(3, 4, 2, 1);
  for (auto* block : param_blocks(p)) std::fill(block->begin(), block->end(), 0.0);
  CHECK(value_forward(p, {1.0, 2.0, 3.0}) == 0.0);
  p.b4[0] = 0.3;
  CHECK(value_forward(p, {1.0, 2.0, 3.0}) == doctest::Approx(0.3));

  Rng rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    const auto q = random_params(5, 6, 3, rng);
    const auto x = random_state(5, rng);
    CHECK(value_forward(q, x) == doctest::Approx(ref_value_forward(q, x)).epsilon(1e-9));
  }
}

TEST_CASE("sample_action") {
  Rng rng(5);
  SUBCASE("degenerate distribution") {
    const auto [slot, logprob] = sample_action({0.0, 0.0, 1.0, 0.0}, rng);
    CHECK(slot == 2);
    CHECK(logprob == doctest::Approx(0.0));
  }
  SUBCASE("uniform frequencies") {
    std::vector<int> counts(4, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      ++counts[static_cast<std::size_t>(sample_action({0.25, 0.25, 0.25, 0.25}, rng).first)];
    }
    for (int c : counts) CHECK(std::fabs(c / double(draws) - 0.25) < 0.02);
  }
  SUBCASE("bad distributions are rejected") {
    CHECK_THROWS_AS(sample_action({0.4, 0.4}, rng), Error);
    CHECK_THROWS_AS(sample_action({0.5, -0.1, 0.6}, rng), Error);
  }
  SUBCASE("deterministic given the seed") {
    Rng a(9);
    Rng b(9);
    for (int i = 0; i < 100; ++i) {
      CHECK(sample_action({0.1, 0.2, 0.3, 0.4}, a).first ==
            sample_action({0.1, 0.2, 0.3, 0.4}, b).first);
    }
  }
}

TEST_CASE("compute_gae") {
  SUBCASE("gamma=lambda=1 on zero values gives plain reversed cumulative sums") {
    const auto g = compute_gae({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, true, 1.0, 1.0);
    CHECK(g.advantages == std::vector<double>{3.0, 2.0, 1.0});
  }
  SUBCASE("lambda=0 reduces to one-step TD errors") {
    const std::vector<double> r{0.3, 0.7};
    const std::vector<double> v{0.1, 0.4};
    const auto g = compute_gae(r, v, true, 0.9, 0.0);
    CHECK(g.advantages[0] == doctest::Approx(r[0] + 0.9 * v[1] - v[0]).epsilon(1e-12));
    CHECK(g.advantages[1] == doctest::Approx(r[1] - v[1]).epsilon(1e-12));
  }
  SUBCASE("recursion matches the direct double sum") {
    const std::vector<double> r{0.25, 1.0};
    const std::vector<double> v{0.1, 0.2};
    const double gamma = 0.9;
    const double lam = 0.95;
    const double d0 = r[0] + gamma * v[1] - v[0];
    const double d1 = r[1] - v[1];
    const auto g = compute_gae(r, v, true, gamma, lam);
    CHECK(g.advantages[1] == doctest::Approx(d1).epsilon(1e-12));
    CHECK(g.advantages[0] == doctest::Approx(d0 + gamma * lam * d1).epsilon(1e-12));
    CHECK(g.returns[0] == doctest::Approx(g.advantages[0] + v[0]).epsilon(1e-12));
  }
  SUBCASE("lambda=1 equals the Monte-Carlo advantage") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + rng.next_index(6);
      std::vector<double> r(static_cast<std::size_t>(n));
      std::vector<double> v(static_cast<std::size_t>(n));
      for (auto& x : r) x = rng.next_double() * 2.0 - 1.0;
      for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
      const double gamma = 0.9;
      const auto g = compute_gae(r, v, true, gamma, 1.0);
      for (int t = 0; t < n; ++t) {
        double mc = 0.0;
        double f = 1.0;
        for (int j = t; j < n; ++j) {
          mc += f * r[static_cast<std::size_t>(j)];
          f *= gamma;
        }
        CHECK(g.advantages[static_cast<std::size_t>(t)] ==
              doctest::Approx(mc - v[static_cast<std::size_t>(t)]).epsilon(1e-10));
      }
    }
  }
  SUBCASE("length mismatch errors") {
    CHECK_THROWS_AS(compute_gae({1.0}, {0.0, 0.0}, true, 0.9, 0.95), Error);
  }
}

TEST_CASE("ppo_loss components") {
  Rng rng(7);
  PpoConfig c;

  SUBCASE("ratio one makes the clip term the mean advantage") {
    const auto p = random_params(4, 5, 3, rng);
    Trajectory t = random_prepared_trajectory(p, c, rng, 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto probs = policy_forward(p, t.states[i], t.masks[i]);
      t.logprobs_old[i] = std::log(probs[static_cast<std::size_t>(t.actions[i])]);
    }
    const auto loss = ppo_loss(p, {t}, c);
    double mean_adv = 0.0;
    for (double a : t.advantages) mean_adv += a;
    mean_adv /= static_cast<double>(t.size());
    CHECK(loss.clip == doctest::Approx(mean_adv).epsilon(1e-10));
  }
  SUBCASE("uniform policy entropy is ln M") {
    auto p = MlpParams::init(4, 5, 6, 1);
    for (auto* block : param_blocks(p)) std::fill(block->begin(), block->end(), 0.0);
    Trajectory t = random_prepared_trajectory(p, c, rng, 3);
    for (auto& mask : t.masks) mask.assign(6, true);
    const auto loss = ppo_loss(p, {t}, c);
    CHECK(loss.entropy == doctest::Approx(std::log(6.0)).epsilon(1e-10));
  }
  SUBCASE("mismatched lengths error") {
    const auto p = random_params(4, 5, 3, rng);
    Trajectory t = random_prepared_trajectory(p, c, rng, 3);
    t.rewards.pop_back();
    CHECK_THROWS_AS(ppo_loss(p, {t}, c), Error);
  }
}

TEST_CASE("backward special cases") {
  Rng rng(8);
  PpoConfig c;
  c.c1 = 0.0;
  c.c2 = 0.0;

  SUBCASE("zero advantages give a zero policy gradient") {
    const auto p = random_params(4, 5, 3, rng);
    Trajectory t = random_prepared_trajectory(p, c, rng, 4);
    for (auto& a : t.advantages) a = 0.0;
    const auto g = backward(p, {t}, c);
    for (double x : g.w1.data) CHECK(x == 0.0);
    for (double x : g.w2.data) CHECK(x == 0.0);
    for (double x : g.b1) CHECK(x == 0.0);
    for (double x : g.b2) CHECK(x == 0.0);
  }
  SUBCASE("a clipped step contributes zero policy gradient") {
    const auto p = random_params(4, 5, 3, rng);
    Trajectory t = random_prepared_trajectory(p, c, rng, 1);
    const auto probs = policy_forward(p, t.states[0], t.masks[0]);
    const double lp = std::log(probs[static_cast<std::size_t>(t.actions[0])]);
    t.logprobs_old[0] = lp - std::log(1.0 + 2.0 * c.clip_eps);  // ratio = 1 + 2eps
    t.advantages[0] = 1.0;
    const auto g = backward(p, {t}, c);
    for (double x : g.w1.data) CHECK(x == 0.0);
    for (double x : g.w2.data) CHECK(x == 0.0);
  }
  SUBCASE("value head is untouched when c1 is zero") {
    const auto p = random_params(4, 5, 3, rng);
    PpoConfig ce = c;
    ce.c2 = 0.01;
    Trajectory t = random_prepared_trajectory(p, ce, rng, 4);
    const auto g = backward(p, {t}, ce);
    for (double x : g.w3.data) CHECK(x == 0.0);
    for (double x : g.b3) CHECK(x == 0.0);
    for (double x : g.w4.data) CHECK(x == 0.0);
    for (double x : g.b4) CHECK(x == 0.0);
  }
}

TEST_CASE("backward agrees with central finite differences") {
  Rng rng(9);
  PpoConfig c;
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_params(6, 4, 3, rng);
    std::vector<Trajectory> batch{random_prepared_trajectory(p, c, rng, 3),
                                  random_prepared_trajectory(p, c, rng, 2)};
    CHECK(finite_difference_check(p, batch, c) < 1e-4);
  }
}

TEST_CASE("optimizer_step") {
  Rng rng(10);
  SUBCASE("zero gradients leave parameters unchanged") {
    auto p = random_params(3, 4, 2, rng);
    const auto before = p;
    auto adam = AdamState::init(p);
    optimizer_step(p, MlpParams::zeros_like(p), adam, 0.01);
    CHECK(p.w1.data == before.w1.data);
    CHECK(p.b4 == before.b4);
  }
  SUBCASE("first step moves by about lr") {
    auto p = random_params(3, 4, 2, rng);
    const double before = p.w1.data[0];
    auto g = MlpParams::zeros_like(p);
    g.w1.data[0] = 0.5;
    auto adam = AdamState::init(p);
    optimizer_step(p, g, adam, 0.01);
    CHECK(std::fabs(p.w1.data[0] - before - 0.01) < 1e-8);
  }
  SUBCASE("deterministic") {
    auto p1 = random_params(3, 4, 2, rng);
    auto p2 = p1;
    auto g = MlpParams::zeros_like(p1);
    for (auto& x : g.w2.data) x = 0.25;
    auto a1 = AdamState::init(p1);
    auto a2 = AdamState::init(p2);
    optimizer_step(p1, g, a1, 3e-4);
    optimizer_step(p2, g, a2, 3e-4);
    CHECK(p1.w2.data == p2.w2.data);
  }
}

TEST_CASE("ppo params checkpoint restores forward outputs bit-identically") {
  Rng rng(11);
  const auto p = random_params(5, 6, 4, rng);
  const auto back = MlpParams::from_json(p.to_json());
  const auto x = random_state(5, rng);
  const std::vector<bool> avail{true, true, false, true};
  CHECK(policy_forward(p, x, avail) == policy_forward(back, x, avail));
  CHECK(value_forward(p, x) == value_forward(back, x));

  CHECK_THROWS_AS(MlpParams::from_json("{\"version\": \"ppo-v2\"}"), CheckpointError);
}

TEST_CASE("advantage normalization centers the batch") {
  PpoConfig c;
  c.gamma = 0.9;
  c.gae_lambda = 0.95;
  Rng rng(12);
  const auto p = random_params(4, 4, 3, rng);
  std::vector<Trajectory> batch;
  for (int i = 0; i < 3; ++i) {
    auto t = random_prepared_trajectory(p, c, rng, 4);
    t.advantages.clear();
    t.returns.clear();
    batch.push_back(std::move(t));
  }
  prepare_batch(batch, c);
  double mean = 0.0;
  double var = 0.0;
  int n = 0;
  for (const auto& t : batch) {
    for (double a : t.advantages) {
      mean += a;
      ++n;
    }
  }
  mean /= n;
  for (const auto& t : batch) {
    for (double a : t.advantages) var += (a - mean) * (a - mean);
  }
  var /= n;
  CHECK(std::fabs(mean) < 1e-9);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}

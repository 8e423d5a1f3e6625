#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdes/featurize.hpp"
#include "rdes/rng.hpp"

namespace rdes {

inline constexpr const char* kQTableVersion = "qtable-v1";

struct QConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon0 = 1.0;
  double epsilon_min = 0.05;
  double epsilon_decay = 0.995;  // per episode

  void validate() const;
};

// max(epsilon_min, epsilon0 * epsilon_decay^t); t counts episodes.
double epsilon_at(const QConfig& c, long t);

// Sparse tabular action-value storage: only visited (state, slot) pairs are
// stored, absent entries read as 0.
class QTable {
 public:
  explicit QTable(int num_slots);

  double get(StateKey s, int slot) const;

  // One temporal-difference update; returns the new value. The next-state
  // bootstrap is max over all slots and is skipped on terminal transitions.
  double update(StateKey s, int slot, double r, StateKey s_next, bool terminal,
                const QConfig& c);

  int num_slots() const { return num_slots_; }
  std::size_t size() const { return values_.size(); }
  long update_count() const { return update_count_; }

  std::string to_json(const QConfig& c) const;
  static std::pair<QTable, QConfig> from_json(const std::string& text);

 private:
  struct Key {
    std::uint64_t state;
    int slot;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return splitmix64(k.state ^ (static_cast<std::uint64_t>(k.slot) << 1));
    }
  };

  int num_slots_;
  long update_count_ = 0;
  std::unordered_map<Key, double, KeyHash> values_;

  void check_slot(int slot) const;
};

// Epsilon-greedy over the available slots: with probability epsilon_at(c, t)
// a uniform random available slot, otherwise the available argmax with ties
// broken by lowest slot index.
int select_action(const QTable& q, StateKey s, const std::vector<bool>& available, long t,
                  const QConfig& c, Rng& rng);

// Greedy argmax over the available slots, lowest index on ties.
int greedy_action(const QTable& q, StateKey s, const std::vector<bool>& available);

// Per-state greedy argmax over all slots.
std::vector<int> greedy_policy(const QTable& q, const std::vector<StateKey>& states);

}  // namespace rdes

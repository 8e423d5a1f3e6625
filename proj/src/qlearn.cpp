#include "rdes/qlearn.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rdes/error.hpp"

namespace rdes {

void QConfig::validate() const {
  if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("alpha must be in (0,1]");
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
  if (epsilon0 < 0.0 || epsilon0 > 1.0) throw ConfigError("epsilon0 must be in [0,1]");
  if (epsilon_min < 0.0 || epsilon_min > epsilon0) {
    throw ConfigError("epsilon_min must be in [0, epsilon0]");
  }
  if (epsilon_decay <= 0.0 || epsilon_decay > 1.0) {
    throw ConfigError("epsilon_decay must be in (0,1]");
  }
}

double epsilon_at(const QConfig& c, long t) {
  if (t < 0) throw Error("epsilon_at: t must be >= 0");
  return std::max(c.epsilon_min, c.epsilon0 * std::pow(c.epsilon_decay, static_cast<double>(t)));
}

QTable::QTable(int num_slots) : num_slots_(num_slots) {
  if (num_slots < 1) throw Error("QTable: num_slots must be >= 1");
}

void QTable::check_slot(int slot) const {
  if (slot < 0 || slot >= num_slots_) {
    throw Error("QTable: slot " + std::to_string(slot) + " out of range [0," +
                std::to_string(num_slots_) + ")");
  }
}

double QTable::get(StateKey s, int slot) const {
  check_slot(slot);
  auto it = values_.find(Key{s.value, slot});
  return it == values_.end() ? 0.0 : it->second;
}

double QTable::update(StateKey s, int slot, double r, StateKey s_next, bool terminal,
                      const QConfig& c) {
  check_slot(slot);
  if (!std::isfinite(r)) throw Error("QTable::update: non-finite reward");

  double bootstrap = 0.0;
  if (!terminal) {
    double best = get(s_next, 0);
    for (int a = 1; a < num_slots_; ++a) best = std::max(best, get(s_next, a));
    bootstrap = c.gamma * best;
  }
  const double old_value = get(s, slot);
  const double target = r + bootstrap;
  const double new_value = old_value + c.alpha * (target - old_value);
  values_[Key{s.value, slot}] = new_value;
  ++update_count_;
  return new_value;
}

std::string QTable::to_json(const QConfig& c) const {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [key, value] : values_) {
    entries[std::to_string(key.state) + ":" + std::to_string(key.slot)] = value;
  }
  nlohmann::json j;
  j["version"] = kQTableVersion;
  j["num_slots"] = num_slots_;
  j["entries"] = std::move(entries);
  j["config"] = {{"alpha", c.alpha},
                 {"gamma", c.gamma},
                 {"epsilon0", c.epsilon0},
                 {"epsilon_min", c.epsilon_min},
                 {"epsilon_decay", c.epsilon_decay}};
  return j.dump();
}

std::pair<QTable, QConfig> QTable::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"] != kQTableVersion) {
    throw CheckpointError("q-table checkpoint: unsupported version");
  }
  QTable q(j.at("num_slots").get<int>());
  for (const auto& [key, value] : j.at("entries").items()) {
    const auto colon = key.find(':');
    if (colon == std::string::npos) throw CheckpointError("q-table checkpoint: malformed key");
    Key k{std::stoull(key.substr(0, colon)), std::stoi(key.substr(colon + 1))};
    q.values_[k] = value.get<double>();
  }
  QConfig c;
  const auto& cj = j.at("config");
  c.alpha = cj.at("alpha").get<double>();
  c.gamma = cj.at("gamma").get<double>();
  c.epsilon0 = cj.at("epsilon0").get<double>();
  c.epsilon_min = cj.at("epsilon_min").get<double>();
  c.epsilon_decay = cj.at("epsilon_decay").get<double>();
  return {std::move(q), c};
}

int greedy_action(const QTable& q, StateKey s, const std::vector<bool>& available) {
  int best = -1;
  double best_value = 0.0;
  for (int slot = 0; slot < q.num_slots() && slot < static_cast<int>(available.size()); ++slot) {
    if (!available[static_cast<std::size_t>(slot)]) continue;
    const double v = q.get(s, slot);
    if (best < 0 || v > best_value) {
      best = slot;
      best_value = v;
    }
  }
  if (best < 0) throw Error("greedy_action: no available slot");
  return best;
}

int select_action(const QTable& q, StateKey s, const std::vector<bool>& available, long t,
                  const QConfig& c, Rng& rng) {
  const int n_available = static_cast<int>(std::count(available.begin(), available.end(), true));
  if (n_available == 0) throw Error("select_action: no available slot");

  if (rng.next_double() < epsilon_at(c, t)) {
    int pick = rng.next_index(n_available);
    for (std::size_t slot = 0; slot < available.size(); ++slot) {
      if (!available[slot]) continue;
      if (pick == 0) return static_cast<int>(slot);
      --pick;
    }
  }
  return greedy_action(q, s, available);
}

std::vector<int> greedy_policy(const QTable& q, const std::vector<StateKey>& states) {
  const std::vector<bool> all(static_cast<std::size_t>(q.num_slots()), true);
  std::vector<int> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(greedy_action(q, s, all));
  return out;
}

}  // namespace rdes

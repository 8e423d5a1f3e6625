#include "rdes/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "rdes/error.hpp"
#include "rdes/rng.hpp"

namespace rdes {

namespace {

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> sorted_label_vocab(const std::vector<Example>& examples) {
  std::set<std::string> distinct;
  for (const auto& e : examples) distinct.insert(e.label);
  return {distinct.begin(), distinct.end()};
}

// Fisher-Yates with our portable Rng; std::shuffle is implementation-defined.
void shuffle_positions(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.next_below(i)]);
  }
}

}  // namespace

Dataset::Dataset(std::string name, std::vector<Example> examples)
    : name_(std::move(name)), examples_(std::move(examples)) {
  labels_ = sorted_label_vocab(examples_);
  rebuild_index();
}

void Dataset::rebuild_index() {
  id_to_pos_.clear();
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    auto [it, inserted] = id_to_pos_.emplace(examples_[i].id, i);
    (void)it;
    if (!inserted) {
      throw LoadError("dataset '" + name_ + "': duplicate id " + std::to_string(examples_[i].id));
    }
  }
}

int Dataset::label_index(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) {
    throw Error("unknown label '" + label + "' in dataset '" + name_ + "'");
  }
  return static_cast<int>(it - labels_.begin());
}

const Example& Dataset::by_id(int id) const {
  auto it = id_to_pos_.find(id);
  if (it == id_to_pos_.end()) {
    throw Error("no example with id " + std::to_string(id) + " in dataset '" + name_ + "'");
  }
  return examples_[it->second];
}

Dataset Dataset::subset(std::string name, const std::vector<int>& positions) const {
  Dataset out;
  out.name_ = std::move(name);
  out.examples_.reserve(positions.size());
  for (int pos : positions) out.examples_.push_back(examples_.at(pos));
  out.labels_ = labels_;  // keep parent vocabulary
  out.rebuild_index();
  return out;
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());

  std::vector<Example> examples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path.string() + ": line " + std::to_string(line_no) +
                      ": invalid JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
      throw LoadError(path.string() + ": line " + std::to_string(line_no) +
                      ": missing string field 'text'");
    }
    if (!rec.contains("label") || !rec["label"].is_string()) {
      throw LoadError(path.string() + ": line " + std::to_string(line_no) +
                      ": missing string field 'label'");
    }
    Example e;
    e.id = static_cast<int>(examples.size());
    e.text = rec["text"].get<std::string>();
    e.label = rec["label"].get<std::string>();
    if (trimmed(e.text).empty()) {
      throw LoadError(path.string() + ": line " + std::to_string(line_no) + ": empty text");
    }
    examples.push_back(std::move(e));
  }
  if (examples.empty()) throw LoadError(path.string() + ": no records");
  return Dataset(path.stem().string(), std::move(examples));
}

void save_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  for (const auto& e : d.examples()) {
    nlohmann::json rec;
    rec["text"] = e.text;
    rec["label"] = e.label;
    out << rec.dump() << '\n';
  }
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw Error("train_fraction must be in (0,1)");
  }
  const auto n = static_cast<int>(d.size());
  if (n < 2) throw Error("dataset too small to split");

  std::map<std::string, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) by_label[d.examples()[i].label].push_back(i);
  const bool stratify = std::all_of(by_label.begin(), by_label.end(),
                                    [](const auto& kv) { return kv.second.size() >= 2; });

  Rng rng(derive_seed(spec.seed, 0xda7aULL));
  std::vector<int> train_pos;
  std::vector<int> test_pos;
  if (stratify) {
    for (auto& [label, positions] : by_label) {
      shuffle_positions(positions, rng);
      const auto n_label = static_cast<int>(positions.size());
      auto n_train = static_cast<int>(std::lround(spec.train_fraction * n_label));
      n_train = std::clamp(n_train, 1, n_label - 1);
      train_pos.insert(train_pos.end(), positions.begin(), positions.begin() + n_train);
      test_pos.insert(test_pos.end(), positions.begin() + n_train, positions.end());
    }
  } else {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    shuffle_positions(all, rng);
    auto n_train = static_cast<int>(std::lround(spec.train_fraction * n));
    n_train = std::clamp(n_train, 1, n - 1);
    train_pos.assign(all.begin(), all.begin() + n_train);
    test_pos.assign(all.begin() + n_train, all.end());
  }
  std::sort(train_pos.begin(), train_pos.end());
  std::sort(test_pos.begin(), test_pos.end());
  return {d.subset(d.name() + ".train", train_pos), d.subset(d.name() + ".test", test_pos)};
}

}  // namespace rdes

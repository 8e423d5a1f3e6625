#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rdes {

// One knowledge-base entry: a text with its categorical label.
struct Example {
  int id = 0;
  std::string text;
  std::string label;
};

// Immutable after load; safe for shared read-only access.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Example> examples);

  const std::string& name() const { return name_; }
  const std::vector<Example>& examples() const { return examples_; }
  // Label vocabulary, lexicographically sorted, duplicate-free.
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return examples_.size(); }

  // Position of `label` in the vocabulary; stable across runs.
  int label_index(const std::string& label) const;

  const Example& by_id(int id) const;
  bool has_id(int id) const { return id_to_pos_.count(id) > 0; }

  // Subset sharing this dataset's label vocabulary (ids are preserved).
  Dataset subset(std::string name, const std::vector<int>& positions) const;

 private:
  std::string name_;
  std::vector<Example> examples_;
  std::vector<std::string> labels_;
  std::unordered_map<int, std::size_t> id_to_pos_;

  void rebuild_index();
  friend std::pair<Dataset, Dataset> split(const Dataset&, const struct SplitSpec&);
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

// Reads UTF-8 JSON Lines, one {"text": ..., "label": ...} record per line.
// Extra fields are ignored. Ids are assigned in file order. Errors name the
// offending line number.
Dataset load_jsonl(const std::filesystem::path& path);

// Inverse of load_jsonl, used for round-trip checks and fixture generation.
void save_jsonl(const Dataset& d, const std::filesystem::path& path);

// Deterministic seeded split. Stratified by label when every label has at
// least two examples, plain shuffle split otherwise. Both sides keep the
// parent label vocabulary so that one-hot indices agree across splits.
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec);

}  // namespace rdes

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rdes/corpus.hpp"

namespace rdes {

inline constexpr const char* kTokenizerRule = "lower_alnum_v1";
inline constexpr const char* kTfidfVersion = "tfidf-v1";

// Lowercases, splits on non-alphanumeric runs, drops tokens shorter than
// two characters (rule id "lower_alnum_v1").
std::vector<std::string> tokenize(const std::string& text);

// L2-normalized sparse vector; entries sorted by strictly increasing index.
struct SparseVector {
  std::vector<std::pair<int, double>> entries;
  int dim = 0;

  double norm() const;
  bool is_zero() const { return entries.empty(); }
  std::vector<double> to_dense() const;
};

double cosine(const SparseVector& u, const SparseVector& v);

class TfidfModel {
 public:
  TfidfModel() = default;

  // Vocabulary = the max_features most document-frequent tokens (ties broken
  // lexicographically), column order lexicographic. idf(t) = ln((1+N)/(1+df)) + 1.
  static TfidfModel fit(const Dataset& corpus, int max_features);

  // Raw term counts times idf, L2-normalized. Out-of-vocabulary tokens are
  // dropped; an all-OOV text yields the zero vector with the model dimension.
  SparseVector transform(const std::string& text) const;

  int dim() const { return static_cast<int>(vocabulary_.size()); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  std::optional<int> token_index(const std::string& token) const;

  // Checkpoint payload (version "tfidf-v1").
  std::string to_json() const;
  static TfidfModel from_json(const std::string& text);

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  std::unordered_map<std::string, int> index_;
};

// Element-wise mean of the demos' TF-IDF vectors, densified. Empty set maps
// to the zero vector.
std::vector<double> aggregate_demos(const TfidfModel& m, const std::vector<Example>& demos);

// The concatenated state: input features, demo-set features, previous
// prediction one-hot, and the normalized label diversity scalar.
struct StateEmbedding {
  SparseVector input_part;        // d_x
  std::vector<double> demo_part;  // d_e = d_x
  std::vector<double> pred_part;  // |labels|, all zero or one-hot
  double diversity_part = 0.0;    // in [0,1]

  int dim() const {
    return input_part.dim + static_cast<int>(demo_part.size() + pred_part.size()) + 1;
  }
  std::vector<double> to_dense() const;
};

StateEmbedding encode_state(const TfidfModel& m, const std::string& text,
                            const std::vector<Example>& demos,
                            const std::optional<std::string>& pred,
                            const std::vector<std::string>& labels, int k);

struct StateKey {
  std::uint64_t value = 0;
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

// Quantizes the profile of the projection_dims largest-magnitude input
// weights (descending magnitude, index order on ties) into `bins` equal-width
// buckets over [0,1], together with the diversity bucket and the prediction
// index (-1 when absent), and hashes the bucket tuple with FNV-1a 64.
StateKey discretize(const StateEmbedding& s, int bins, int projection_dims);

}  // namespace rdes

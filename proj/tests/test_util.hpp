#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdes/corpus.hpp"
#include "rdes/error.hpp"
#include "rdes/rng.hpp"

namespace rdes::testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("rdes_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Synthetic classification corpus: each label draws example texts from its
// own token pool, pools are pairwise disjoint, and labels are assigned to id
// ranges in blocks so that consecutive ids cycle through the label set.
struct SyntheticSpec {
  int n_labels = 6;
  int per_label = 40;
  int tokens_per_example = 3;
  int pool_tokens = 30;
  int label_block = 2;  // consecutive ids sharing one label
  std::uint64_t seed = 1;
};

inline Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.per_label % spec.label_block != 0) {
    throw Error("make_synthetic_dataset: per_label must be a multiple of label_block");
  }
  Rng rng(derive_seed(spec.seed, 0x5f00dULL));
  const int total = spec.n_labels * spec.per_label;
  std::vector<Example> examples;
  examples.reserve(static_cast<std::size_t>(total));
  for (int id = 0; id < total; ++id) {
    const int label = (id / spec.label_block) % spec.n_labels;
    examples.push_back({id, "", "label" + std::to_string(label)});
  }

  for (auto& e : examples) {
    const int label = std::stoi(e.label.substr(5));
    // tokens_per_example distinct tokens from this label's pool
    std::vector<int> pool(static_cast<std::size_t>(spec.pool_tokens));
    for (int i = 0; i < spec.pool_tokens; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::string text;
    for (int t = 0; t < spec.tokens_per_example; ++t) {
      const auto pick = static_cast<std::size_t>(t) + rng.next_below(pool.size() - t);
      std::swap(pool[static_cast<std::size_t>(t)], pool[pick]);
      if (t > 0) text += ' ';
      text += "pool" + std::to_string(label) + "tok" + std::to_string(pool[static_cast<std::size_t>(t)]);
    }
    e.text = text;
  }
  return Dataset("synthetic", std::move(examples));
}

// Independent brute-force tf-idf oracle: its own tokenizer loop, document
// frequencies, and normalization, kept apart from the library path.
struct BruteTfidf {
  std::vector<std::string> vocab;           // sorted
  std::map<std::string, double> idf;

  static std::vector<std::string> words(const std::string& text) {
    std::vector<std::string> out;
    std::string w;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      const bool alnum = i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]));
      if (alnum) {
        w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
      } else if (!w.empty()) {
        if (w.size() >= 2) out.push_back(w);
        w.clear();
      }
    }
    return out;
  }

  static BruteTfidf fit(const std::vector<std::string>& docs) {
    BruteTfidf m;
    std::map<std::string, int> df;
    for (const auto& doc : docs) {
      std::map<std::string, bool> seen;
      for (const auto& w : words(doc)) seen[w] = true;
      for (const auto& [w, _] : seen) ++df[w];
    }
    const double n = static_cast<double>(docs.size());
    for (const auto& [w, d] : df) {
      m.vocab.push_back(w);
      m.idf[w] = std::log((1.0 + n) / (1.0 + d)) + 1.0;
    }
    return m;
  }

  // Dense tf-idf weights aligned with the sorted vocab.
  std::vector<double> transform(const std::string& text) const {
    std::map<std::string, double> tf;
    for (const auto& w : words(text)) {
      if (idf.count(w)) tf[w] += 1.0;
    }
    std::vector<double> dense(vocab.size(), 0.0);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      auto it = tf.find(vocab[i]);
      if (it != tf.end()) {
        dense[i] = it->second * idf.at(vocab[i]);
        norm_sq += dense[i] * dense[i];
      }
    }
    if (norm_sq > 0.0) {
      for (auto& x : dense) x /= std::sqrt(norm_sq);
    }
    return dense;
  }
};

}  // namespace rdes::testutil

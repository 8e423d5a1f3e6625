#include "rdes/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <json.hpp>

#include "rdes/error.hpp"
#include "rdes/rng.hpp"

namespace rdes {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [i, w] : entries) {
    (void)i;
    s += w * w;
  }
  return std::sqrt(s);
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  for (const auto& [i, w] : entries) out[static_cast<std::size_t>(i)] = w;
  return out;
}

double cosine(const SparseVector& u, const SparseVector& v) {
  if (u.dim != v.dim) throw Error("cosine: dimension mismatch");
  if (u.is_zero() || v.is_zero()) return 0.0;
  double dot = 0.0;
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < u.entries.size() && b < v.entries.size()) {
    const int ia = u.entries[a].first;
    const int ib = v.entries[b].first;
    if (ia == ib) {
      dot += u.entries[a].second * v.entries[b].second;
      ++a;
      ++b;
    } else if (ia < ib) {
      ++a;
    } else {
      ++b;
    }
  }
  const double nu = u.norm();
  const double nv = v.norm();
  return dot / (nu * nv);
}

TfidfModel TfidfModel::fit(const Dataset& corpus, int max_features) {
  if (corpus.size() == 0) throw Error("fit_tfidf: empty corpus");
  if (max_features < 1) throw Error("fit_tfidf: max_features must be >= 1");

  std::map<std::string, int> df;
  for (const auto& e : corpus.examples()) {
    auto tokens = tokenize(e.text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (const auto& t : tokens) ++df[t];
  }
  if (df.empty()) throw Error("fit_tfidf: corpus has zero tokens");

  // Top max_features by document frequency, ties lexicographic (the map is
  // already lexicographically ordered, so a stable sort on -df suffices).
  std::vector<std::pair<std::string, int>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(ranked.size()) > max_features) ranked.resize(max_features);

  TfidfModel m;
  m.vocabulary_.reserve(ranked.size());
  for (const auto& [token, count] : ranked) {
    (void)count;
    m.vocabulary_.push_back(token);
  }
  std::sort(m.vocabulary_.begin(), m.vocabulary_.end());

  const double n_docs = static_cast<double>(corpus.size());
  m.idf_.resize(m.vocabulary_.size());
  for (std::size_t i = 0; i < m.vocabulary_.size(); ++i) {
    const double dfi = static_cast<double>(df.at(m.vocabulary_[i]));
    m.idf_[i] = std::log((1.0 + n_docs) / (1.0 + dfi)) + 1.0;
    m.index_.emplace(m.vocabulary_[i], static_cast<int>(i));
  }
  return m;
}

std::optional<int> TfidfModel::token_index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::transform(const std::string& text) const {
  std::map<int, double> weights;
  for (const auto& token : tokenize(text)) {
    if (auto idx = token_index(token)) weights[*idx] += 1.0;
  }
  SparseVector v;
  v.dim = dim();
  v.entries.reserve(weights.size());
  double norm_sq = 0.0;
  for (auto& [idx, tf] : weights) {
    const double w = tf * idf_[static_cast<std::size_t>(idx)];
    v.entries.emplace_back(idx, w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [idx, w] : v.entries) {
      (void)idx;
      w *= inv;
    }
  }
  return v;
}

std::string TfidfModel::to_json() const {
  nlohmann::json j;
  j["version"] = kTfidfVersion;
  j["tokenizer"] = kTokenizerRule;
  j["vocabulary"] = vocabulary_;
  j["idf"] = idf_;
  return j.dump();
}

TfidfModel TfidfModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"] != kTfidfVersion) {
    throw CheckpointError("tfidf checkpoint: unsupported version");
  }
  TfidfModel m;
  m.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
  m.idf_ = j.at("idf").get<std::vector<double>>();
  if (m.vocabulary_.size() != m.idf_.size()) {
    throw CheckpointError("tfidf checkpoint: vocabulary/idf size mismatch");
  }
  for (std::size_t i = 0; i < m.vocabulary_.size(); ++i) {
    m.index_.emplace(m.vocabulary_[i], static_cast<int>(i));
  }
  return m;
}

std::vector<double> aggregate_demos(const TfidfModel& m, const std::vector<Example>& demos) {
  std::vector<double> out(static_cast<std::size_t>(m.dim()), 0.0);
  if (demos.empty()) return out;
  for (const auto& demo : demos) {
    const auto v = m.transform(demo.text);
    for (const auto& [idx, w] : v.entries) out[static_cast<std::size_t>(idx)] += w;
  }
  const double inv = 1.0 / static_cast<double>(demos.size());
  for (auto& x : out) x *= inv;
  return out;
}

std::vector<double> StateEmbedding::to_dense() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(dim()));
  const auto dense_input = input_part.to_dense();
  out.insert(out.end(), dense_input.begin(), dense_input.end());
  out.insert(out.end(), demo_part.begin(), demo_part.end());
  out.insert(out.end(), pred_part.begin(), pred_part.end());
  out.push_back(diversity_part);
  return out;
}

StateEmbedding encode_state(const TfidfModel& m, const std::string& text,
                            const std::vector<Example>& demos,
                            const std::optional<std::string>& pred,
                            const std::vector<std::string>& labels, int k) {
  if (k < 1) throw Error("encode_state: k must be >= 1");
  if (static_cast<int>(demos.size()) > k) throw Error("encode_state: more than k demos");

  StateEmbedding s;
  s.input_part = m.transform(text);
  s.demo_part = aggregate_demos(m, demos);
  s.pred_part.assign(labels.size(), 0.0);
  if (pred) {
    auto it = std::find(labels.begin(), labels.end(), *pred);
    if (it == labels.end()) throw Error("encode_state: unknown prediction label '" + *pred + "'");
    s.pred_part[static_cast<std::size_t>(it - labels.begin())] = 1.0;
  }
  std::vector<std::string> distinct;
  for (const auto& d : demos) {
    if (std::find(distinct.begin(), distinct.end(), d.label) == distinct.end()) {
      distinct.push_back(d.label);
    }
  }
  s.diversity_part = demos.empty() ? 0.0 : static_cast<double>(distinct.size()) / k;
  return s;
}

namespace {

int bucket_of(double w, int bins) {
  const int b = static_cast<int>(std::floor(w * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

StateKey discretize(const StateEmbedding& s, int bins, int projection_dims) {
  if (bins < 2) throw Error("discretize: bins must be >= 2");
  if (projection_dims < 1) throw Error("discretize: projection_dims must be >= 1");

  // Largest-magnitude input coordinates first; equal magnitudes fall back to
  // index order. Missing coordinates (sparser inputs) quantize to bucket 0.
  auto entries = s.input_part.entries;
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    const double ma = std::fabs(a.second);
    const double mb = std::fabs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });

  std::vector<std::int64_t> buckets;
  buckets.reserve(static_cast<std::size_t>(projection_dims) + 2);
  for (int i = 0; i < projection_dims; ++i) {
    const double w = i < static_cast<int>(entries.size()) ? entries[i].second : 0.0;
    buckets.push_back(bucket_of(w, bins));
  }
  buckets.push_back(bucket_of(s.diversity_part, bins));

  std::int64_t pred_index = -1;
  for (std::size_t i = 0; i < s.pred_part.size(); ++i) {
    if (s.pred_part[i] != 0.0) {
      pred_index = static_cast<std::int64_t>(i);
      break;
    }
  }
  buckets.push_back(pred_index);

  return StateKey{fnv1a64(buckets.data(), buckets.size() * sizeof(std::int64_t))};
}

}  // namespace rdes

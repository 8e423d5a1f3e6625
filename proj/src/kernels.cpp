#include "rdes/kernels.hpp"

namespace rdes::kernels {

std::vector<double> cosine_scan_serial(const SparseVector& query,
                                       const std::vector<SparseVector>& entries) {
  std::vector<double> scores(entries.size(), 0.0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    scores[i] = cosine(query, entries[i]);
  }
  return scores;
}

std::vector<double> cosine_scan(const SparseVector& query,
                                const std::vector<SparseVector>& entries) {
  std::vector<double> scores(entries.size(), 0.0);
  const auto n = static_cast<std::int64_t>(entries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] = cosine(query, entries[static_cast<std::size_t>(i)]);
  }
  return scores;
}

std::vector<SparseVector> transform_corpus_serial(const TfidfModel& m,
                                                  const std::vector<std::string>& texts) {
  std::vector<SparseVector> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out[i] = m.transform(texts[i]);
  }
  return out;
}

std::vector<SparseVector> transform_corpus(const TfidfModel& m,
                                           const std::vector<std::string>& texts) {
  std::vector<SparseVector> out(texts.size());
  const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = m.transform(texts[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace rdes::kernels

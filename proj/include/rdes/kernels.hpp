#pragma once

#include <string>
#include <vector>

#include "rdes/featurize.hpp"

// Data-parallel hot loops, each with a serial reference kept for testing and
// benchmarking. Every element of the output depends on exactly one input
// element, so the OpenMP variants produce bit-identical results to the
// serial ones regardless of thread count.
namespace rdes::kernels {

// Cosine similarity of `query` against every entry.
std::vector<double> cosine_scan_serial(const SparseVector& query,
                                       const std::vector<SparseVector>& entries);
std::vector<double> cosine_scan(const SparseVector& query,
                                const std::vector<SparseVector>& entries);

// TF-IDF vectors for a whole corpus.
std::vector<SparseVector> transform_corpus_serial(const TfidfModel& m,
                                                  const std::vector<std::string>& texts);
std::vector<SparseVector> transform_corpus(const TfidfModel& m,
                                           const std::vector<std::string>& texts);

}  // namespace rdes::kernels

#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sentaug {

// Word vectors read from the usual text format: one `word v1 v2 ... vD` line
// per entry, no header. Immutable after parse; safe to share across threads.
class EmbeddingTable {
 public:
  // Throws DataError on an empty stream, a non-numeric component, or a
  // dimension mismatch (the message names the offending line).
  static EmbeddingTable parse(std::istream& in);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  // Exact lookup first, then the lowercased form. Null when absent.
  const std::vector<double>* find(const std::string& word) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

// Mean of the in-vocabulary token embeddings of a (possibly multi-word)
// aspect term. `valid` is false when every token is out of vocabulary or the
// mean has zero norm; such aspects take no part in similarity ranking.
struct AspectVector {
  std::vector<std::string> aspect;
  std::vector<double> vector;
  std::size_t oov_count = 0;
  bool valid = false;
};

AspectVector aspect_vector(const EmbeddingTable& table,
                           std::span<const std::string> aspect);

// dot(u, v) / (|u| |v|). Throws std::invalid_argument on a dimension
// mismatch or a zero-norm input rather than returning NaN.
double cosine(std::span<const double> u, std::span<const double> v);

struct ScoredAspect {
  std::string aspect;
  double similarity;
};

// Pairwise cosine similarities over a set of aspect terms. The full matrix
// is materialized up to kMaterializeLimit aspects; above that, entries are
// computed on demand from the stored unit vectors so the memory stays
// linear. Immutable after build.
class SimilarityMatrix {
 public:
  static constexpr std::size_t kMaterializeLimit = 10000;

  // `aspect_vectors` pairs each aspect string with its representation.
  // Aspect strings must be distinct; vectors must be nonzero and share one
  // dimension (callers filter invalid AspectVectors out first).
  static SimilarityMatrix build(
      std::vector<std::pair<std::string, std::vector<double>>> aspect_vectors);

  const std::vector<std::string>& aspects() const { return aspects_; }
  std::size_t size() const { return aspects_.size(); }
  std::optional<std::size_t> index_of(const std::string& aspect) const;

  // c_ij, clamped to [-1, 1].
  double value(std::size_t i, std::size_t j) const;

  // The k highest-similarity aspects for `aspect`, descending, ties broken
  // by ascending aspect string. The queried aspect itself may appear.
  // Throws std::invalid_argument when the aspect is unknown, k < 1 or
  // k > size().
  std::vector<ScoredAspect> top_k_similar(const std::string& aspect,
                                          std::size_t k) const;

 private:
  std::vector<std::string> aspects_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> unit_vectors_;
  std::vector<double> matrix_;  // row-major, only when materialized
  bool materialized_ = false;
};

}  // namespace sentaug

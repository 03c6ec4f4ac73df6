#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace sentaug {

// Half-open token index range [from, to).
struct TokenRange {
  std::size_t from = 0;
  std::size_t to = 0;

  std::size_t length() const { return to - from; }
  bool contains(std::size_t i) const { return i >= from && i < to; }
  bool operator==(const TokenRange&) const = default;
};

// Per-sentence head-index tree. heads[i] is the 1-based index of token i's
// head, 0 for the root attachment. Construction validates the single-root,
// acyclic, connected invariants and throws DataError otherwise.
class DependencyTree {
 public:
  explicit DependencyTree(std::vector<std::size_t> heads);

  std::size_t size() const { return heads_.size(); }
  const std::vector<std::size_t>& heads() const { return heads_; }
  std::size_t root() const { return root_; }

  // Undirected neighbor lists, 0-based.
  const std::vector<std::vector<std::size_t>>& adjacency() const { return adjacency_; }

 private:
  std::vector<std::size_t> heads_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::size_t root_ = 0;
};

struct ConlluSentence {
  std::vector<std::string> forms;
  DependencyTree tree;
};

// Reads the CoNLL-U subset this project consumes: ten tab-separated columns,
// token index in column 1, form in column 2, head in column 7, blank-line
// sentence separators, '#' comments. Multiword-token ranges ("3-4") and
// empty nodes ("3.1") are skipped. Errors carry the line number.
std::vector<ConlluSentence> import_conllu(std::istream& in);

// d[j] = minimum number of tree edges (undirected) from token j to any token
// inside `aspect_span`; 0 exactly on the span. Multi-source BFS.
std::vector<std::size_t> syntax_distances(const DependencyTree& tree, TokenRange aspect_span);

// Token-offset stand-in for syntax_distances when no parse is available:
// d[j] = distance in positions to the nearest span token.
std::vector<std::size_t> positional_distances(std::size_t n, TokenRange aspect_span);

// h = 1 - softmax(d), computed with max-subtraction. Each h_j lies in (0, 1)
// for n >= 2 and the entries sum to n - 1. A length-1 input yields h = [0]
// (the softmax of a singleton is 1): degenerate but kept exact.
std::vector<double> sdw_weights(std::span<const std::size_t> distances);

// Up to k_n distinct word strings nearest to the aspect by syntax distance,
// nearest first, distance ties broken by ascending token position. Span
// tokens and words in `exclude` (lowercased) never appear; deduplication is
// on the lowercased form, the surface form of the nearest occurrence is
// kept. May return fewer than k_n.
std::vector<std::string> negative_word_set(const DependencyTree& tree,
                                           TokenRange aspect_span,
                                           std::span<const std::string> tokens,
                                           std::size_t k_n,
                                           const std::unordered_set<std::string>& exclude);

// Same selection over precomputed distances (used with the positional
// fallback for parse-less sentences).
std::vector<std::string> negative_word_set(std::span<const std::size_t> distances,
                                           TokenRange aspect_span,
                                           std::span<const std::string> tokens,
                                           std::size_t k_n,
                                           const std::unordered_set<std::string>& exclude);

}  // namespace sentaug

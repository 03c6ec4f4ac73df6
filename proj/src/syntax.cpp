#include "sentaug/syntax.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sentaug/error.hpp"
#include "sentaug/strings.hpp"

namespace sentaug {

DependencyTree::DependencyTree(std::vector<std::size_t> heads) : heads_(std::move(heads)) {
  const std::size_t n = heads_.size();
  if (n == 0) throw DataError("dependency tree: no tokens");
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (heads_[i] > n) {
      throw DataError("dependency tree: head index " + std::to_string(heads_[i]) +
                      " of token " + std::to_string(i + 1) + " out of range");
    }
    if (heads_[i] == i + 1) {
      throw DataError("dependency tree: token " + std::to_string(i + 1) + " is its own head");
    }
    if (heads_[i] == 0) {
      root_ = i;
      ++roots;
    }
  }
  if (roots == 0) throw DataError("dependency tree: no root");
  if (roots > 1) throw DataError("dependency tree: multiple roots");

  adjacency_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (heads_[i] == 0) continue;
    const std::size_t head = heads_[i] - 1;
    adjacency_[i].push_back(head);
    adjacency_[head].push_back(i);
  }

  // n nodes, n-1 parent edges, one root: connectivity from the root implies
  // acyclicity, so a single sweep checks both.
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{root_};
  seen[root_] = true;
  std::size_t visited = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    ++visited;
    for (const std::size_t v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  if (visited != n) throw DataError("dependency tree: cycle detected");
}

namespace {

bool is_plain_integer(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

std::vector<ConlluSentence> import_conllu(std::istream& in) {
  std::vector<ConlluSentence> sentences;
  std::vector<std::string> forms;
  std::vector<std::size_t> heads;
  std::size_t line_no = 0;
  std::size_t block_start = 0;

  const auto flush = [&]() {
    if (forms.empty()) return;
    try {
      sentences.push_back({std::move(forms), DependencyTree(std::move(heads))});
    } catch (const DataError& e) {
      throw DataError("conllu sentence starting at line " + std::to_string(block_start) +
                      ": " + e.what());
    }
    forms.clear();
    heads.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    const std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 10) {
      throw DataError("conllu line " + std::to_string(line_no) + ": expected 10 columns, got " +
                      std::to_string(cols.size()));
    }
    // Multiword ranges ("3-4") and empty nodes ("3.1") carry no head.
    if (!is_plain_integer(cols[0])) continue;
    if (forms.empty()) block_start = line_no;
    const std::size_t index = std::stoull(cols[0]);
    if (index != forms.size() + 1) {
      throw DataError("conllu line " + std::to_string(line_no) + ": token index " + cols[0] +
                      " out of sequence, expected " + std::to_string(forms.size() + 1));
    }
    if (!is_plain_integer(cols[6])) {
      throw DataError("conllu line " + std::to_string(line_no) + ": non-integer head '" +
                      cols[6] + "'");
    }
    forms.push_back(cols[1]);
    heads.push_back(std::stoull(cols[6]));
  }
  flush();
  return sentences;
}

std::vector<std::size_t> syntax_distances(const DependencyTree& tree, TokenRange aspect_span) {
  const std::size_t n = tree.size();
  if (aspect_span.from >= aspect_span.to || aspect_span.to > n) {
    throw std::invalid_argument("syntax_distances: span out of range");
  }
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, kUnset);
  std::deque<std::size_t> queue;
  for (std::size_t i = aspect_span.from; i < aspect_span.to; ++i) {
    dist[i] = 0;
    queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (const std::size_t v : tree.adjacency()[u]) {
      if (dist[v] == kUnset) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::vector<std::size_t> positional_distances(std::size_t n, TokenRange aspect_span) {
  if (aspect_span.from >= aspect_span.to || aspect_span.to > n) {
    throw std::invalid_argument("positional_distances: span out of range");
  }
  std::vector<std::size_t> dist(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < aspect_span.from) {
      dist[i] = aspect_span.from - i;
    } else if (i >= aspect_span.to) {
      dist[i] = i - (aspect_span.to - 1);
    }
  }
  return dist;
}

std::vector<double> sdw_weights(std::span<const std::size_t> distances) {
  if (distances.empty()) throw std::invalid_argument("sdw_weights: empty distance vector");
  const std::size_t max_d = *std::max_element(distances.begin(), distances.end());
  std::vector<double> weights(distances.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    weights[i] = std::exp(static_cast<double>(distances[i]) - static_cast<double>(max_d));
    denom += weights[i];
  }
  for (double& w : weights) w = 1.0 - w / denom;
  return weights;
}

std::vector<std::string> negative_word_set(const DependencyTree& tree,
                                           TokenRange aspect_span,
                                           std::span<const std::string> tokens,
                                           std::size_t k_n,
                                           const std::unordered_set<std::string>& exclude) {
  if (tokens.size() != tree.size()) {
    throw std::invalid_argument("negative_word_set: token/tree size mismatch");
  }
  const std::vector<std::size_t> dist = syntax_distances(tree, aspect_span);
  return negative_word_set(dist, aspect_span, tokens, k_n, exclude);
}

std::vector<std::string> negative_word_set(std::span<const std::size_t> distances,
                                           TokenRange aspect_span,
                                           std::span<const std::string> tokens,
                                           std::size_t k_n,
                                           const std::unordered_set<std::string>& exclude) {
  if (tokens.size() != distances.size()) {
    throw std::invalid_argument("negative_word_set: token/distance size mismatch");
  }
  if (k_n < 1) throw std::invalid_argument("negative_word_set: k_n must be >= 1");
  std::vector<std::size_t> order;
  order.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!aspect_span.contains(i)) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (distances[a] != distances[b]) return distances[a] < distances[b];
    return a < b;
  });
  std::vector<std::string> words;
  std::unordered_set<std::string> taken;
  for (const std::size_t i : order) {
    if (words.size() == k_n) break;
    const std::string key = lowercase(tokens[i]);
    if (exclude.count(key) > 0 || taken.count(key) > 0) continue;
    taken.insert(key);
    words.push_back(tokens[i]);
  }
  return words;
}

}  // namespace sentaug

#include "sentaug/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sentaug/error.hpp"
#include "sentaug/strings.hpp"

namespace sentaug {

EmbeddingTable EmbeddingTable::parse(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (word.empty()) {
      throw DataError("embedding file line " + std::to_string(line_no) + ": missing word");
    }
    std::vector<double> vec;
    std::string component;
    while (fields >> component) {
      std::size_t consumed = 0;
      double value = 0.0;
      try {
        value = std::stod(component, &consumed);
      } catch (const std::exception&) {
        consumed = 0;
      }
      if (consumed != component.size() || !std::isfinite(value)) {
        throw DataError("embedding file line " + std::to_string(line_no) +
                        ": non-numeric vector component '" + component + "'");
      }
      vec.push_back(value);
    }
    if (vec.empty()) {
      throw DataError("embedding file line " + std::to_string(line_no) +
                      ": no vector components");
    }
    if (table.dimension_ == 0) {
      table.dimension_ = vec.size();
    } else if (vec.size() != table.dimension_) {
      throw DataError("embedding file line " + std::to_string(line_no) +
                      ": dimension mismatch, expected " + std::to_string(table.dimension_) +
                      " components, got " + std::to_string(vec.size()));
    }
    table.entries_[word] = std::move(vec);
  }
  if (table.entries_.empty()) {
    throw DataError("embedding file is empty");
  }
  return table;
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) it = entries_.find(lowercase(word));
  return it == entries_.end() ? nullptr : &it->second;
}

AspectVector aspect_vector(const EmbeddingTable& table,
                           std::span<const std::string> aspect) {
  if (aspect.empty()) throw std::invalid_argument("aspect_vector: empty aspect");
  AspectVector result;
  result.aspect.assign(aspect.begin(), aspect.end());
  result.vector.assign(table.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& token : aspect) {
    const std::vector<double>* vec = table.find(token);
    if (vec == nullptr) {
      ++result.oov_count;
      continue;
    }
    for (std::size_t d = 0; d < vec->size(); ++d) result.vector[d] += (*vec)[d];
    ++found;
  }
  if (found == 0) {
    result.valid = false;
    return result;
  }
  double norm_sq = 0.0;
  for (double& component : result.vector) {
    component /= static_cast<double>(found);
    norm_sq += component * component;
  }
  result.valid = norm_sq > 0.0;
  return result;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine: zero-norm input");
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

SimilarityMatrix SimilarityMatrix::build(
    std::vector<std::pair<std::string, std::vector<double>>> aspect_vectors) {
  SimilarityMatrix sim;
  sim.aspects_.reserve(aspect_vectors.size());
  sim.unit_vectors_.reserve(aspect_vectors.size());
  for (auto& [aspect, vec] : aspect_vectors) {
    if (sim.index_.count(aspect) > 0) {
      throw std::invalid_argument("SimilarityMatrix: duplicate aspect '" + aspect + "'");
    }
    double norm_sq = 0.0;
    for (double c : vec) norm_sq += c * c;
    if (norm_sq == 0.0) {
      throw std::invalid_argument("SimilarityMatrix: zero-norm vector for '" + aspect + "'");
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (double& c : vec) c *= inv_norm;
    sim.index_[aspect] = sim.aspects_.size();
    sim.aspects_.push_back(std::move(aspect));
    sim.unit_vectors_.push_back(std::move(vec));
  }
  const std::size_t n = sim.aspects_.size();
  if (n <= kMaterializeLimit) {
    sim.matrix_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      sim.matrix_[i * n + i] = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < sim.unit_vectors_[i].size(); ++d) {
          dot += sim.unit_vectors_[i][d] * sim.unit_vectors_[j][d];
        }
        dot = std::clamp(dot, -1.0, 1.0);
        sim.matrix_[i * n + j] = dot;
        sim.matrix_[j * n + i] = dot;
      }
    }
    sim.materialized_ = true;
  }
  return sim;
}

std::optional<std::size_t> SimilarityMatrix::index_of(const std::string& aspect) const {
  const auto it = index_.find(aspect);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double SimilarityMatrix::value(std::size_t i, std::size_t j) const {
  if (materialized_) return matrix_[i * aspects_.size() + j];
  if (i == j) return 1.0;
  double dot = 0.0;
  for (std::size_t d = 0; d < unit_vectors_[i].size(); ++d) {
    dot += unit_vectors_[i][d] * unit_vectors_[j][d];
  }
  return std::clamp(dot, -1.0, 1.0);
}

std::vector<ScoredAspect> SimilarityMatrix::top_k_similar(const std::string& aspect,
                                                          std::size_t k) const {
  const auto row = index_of(aspect);
  if (!row.has_value()) {
    throw std::invalid_argument("top_k_similar: unknown aspect '" + aspect + "'");
  }
  if (k < 1 || k > size()) {
    throw std::invalid_argument("top_k_similar: k=" + std::to_string(k) +
                                " outside [1, " + std::to_string(size()) + "]");
  }
  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto better = [&](std::size_t a, std::size_t b) {
    const double sa = value(*row, a), sb = value(*row, b);
    if (sa != sb) return sa > sb;
    return aspects_[a] < aspects_[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), better);
  std::vector<ScoredAspect> result;
  result.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    result.push_back({aspects_[order[i]], value(*row, order[i])});
  }
  return result;
}

}  // namespace sentaug

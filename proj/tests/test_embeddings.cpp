#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "sentaug/embeddings.hpp"
#include "sentaug/error.hpp"
#include "sentaug/rng.hpp"

using namespace sentaug;

namespace {

EmbeddingTable parse_text(const std::string& text) {
  std::istringstream in(text);
  return EmbeddingTable::parse(in);
}

}  // namespace

TEST_CASE("embedding table parses the plain text format") {
  EmbeddingTable table = parse_text(
      "food 1.0 0.0 0.25\n"
      "\n"
      "Pizza -1 2 3\n"
      "ok 0.5 0.5 0.5\n");
  CHECK(table.size() == 3);
  CHECK(table.dimension() == 3);
  REQUIRE(table.find("food") != nullptr);
  CHECK((*table.find("food"))[2] == doctest::Approx(0.25));
  CHECK(table.find("missing") == nullptr);
}

TEST_CASE("embedding lookup tries the exact form before lowercasing") {
  EmbeddingTable table = parse_text("Food 1 0\nfood 0 1\nbar 2 2\n");
  REQUIRE(table.find("Food") != nullptr);
  CHECK((*table.find("Food"))[0] == doctest::Approx(1.0));
  REQUIRE(table.find("food") != nullptr);
  CHECK((*table.find("food"))[1] == doctest::Approx(1.0));
  // No exact entry: the query is lowercased and looked up again.
  REQUIRE(table.find("BAR") != nullptr);
  CHECK((*table.find("BAR"))[0] == doctest::Approx(2.0));
  // Only the query is folded; a cased table entry stays reachable solely by
  // its exact form.
  EmbeddingTable cased = parse_text("Bar 2 2\n");
  CHECK(cased.find("Bar") != nullptr);
  CHECK(cased.find("BAR") == nullptr);
  CHECK(table.find("BAZ") == nullptr);
}

TEST_CASE("embedding parse errors name the offending line") {
  CHECK_THROWS_AS(parse_text(""), DataError);
  CHECK_THROWS_AS(parse_text("\n\n"), DataError);
  CHECK_THROWS_WITH_AS(parse_text("a 1 2\nb 1 x\n"),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(parse_text("a 1 2\nb 1\n"),
                       doctest::Contains("dimension mismatch"), DataError);
  CHECK_THROWS_WITH_AS(parse_text("lonely\n"),
                       doctest::Contains("no vector components"), DataError);
  CHECK_THROWS_AS(parse_text("a 1 inf\n"), DataError);
}

TEST_CASE("cosine matches the definition and rejects degenerate input") {
  std::vector<double> u = {3.0, 4.0};
  std::vector<double> v = {4.0, -3.0};
  CHECK(cosine(u, u) == doctest::Approx(1.0));
  CHECK(cosine(u, v) == doctest::Approx(0.0));
  std::vector<double> w = {1.0, 2.0};
  // dot / (|u| |w|) computed by hand: (3 + 8) / (5 * sqrt 5).
  CHECK(cosine(u, w) == doctest::Approx(11.0 / (5.0 * std::sqrt(5.0))));
  std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(cosine(u, zero), std::invalid_argument);
  std::vector<double> longer = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(cosine(u, longer), std::invalid_argument);
}

TEST_CASE("aspect_vector averages in-vocabulary tokens and counts the rest") {
  EmbeddingTable table = parse_text("good 2 0\nfood 0 4\nanti -1 0\n");

  std::vector<std::string> both = {"good", "food"};
  AspectVector v = aspect_vector(table, both);
  CHECK(v.valid);
  CHECK(v.oov_count == 0);
  CHECK(v.vector == std::vector<double>{1.0, 2.0});

  std::vector<std::string> partial = {"good", "nowhere"};
  v = aspect_vector(table, partial);
  CHECK(v.valid);
  CHECK(v.oov_count == 1);
  CHECK(v.vector == std::vector<double>{2.0, 0.0});

  std::vector<std::string> all_oov = {"nope", "nada"};
  v = aspect_vector(table, all_oov);
  CHECK_FALSE(v.valid);
  CHECK(v.oov_count == 2);

  // Tokens cancel to the zero vector: unrankable.
  EmbeddingTable cancel = parse_text("p 1 0\nn -1 0\n");
  std::vector<std::string> opposed = {"p", "n"};
  v = aspect_vector(cancel, opposed);
  CHECK_FALSE(v.valid);

  CHECK_THROWS_AS(aspect_vector(table, std::vector<std::string>{}),
                  std::invalid_argument);
}

TEST_CASE("similarity matrix agrees with a brute-force cosine oracle") {
  Rng rng(404);
  const std::size_t n = 30, dim = 6;
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> vec(dim);
    for (double& c : vec) c = rng.normal(0.0, 1.0);
    entries.emplace_back("a" + std::to_string(i), std::move(vec));
  }
  std::vector<std::pair<std::string, std::vector<double>>> copy = entries;
  SimilarityMatrix sim = SimilarityMatrix::build(std::move(copy));
  REQUIRE(sim.size() == n);

  for (std::size_t i = 0; i < n; ++i) {
    REQUIRE(sim.index_of(entries[i].first).has_value());
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = cosine(entries[i].second, entries[j].second);
      CHECK(sim.value(*sim.index_of(entries[i].first), *sim.index_of(entries[j].first)) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }

  for (std::size_t k : {std::size_t{1}, std::size_t{5}, n}) {
    for (std::size_t q = 0; q < n; ++q) {
      // Oracle: full sort by similarity descending, ties by ascending name.
      std::vector<std::pair<double, std::string>> scored;
      for (std::size_t j = 0; j < n; ++j) {
        scored.emplace_back(cosine(entries[q].second, entries[j].second),
                            entries[j].first);
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      std::vector<ScoredAspect> got = sim.top_k_similar(entries[q].first, k);
      REQUIRE(got.size() == k);
      for (std::size_t r = 0; r < k; ++r) {
        CHECK(got[r].aspect == scored[r].second);
        CHECK(got[r].similarity == doctest::Approx(scored[r].first).epsilon(1e-12));
      }
    }
  }

  // The queried aspect itself ranks first with similarity one.
  std::vector<ScoredAspect> self = sim.top_k_similar("a0", 1);
  CHECK(self[0].aspect == "a0");
  CHECK(self[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("similarity matrix validates its inputs") {
  std::vector<std::pair<std::string, std::vector<double>>> dup = {
      {"x", {1.0}}, {"x", {2.0}}};
  CHECK_THROWS_AS(SimilarityMatrix::build(std::move(dup)), std::invalid_argument);
  std::vector<std::pair<std::string, std::vector<double>>> zero = {{"x", {0.0, 0.0}}};
  CHECK_THROWS_AS(SimilarityMatrix::build(std::move(zero)), std::invalid_argument);

  std::vector<std::pair<std::string, std::vector<double>>> ok = {{"x", {1.0}},
                                                                 {"y", {2.0}}};
  SimilarityMatrix sim = SimilarityMatrix::build(std::move(ok));
  CHECK_FALSE(sim.index_of("zzz").has_value());
  CHECK_THROWS_AS(sim.top_k_similar("zzz", 1), std::invalid_argument);
  CHECK_THROWS_AS(sim.top_k_similar("x", 0), std::invalid_argument);
  CHECK_THROWS_AS(sim.top_k_similar("x", 3), std::invalid_argument);
  CHECK(sim.value(0, 1) <= 1.0);  // clamped even for parallel vectors
}

TEST_CASE("similarity values stay exact above the materialization limit") {
  const std::size_t n = SimilarityMatrix::kMaterializeLimit + 1;
  Rng rng(77);
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> vec = {rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
    if (vec[0] == 0.0 && vec[1] == 0.0) vec[0] = 1.0;
    entries.emplace_back("w" + std::to_string(i), std::move(vec));
  }
  std::vector<std::pair<std::string, std::vector<double>>> copy = entries;
  SimilarityMatrix sim = SimilarityMatrix::build(std::move(copy));
  REQUIRE(sim.size() == n);
  for (std::size_t j : {std::size_t{0}, std::size_t{17}, n - 1}) {
    const double expected = cosine(entries[5].second, entries[j].second);
    CHECK(sim.value(5, j) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Brute-force oracle for one query over the lazily computed entries.
  std::vector<std::pair<double, std::string>> scored;
  for (std::size_t j = 0; j < n; ++j) {
    scored.emplace_back(cosine(entries[9].second, entries[j].second), entries[j].first);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<ScoredAspect> got = sim.top_k_similar("w9", 4);
  for (std::size_t r = 0; r < 4; ++r) CHECK(got[r].aspect == scored[r].second);
}

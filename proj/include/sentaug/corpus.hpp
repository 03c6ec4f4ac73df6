#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sentaug/syntax.hpp"

namespace sentaug {

// The three-way label set.
enum class Polarity { kPositive, kNegative, kNeutral };

std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);  // throws DataError

// One labeled (sentence, aspect span, polarity, implicit-flag) record.
// `heads` optionally carries the sentence's dependency parse (1-based head
// indices, 0 = root), validated as a tree at load time.
struct AspectInstance {
  std::string id;
  std::vector<std::string> tokens;
  TokenRange aspect_span;
  Polarity polarity = Polarity::kNeutral;
  bool implicit = false;
  std::optional<std::vector<std::size_t>> heads;

  std::vector<std::string> aspect_tokens() const;
  // Lowercased, space-joined aspect term; the comparison key everywhere.
  std::string aspect_key() const;

  bool operator==(const AspectInstance&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<AspectInstance> instances;

  std::size_t size() const { return instances.size(); }
  bool operator==(const Dataset&) const = default;
};

// JSON-Lines, one instance per line:
//   {"id": str, "tokens": [str], "aspect_from": int, "aspect_to": int,
//    "polarity": "positive"|"negative"|"neutral", "implicit": bool,
//    "heads": [int] (optional)}
// Every invariant is enforced here; violations raise DataError naming the
// line and field.
Dataset load_dataset(std::istream& in, std::string name = "");
void save_dataset(const Dataset& dataset, std::ostream& out);

// Partition by the implicit flag, order preserved within each part.
struct ExplicitSplit {
  Dataset explicit_part;
  Dataset implicit_part;
};
ExplicitSplit split_explicit(const Dataset& dataset);

// Counts are per aspect instance (one sentence with two aspects counts
// twice), which the report notes explicitly.
struct DatasetStatistics {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t neutral = 0;
  std::size_t implicit = 0;
  std::size_t total = 0;

  static constexpr const char* kCountingNote =
      "counts are per aspect instance, not per sentence";
};
DatasetStatistics statistics(const Dataset& dataset);

// Attaches parses to instances by order: CoNLL-U sentence i goes with
// instance i. Token counts and forms must match.
void attach_trees(Dataset& dataset, const std::vector<ConlluSentence>& sentences);

}  // namespace sentaug

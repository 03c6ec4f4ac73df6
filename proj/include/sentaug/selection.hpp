#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sentaug/corpus.hpp"
#include "sentaug/embeddings.hpp"
#include "sentaug/rng.hpp"

namespace sentaug {

// One generator training example: the input sentence, an explicit target of
// the same polarity over a similar aspect, and (when available) an explicit
// opposite-polarity sentence over the same aspect whose near-aspect words
// become the unlikelihood negatives.
struct TrainingTriplet {
  AspectInstance input;
  AspectInstance positive_target;
  std::vector<std::string> aspect;  // the input's aspect term tokens
  std::optional<AspectInstance> negative_target;
  std::vector<std::string> negative_words;
};

struct SelectionConfig {
  std::size_t k_c = 2;  // similar-aspect count
  std::size_t k_n = 4;  // negative-word count
  std::uint64_t seed = 0;
};

// Positive -> Negative, Negative -> Positive; Neutral draws one of the two
// from the rng.
Polarity opposite_polarity(Polarity p, Rng& rng);

// Distinct aspect keys of `data` paired with their mean-embedding vectors.
// Aspects that are fully out of vocabulary (or whose mean is the zero
// vector) are left out; they cannot be ranked.
SimilarityMatrix build_aspect_similarity(const Dataset& data, const EmbeddingTable& table);

// Members of `explicit_set` whose aspect key is among the k_c most similar
// aspects of the input's and whose polarity matches. The input itself is
// excluded by id; the same sentence under a different aspect id may appear.
// k_c is clamped to the number of ranked aspects.
std::vector<const AspectInstance*> build_candidates(const AspectInstance& input,
                                                    const Dataset& explicit_set,
                                                    const SimilarityMatrix& sim,
                                                    std::size_t k_c);

struct SkippedInstance {
  std::string id;
  std::string reason;
};

struct SelectionResult {
  std::vector<TrainingTriplet> triplets;
  std::vector<SkippedInstance> skipped;
};

// One triplet per instance with a non-empty candidate set; the rest land in
// the skip report. Positive and negative targets are drawn with a stream
// split per instance index, so output is reproducible and independent of
// evaluation order.
SelectionResult build_training_set(const Dataset& data, const SelectionConfig& config,
                                   const EmbeddingTable& table);

// JSON-Lines: ids, resolved token sequences, and the negative word list.
void save_triplets(const SelectionResult& result, std::ostream& out);

}  // namespace sentaug

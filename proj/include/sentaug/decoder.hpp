#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sentaug/genmodel.hpp"
#include "sentaug/rng.hpp"

namespace sentaug {

// A beam entry. tokens always starts with <s>; the generated part is
// everything after it. logprob is the sum of the log model probabilities of
// the generated tokens.
struct ScoredPrefix {
  std::vector<std::size_t> tokens;
  double logprob = 0.0;

  std::span<const std::size_t> generated() const {
    return std::span<const std::size_t>(tokens).subspan(1);
  }

  bool operator==(const ScoredPrefix&) const = default;
};

struct Beam {
  std::vector<ScoredPrefix> prefixes;

  bool operator==(const Beam&) const = default;
};

// The forced token sequences: the input aspect term plus its similar
// aspects, encoded. A sequence is satisfied when it appears contiguously in
// the generated tokens.
class ConstraintSet {
 public:
  // Throws std::invalid_argument when `forced` is empty or any sequence is
  // empty. Duplicate sequences are collapsed.
  explicit ConstraintSet(std::vector<std::vector<std::size_t>> forced);

  const std::vector<std::vector<std::size_t>>& forced() const { return forced_; }

  bool satisfied(std::span<const std::size_t> generated) const;

  // The next token of every unsatisfied constraint given the longest
  // partial match ending at the end of `generated` (the first token when
  // nothing is matched). Empty once some constraint is satisfied.
  // Ascending, deduplicated.
  std::vector<std::size_t> needed_tokens(std::span<const std::size_t> generated) const;

 private:
  std::vector<std::vector<std::size_t>> forced_;
};

// Candidate words for one expansion step: the z most probable tokens (ties
// by ascending id) unioned with the constraint set's needed tokens for this
// prefix. Ascending, deduplicated. The overload without a prefix is the
// fresh-start state (every constraint's first token qualifies).
std::vector<std::size_t> candidate_words(std::span<const double> dist, std::size_t z,
                                         const ConstraintSet& constraints,
                                         std::span<const std::size_t> generated);
std::vector<std::size_t> candidate_words(std::span<const double> dist, std::size_t z,
                                         const ConstraintSet& constraints);

// A completed generation: satisfied constraints and a trailing </s>.
struct FinishedSentence {
  std::vector<std::size_t> tokens;  // <s> ... </s>
  double logprob = 0.0;
};

// On beam overflow, either draw uniformly at random (the default) or keep
// the V best-scoring candidates.
enum class DownselectPolicy { kRandom, kTop };

struct StepResult {
  std::optional<FinishedSentence> finished;  // set when the step terminated
  Beam beam;                                 // the next beam otherwise
};

// One search step: expand every prefix with its candidate words, return the
// best candidate that contains a forced sequence and ends with </s>, or the
// downselected next beam. The rng is consumed only when the candidate pool
// overflows V under the random policy.
StepResult cbs_step(const Beam& beam, const ConditionalLM& model,
                    const Condition& condition, const ConstraintSet& constraints,
                    std::size_t z, std::size_t beam_width, Rng& rng,
                    DownselectPolicy policy = DownselectPolicy::kRandom);

struct DecodeOptions {
  std::size_t top_z = 3;
  std::size_t beam_width = 6;
  std::size_t max_steps = 30;
  DownselectPolicy downselect = DownselectPolicy::kRandom;
};

// Step budget exhausted: carries the best constraint-satisfying prefix seen
// (finished or not) and the final beam, so failures stay inspectable.
struct FailureReport {
  std::optional<ScoredPrefix> best_constrained;
  Beam final_beam;
  std::size_t steps_taken = 0;
};

using GenerateResult = std::variant<FinishedSentence, FailureReport>;

GenerateResult generate(const ConditionalLM& model, const Condition& condition,
                        const ConstraintSet& constraints, const DecodeOptions& options,
                        Rng& rng);

// The sentence as words: the leading <s> and one trailing </s> dropped.
std::vector<std::string> surface_tokens(const Vocabulary& vocab,
                                        std::span<const std::size_t> tokens);

}  // namespace sentaug

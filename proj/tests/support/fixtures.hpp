#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentaug/corpus.hpp"
#include "sentaug/decoder.hpp"
#include "sentaug/embeddings.hpp"
#include "sentaug/genmodel.hpp"
#include "sentaug/rng.hpp"
#include "sentaug/selection.hpp"

namespace sentaug::testing {

// Uniform random labeled tree: a random node is the root and every later
// node (in a shuffled order) attaches to a uniformly chosen earlier one.
// Returns 1-based head indices with 0 marking the root.
std::vector<std::size_t> random_tree_heads(Rng& rng, std::size_t n);

// Floyd-Warshall all-pairs distances over the undirected tree; the
// independent oracle for BFS-based distance code.
std::vector<std::vector<std::size_t>> all_pairs_tree_distances(
    const std::vector<std::size_t>& heads);

// A conditional model with an arbitrary prescribed distribution; lets tests
// pin exact probabilities.
class FunctionLM : public ConditionalLM {
 public:
  using Fn = std::function<std::vector<double>(const Condition&,
                                               std::span<const std::size_t>)>;

  FunctionLM(Vocabulary vocab, Fn fn) : vocab_(std::move(vocab)), fn_(std::move(fn)) {}

  const Vocabulary& vocab() const override { return vocab_; }
  std::vector<double> next_token_distribution(
      const Condition& condition, std::span<const std::size_t> prefix) const override {
    return fn_(condition, prefix);
  }

 private:
  Vocabulary vocab_;
  Fn fn_;
};

// A small review-like corpus with a known ground truth: eight aspects in
// three embedding clusters and hand-built parses. Explicit sentences read
//   the ASPECT was OPINION and we REACTION
// where a small set of opinion adjectives fully determines the label and the
// closing reaction verb is drawn from a wide polarity-matched lexicon.
// Implicit sentences are the same sentence with the opinion token deleted:
//   the ASPECT was and we REACTION
// so the label stays recoverable, but only through the many rare reaction
// verbs. One instance in three is implicit within each polarity. Instance
// count is exactly `total` (combinations cycle).
struct SyntheticCorpus {
  Dataset data;
  std::string embeddings_text;  // text accepted by EmbeddingTable::parse
};
SyntheticCorpus build_synthetic_corpus(std::size_t total);

// A dataset with exact per-polarity and implicit counts (two-token
// sentences; only the labels matter).
Dataset build_count_fixture(std::size_t positive, std::size_t negative,
                            std::size_t neutral, std::size_t implicit);

// --- Independent oracles ------------------------------------------------------

// Re-derives every training-pair selection rule from first principles
// (brute-force cosine rankings straight off the embedding table, no
// SimilarityMatrix) and returns one message per violated rule. Empty means
// the selection is fully compliant, including |triplets| + |skipped| = |data|.
std::vector<std::string> selection_violations(const Dataset& data,
                                              const SelectionResult& result,
                                              const EmbeddingTable& table,
                                              std::size_t k_c, std::size_t k_n);

// One named parameter tensor paired with its analytic gradient accumulator.
struct ParamTensor {
  std::string name;
  std::vector<double>* values;
  const std::vector<double>* analytic;
};

// Max guarded relative error between the analytic gradients and central
// finite differences of `loss` over every entry of every tensor. Step 1e-5;
// the error is |a - n| / max(1e-4, |a|, |n|), so near-zero gradients are
// compared absolutely at the 1e-8 scale instead of amplifying FD noise.
double max_gradient_error(const std::function<double()>& loss,
                          std::span<const ParamTensor> tensors);

// Exhaustive decoding oracle: scores every token sequence over the whole
// vocabulary with generated length <= max_len, keeps those that end in </s>
// and contain some forced sequence contiguously, and returns the best.
// `length` is the generated length including the trailing </s>.
struct EnumeratedBest {
  std::vector<std::size_t> tokens;  // <s> ... </s>
  double logprob = 0.0;
  std::size_t length = 0;
};
std::optional<EnumeratedBest> enumerate_best(const ConditionalLM& model,
                                             const Condition& condition,
                                             const ConstraintSet& constraints,
                                             std::size_t max_len);

// The same search restricted to one generated length.
std::optional<EnumeratedBest> enumerate_best_at_length(const ConditionalLM& model,
                                                       const Condition& condition,
                                                       const ConstraintSet& constraints,
                                                       std::size_t len);

// A conditional model whose step distributions are smooth pseudo-random
// jitters around uniform (each probability within +-12.5% of uniform before
// normalizing), keyed on (salt, condition, prefix). Under these
// distributions the best constraint-satisfying sequence is always one of
// the shortest, which is the regime where beam search with
// first-termination matches the exhaustive oracle.
FunctionLM jittered_lm(Vocabulary vocab, std::uint64_t salt);

// --- CLI harness ------------------------------------------------------------

// A per-process scratch directory (created on first use).
std::string scratch_dir();

// Writes content to <scratch>/<name> and returns the full path.
std::string write_scratch_file(const std::string& name, const std::string& content);

std::string read_file(const std::string& path);

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed CLI binary with the given argument string.
CliResult run_cli(const std::string& args);

}  // namespace sentaug::testing

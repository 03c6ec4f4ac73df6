#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sentaug/corpus.hpp"
#include "sentaug/decoder.hpp"
#include "sentaug/embeddings.hpp"
#include "sentaug/genmodel.hpp"
#include "sentaug/selection.hpp"

namespace sentaug {

// Every knob of a run. Defaults follow the method's published settings
// (k_c=2, k_n=4, beam width 6, top-z 3, 15 epochs); the rest are this
// implementation's own.
struct RunConfig {
  std::size_t k_c = 2;
  std::size_t k_n = 4;
  std::size_t beam_width = 6;
  std::size_t top_z = 3;
  std::size_t epochs = 15;
  double learning_rate = 0.1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t max_steps = 30;
  LossCoefficients coefficients;
  std::size_t dimension = 16;       // embedding width
  std::size_t hidden = 16;          // classifier hidden width
  double test_fraction = 0.3;       // experiment holdout share
  DownselectPolicy downselect = DownselectPolicy::kRandom;
  std::string dataset_path;
  std::string conllu_path;          // empty = no parses
  std::string embeddings_path;
  std::string out_dir;
};

// One flat JSON object whose keys mirror the RunConfig field names
// (`beam_select` takes "random" or "top"). Unknown keys or ill-typed values
// raise ConfigError. Values overwrite `base`; absent keys keep it.
RunConfig load_config(std::istream& in, RunConfig base = RunConfig());

// Range checks (counts ≥ 1, test_fraction ∈ [0, 1), finite non-negative
// learning rate); ConfigError on violation. load_config calls this; the CLI
// calls it again after flag overrides.
void validate_config(const RunConfig& config);

TrainOptions train_options(const RunConfig& config);
DecodeOptions decode_options(const RunConfig& config);

// Deterministic stratified holdout: within each (polarity, implicit) group,
// round(n * test_fraction) members are taken at evenly spaced positions
// (never the whole group). Instance order is preserved in both parts, and
// the split does not depend on the seed.
struct TrainTestSplit {
  Dataset train;
  Dataset test;
};
TrainTestSplit stratified_split(const Dataset& data, double test_fraction);

// An instance plus its generated explicit continuation. `combined` is
// exactly base.tokens followed by the augmentation (base.tokens alone when
// generation failed).
struct AugmentedInstance {
  AspectInstance base;
  std::optional<std::vector<std::string>> augmentation;
  std::vector<std::string> combined;
  std::optional<std::string> failure;
};

// The decoding constraints for one instance: its own aspect term plus the
// k_c most similar aspects known to `sim` (similar aspects with
// out-of-vocabulary words are dropped; the instance's own aspect never is).
ConstraintSet make_constraints(const Vocabulary& vocab, const AspectInstance& instance,
                               const SimilarityMatrix& sim, std::size_t k_c);

// One AugmentedInstance per input, generation failures carried as values.
// Deterministic given config.seed.
std::vector<AugmentedInstance> augment_dataset(const Dataset& data, const TinyLM& model,
                                               const SimilarityMatrix& sim,
                                               const RunConfig& config);

// JSON-Lines round-trip: dataset fields plus augmentation/combined/failure.
void save_augmented(std::span<const AugmentedInstance> augmented, std::ostream& out);
std::vector<AugmentedInstance> load_augmented(std::istream& in);

// Mean Shannon entropy (natural log, 0·log 0 = 0) of 3-way prediction
// vectors. Throws std::invalid_argument on an empty list.
double avg_entropy(std::span<const std::vector<double>> predictions);

struct EntropySubset {
  std::size_t n = 0;
  std::optional<double> value;  // absent for an empty subset
};

struct EntropyReport {
  EntropySubset all;
  EntropySubset explicit_part;
  EntropySubset implicit_part;
};

EntropyReport entropy_report(std::span<const AspectInstance> instances,
                             std::span<const std::vector<double>> predictions);

// Highest-probability class, ties to the lowest class index.
Polarity argmax_polarity(std::span<const double> probs);

struct SplitMetrics {
  std::size_t n = 0;
  std::optional<double> accuracy;
  std::optional<double> macro_f1;  // unweighted mean of per-class F1
};

struct EvaluationReport {
  SplitMetrics all;
  SplitMetrics explicit_part;
  SplitMetrics implicit_part;
};

EvaluationReport evaluate(std::span<const AspectInstance> instances,
                          std::span<const Polarity> predictions);

struct ArmReport {
  EvaluationReport metrics;
  EntropyReport entropy;
};

// The A/B comparison: a classification-only baseline against the full
// select → train → generate → augment pipeline, identically seeded, scored
// on the same holdout.
struct ExperimentReport {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t triplet_count = 0;
  std::size_t skipped_count = 0;
  std::size_t generation_successes = 0;
  std::size_t generation_failures = 0;
  ArmReport baseline;
  ArmReport augmented;
};

ExperimentReport run_experiment(const Dataset& data, const EmbeddingTable& table,
                                const RunConfig& config);

// Machine-readable report; a pure function of (report, config), so repeated
// runs emit byte-identical documents.
void write_experiment_json(const ExperimentReport& report, const RunConfig& config,
                           std::ostream& out);
// The same numbers as a fixed-width table for reading.
void write_experiment_table(const ExperimentReport& report, std::ostream& out);

// Single-arm reports for the evaluate/entropy subcommands.
void write_evaluation_json(const EvaluationReport& metrics, const EntropyReport& entropy,
                           std::ostream& out);
void write_entropy_json(const EntropyReport& entropy, std::ostream& out);

}  // namespace sentaug

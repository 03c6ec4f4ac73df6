#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentaug/corpus.hpp"
#include "sentaug/selection.hpp"

namespace sentaug {

// Probabilities are clamped here before any log.
inline constexpr double kProbFloor = 1e-12;

inline constexpr std::size_t kNumClasses = 3;
constexpr std::size_t polarity_index(Polarity p) { return static_cast<std::size_t>(p); }

// Ordered token <-> id bijection. The four reserved tokens always occupy the
// first ids; everything is stored lowercased.
class Vocabulary {
 public:
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";
  static constexpr const char* kSep = "<sep>";
  static constexpr const char* kUnk = "<unk>";
  // Aspect-span markers for the classifier input; added by from_dataset,
  // not part of the reserved core.
  static constexpr const char* kAspectOpen = "<a>";
  static constexpr const char* kAspectClose = "</a>";

  // Reserved tokens only.
  Vocabulary();
  // Reserved tokens followed by `content` (lowercased; duplicates and
  // collisions with reserved tokens raise std::invalid_argument).
  explicit Vocabulary(std::vector<std::string> content);
  // Reserved tokens, the two aspect markers, then every distinct sentence
  // token of `data`, lowercased and sorted.
  static Vocabulary from_dataset(const Dataset& data);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }

  bool contains(const std::string& token) const;
  std::size_t id(const std::string& token) const;  // throws std::out_of_range
  std::size_t id_or_unk(const std::string& token) const;

  std::size_t bos() const { return 0; }
  std::size_t eos() const { return 1; }
  std::size_t sep() const { return 2; }
  std::size_t unk() const { return 3; }

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const std::size_t> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// What the generator is conditioned on: the aspect term and the source
// sentence, as token ids.
struct Condition {
  std::vector<std::size_t> aspect;
  std::vector<std::size_t> source;

  bool operator==(const Condition&) const = default;
};

// Anything that yields a next-token distribution given (aspect, source,
// prefix). The returned vector has one entry per vocabulary id, entries are
// non-negative and sum to 1 within 1e-9.
class ConditionalLM {
 public:
  virtual ~ConditionalLM() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual std::vector<double> next_token_distribution(
      const Condition& condition, std::span<const std::size_t> prefix) const = 0;
};

// Dense row-major matrix, the only shape the models need.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

// Mean-of-embeddings conditional model: the context vector is the mean of
// the embeddings of (aspect ++ <sep> ++ source ++ <sep> ++ prefix); logits
// are context * output + bias; probabilities are the softmax. Small enough
// that every gradient is hand-derived and finite-difference checkable.
class TinyLM : public ConditionalLM {
 public:
  TinyLM(Vocabulary vocab, std::size_t dimension, std::uint64_t seed);
  static TinyLM from_parts(Vocabulary vocab, Matrix embedding, Matrix output,
                           std::vector<double> bias);

  const Vocabulary& vocab() const override { return vocab_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t parameter_count() const;

  // aspect ++ <sep> ++ source ++ <sep> ++ prefix. Never empty: the two
  // separators are always present.
  std::vector<std::size_t> context_ids(const Condition& condition,
                                       std::span<const std::size_t> prefix) const;
  std::vector<double> context_vector(std::span<const std::size_t> ids) const;
  std::vector<double> distribution_from_context(std::span<const double> context) const;
  std::vector<double> next_token_distribution(
      const Condition& condition, std::span<const std::size_t> prefix) const override;

  Matrix& embedding() { return embedding_; }
  const Matrix& embedding() const { return embedding_; }
  Matrix& output() { return output_; }
  const Matrix& output() const { return output_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  TinyLM() = default;

  Vocabulary vocab_;
  std::size_t dimension_ = 0;
  Matrix embedding_;  // |V| x D
  Matrix output_;     // D x |V|
  std::vector<double> bias_;
};

// Mean-pool the (shared) TinyLM embeddings over the marked combined
// sentence, one tanh hidden layer, 3-way softmax.
class Classifier {
 public:
  Classifier(std::size_t dimension, std::size_t hidden, std::uint64_t seed);
  static Classifier from_parts(Matrix hidden_w, std::vector<double> hidden_b,
                               Matrix out_w, std::vector<double> out_b);

  std::size_t dimension() const { return hidden_w_.rows; }
  std::size_t hidden_size() const { return hidden_w_.cols; }
  std::size_t parameter_count() const;

  // Probability simplex over {positive, negative, neutral}.
  std::vector<double> predict(const TinyLM& lm, std::span<const std::size_t> tokens) const;

  Matrix& hidden_w() { return hidden_w_; }
  const Matrix& hidden_w() const { return hidden_w_; }
  std::vector<double>& hidden_b() { return hidden_b_; }
  const std::vector<double>& hidden_b() const { return hidden_b_; }
  Matrix& out_w() { return out_w_; }
  const Matrix& out_w() const { return out_w_; }
  std::vector<double>& out_b() { return out_b_; }
  const std::vector<double>& out_b() const { return out_b_; }

 private:
  Classifier() = default;

  Matrix hidden_w_;             // D x H
  std::vector<double> hidden_b_;  // H
  Matrix out_w_;                // H x 3
  std::vector<double> out_b_;   // 3
};

// Gradient accumulators, shaped like the parameters they mirror.
struct LmGradients {
  Matrix d_embedding;
  Matrix d_output;
  std::vector<double> d_bias;

  explicit LmGradients(const TinyLM& model);
  void scale(double factor);
};

struct ClassifierGradients {
  Matrix d_embedding;  // flows into the shared embedding table
  Matrix d_hidden_w;
  std::vector<double> d_hidden_b;
  Matrix d_out_w;
  std::vector<double> d_out_b;

  ClassifierGradients(const TinyLM& model, const Classifier& classifier);
  void scale(double factor);
};

// Syntax-distance-weighted generation loss:
//   -sum_j weights[j] * log p(target[j] | condition; target[<j])
// weights and target must have equal length.
double loss_sdw(const ConditionalLM& model, const Condition& condition,
                std::span<const std::size_t> target, std::span<const double> weights);
double loss_sdw_grad(const TinyLM& model, const Condition& condition,
                     std::span<const std::size_t> target, std::span<const double> weights,
                     LmGradients& grad);

// Unlikelihood contrast against the negative word set:
//   -sum_j log [ p_j(target[j]) / (p_j(target[j]) + sum_{w in negatives} p_j(w)) ]
// Zero when `negatives` is empty. `negatives` must not contain any target id.
double loss_ucr(const ConditionalLM& model, const Condition& condition,
                std::span<const std::size_t> target,
                std::span<const std::size_t> negatives);
double loss_ucr_grad(const TinyLM& model, const Condition& condition,
                     std::span<const std::size_t> target,
                     std::span<const std::size_t> negatives, LmGradients& grad);

// Classification cross-entropy -log yhat[label].
double loss_cls(const TinyLM& lm, const Classifier& classifier,
                std::span<const std::size_t> tokens, Polarity label);
double loss_cls_grad(const TinyLM& lm, const Classifier& classifier,
                     std::span<const std::size_t> tokens, Polarity label,
                     ClassifierGradients& grad);

// The combined objective: the plain unweighted sum.
double loss_total(double l1, double l2, double l3);

// --- Training -------------------------------------------------------------

// Sentence tokens with the aspect span bracketed by <a> ... </a>; when an
// augmentation is given it is appended after a <sep>. This is the
// classifier's whole view of an instance.
std::vector<std::size_t> classifier_input(const Vocabulary& vocab,
                                          const AspectInstance& instance,
                                          const std::vector<std::string>* augmentation);

struct GenerationExample {
  Condition condition;
  std::vector<std::size_t> target;   // positive-target ids, </s> appended
  std::vector<double> weights;       // one per target id (the </s> gets 1.0)
  std::vector<std::size_t> negatives;  // distinct ids; <unk> never included
};

struct ClassificationExample {
  std::vector<std::size_t> tokens;
  Polarity label = Polarity::kNeutral;
};

struct TrainingExample {
  std::optional<GenerationExample> generation;
  ClassificationExample classification;
};

// A triplet trains all three losses. The classifier sees the source
// sentence joined with the gold target (teacher forcing).
TrainingExample encode_triplet(const Vocabulary& vocab, const TrainingTriplet& triplet);
// An instance without a triplet still trains the classifier.
TrainingExample encode_classification_only(const Vocabulary& vocab,
                                           const AspectInstance& instance);

struct LossCoefficients {
  double sdw = 1.0;
  double ucr = 1.0;
  double cls = 1.0;
};

struct TrainOptions {
  std::size_t epochs = 15;
  double learning_rate = 0.1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  LossCoefficients coefficients;
};

struct EpochTrace {
  std::size_t epoch = 0;  // 1-based
  double l1 = 0.0;        // per-example means over the epoch
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
};

// Mini-batch gradient descent over shuffled examples; deterministic given
// the seed. Throws std::invalid_argument on an empty example list and
// NumericError when any loss goes non-finite.
std::vector<EpochTrace> train(TinyLM& model, Classifier& classifier,
                              const std::vector<TrainingExample>& examples,
                              const TrainOptions& options);

// CSV with header `epoch,l1,l2,l3,total`.
void save_trace_csv(std::span<const EpochTrace> trace, std::ostream& out);

// Versioned JSON checkpoint of both parameter sets.
struct Checkpoint {
  TinyLM model;
  Classifier classifier;
};

void save_checkpoint(const TinyLM& model, const Classifier& classifier, std::ostream& out);
Checkpoint load_checkpoint(std::istream& in);  // throws DataError on malformed input

}  // namespace sentaug

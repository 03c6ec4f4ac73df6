#include "sentaug/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "sentaug/error.hpp"
#include "sentaug/rng.hpp"
#include "sentaug/strings.hpp"
#include "sentaug/syntax.hpp"

namespace sentaug {

namespace {

const char* const kReserved[] = {Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kSep,
                                 Vocabulary::kUnk};

std::vector<double> softmax(std::vector<double> z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

double clamped_log(double p) { return std::log(std::max(p, kProbFloor)); }

void add_scaled(std::vector<double>& y, std::span<const double> x, double a) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void fill_normal(std::vector<double>& values, Rng& rng, double stddev) {
  for (double& v : values) v = rng.normal(0.0, stddev);
}

}  // namespace

// --- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const char* tok : kReserved) {
    index_.emplace(tok, tokens_.size());
    tokens_.push_back(tok);
  }
}

Vocabulary::Vocabulary(std::vector<std::string> content) : Vocabulary() {
  for (std::string& tok : content) {
    std::string lowered = lowercase(std::move(tok));
    if (!index_.emplace(lowered, tokens_.size()).second) {
      throw std::invalid_argument("duplicate vocabulary token: " + lowered);
    }
    tokens_.push_back(std::move(lowered));
  }
}

Vocabulary Vocabulary::from_dataset(const Dataset& data) {
  std::set<std::string> content;
  for (const auto& inst : data.instances) {
    for (const auto& tok : inst.tokens) content.insert(lowercase(tok));
  }
  std::vector<std::string> extra{kAspectOpen, kAspectClose};
  for (const auto& tok : content) {
    if (std::find(std::begin(kReserved), std::end(kReserved), tok) !=
        std::end(kReserved)) {
      continue;
    }
    if (tok == kAspectOpen || tok == kAspectClose) continue;
    extra.push_back(tok);
  }
  return Vocabulary(std::move(extra));
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(lowercase(token)) > 0;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(lowercase(token));
  if (it == index_.end()) throw std::out_of_range("token not in vocabulary: " + token);
  return it->second;
}

std::size_t Vocabulary::id_or_unk(const std::string& token) const {
  auto it = index_.find(lowercase(token));
  return it == index_.end() ? unk() : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(id_or_unk(tok));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const std::size_t> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(token(id));
  return out;
}

// --- TinyLM -----------------------------------------------------------------

TinyLM::TinyLM(Vocabulary vocab, std::size_t dimension, std::uint64_t seed)
    : vocab_(std::move(vocab)),
      dimension_(dimension),
      embedding_(vocab_.size(), dimension),
      output_(dimension, vocab_.size()),
      bias_(vocab_.size(), 0.0) {
  if (dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
  Rng emb_rng = Rng::split(seed, 0);
  Rng out_rng = Rng::split(seed, 1);
  fill_normal(embedding_.data, emb_rng, 0.1);
  fill_normal(output_.data, out_rng, 0.1);
}

TinyLM TinyLM::from_parts(Vocabulary vocab, Matrix embedding, Matrix output,
                          std::vector<double> bias) {
  std::size_t v = vocab.size();
  if (embedding.rows != v || output.cols != v || bias.size() != v ||
      embedding.cols != output.rows || embedding.cols == 0) {
    throw std::invalid_argument("model parameter shapes do not agree");
  }
  TinyLM model;
  model.vocab_ = std::move(vocab);
  model.dimension_ = embedding.cols;
  model.embedding_ = std::move(embedding);
  model.output_ = std::move(output);
  model.bias_ = std::move(bias);
  return model;
}

std::size_t TinyLM::parameter_count() const {
  return embedding_.data.size() + output_.data.size() + bias_.size();
}

std::vector<std::size_t> TinyLM::context_ids(const Condition& condition,
                                             std::span<const std::size_t> prefix) const {
  std::vector<std::size_t> ids;
  ids.reserve(condition.aspect.size() + condition.source.size() + prefix.size() + 2);
  ids.insert(ids.end(), condition.aspect.begin(), condition.aspect.end());
  ids.push_back(vocab_.sep());
  ids.insert(ids.end(), condition.source.begin(), condition.source.end());
  ids.push_back(vocab_.sep());
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  return ids;
}

std::vector<double> TinyLM::context_vector(std::span<const std::size_t> ids) const {
  std::vector<double> ctx(dimension_, 0.0);
  for (std::size_t id : ids) {
    for (std::size_t d = 0; d < dimension_; ++d) ctx[d] += embedding_.at(id, d);
  }
  double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : ctx) v *= inv;
  return ctx;
}

std::vector<double> TinyLM::distribution_from_context(std::span<const double> context) const {
  std::vector<double> z(bias_);
  for (std::size_t d = 0; d < dimension_; ++d) {
    double c = context[d];
    for (std::size_t v = 0; v < vocab_.size(); ++v) z[v] += c * output_.at(d, v);
  }
  return softmax(std::move(z));
}

std::vector<double> TinyLM::next_token_distribution(
    const Condition& condition, std::span<const std::size_t> prefix) const {
  return distribution_from_context(context_vector(context_ids(condition, prefix)));
}

// --- Classifier -------------------------------------------------------------

Classifier::Classifier(std::size_t dimension, std::size_t hidden, std::uint64_t seed)
    : hidden_w_(dimension, hidden),
      hidden_b_(hidden, 0.0),
      out_w_(hidden, kNumClasses),
      out_b_(kNumClasses, 0.0) {
  if (dimension == 0 || hidden == 0) {
    throw std::invalid_argument("classifier sizes must be positive");
  }
  Rng h_rng = Rng::split(seed, 2);
  Rng o_rng = Rng::split(seed, 3);
  fill_normal(hidden_w_.data, h_rng, 0.1);
  fill_normal(out_w_.data, o_rng, 0.1);
}

Classifier Classifier::from_parts(Matrix hidden_w, std::vector<double> hidden_b,
                                  Matrix out_w, std::vector<double> out_b) {
  if (hidden_w.rows == 0 || hidden_w.cols == 0 || hidden_b.size() != hidden_w.cols ||
      out_w.rows != hidden_w.cols || out_w.cols != kNumClasses ||
      out_b.size() != kNumClasses) {
    throw std::invalid_argument("classifier parameter shapes do not agree");
  }
  Classifier cls;
  cls.hidden_w_ = std::move(hidden_w);
  cls.hidden_b_ = std::move(hidden_b);
  cls.out_w_ = std::move(out_w);
  cls.out_b_ = std::move(out_b);
  return cls;
}

std::size_t Classifier::parameter_count() const {
  return hidden_w_.data.size() + hidden_b_.size() + out_w_.data.size() + out_b_.size();
}

namespace {

struct ClassifierForward {
  std::vector<double> pooled;  // D
  std::vector<double> hidden;  // H, post-tanh
  std::vector<double> probs;   // kNumClasses
};

ClassifierForward classifier_forward(const TinyLM& lm, const Classifier& cls,
                                     std::span<const std::size_t> tokens) {
  if (tokens.empty()) throw std::invalid_argument("classifier input must be non-empty");
  if (lm.dimension() != cls.dimension()) {
    throw std::invalid_argument("classifier dimension does not match the model");
  }
  ClassifierForward fwd;
  fwd.pooled = lm.context_vector(tokens);
  std::size_t h_size = cls.hidden_size();
  fwd.hidden.assign(h_size, 0.0);
  for (std::size_t h = 0; h < h_size; ++h) {
    double a = cls.hidden_b()[h];
    for (std::size_t d = 0; d < cls.dimension(); ++d) {
      a += fwd.pooled[d] * cls.hidden_w().at(d, h);
    }
    fwd.hidden[h] = std::tanh(a);
  }
  std::vector<double> z(cls.out_b());
  for (std::size_t h = 0; h < h_size; ++h) {
    double v = fwd.hidden[h];
    for (std::size_t c = 0; c < kNumClasses; ++c) z[c] += v * cls.out_w().at(h, c);
  }
  fwd.probs = softmax(std::move(z));
  return fwd;
}

}  // namespace

std::vector<double> Classifier::predict(const TinyLM& lm,
                                        std::span<const std::size_t> tokens) const {
  return classifier_forward(lm, *this, tokens).probs;
}

// --- Gradient accumulators --------------------------------------------------

LmGradients::LmGradients(const TinyLM& model)
    : d_embedding(model.embedding().rows, model.embedding().cols),
      d_output(model.output().rows, model.output().cols),
      d_bias(model.bias().size(), 0.0) {}

void LmGradients::scale(double factor) {
  for (double& v : d_embedding.data) v *= factor;
  for (double& v : d_output.data) v *= factor;
  for (double& v : d_bias) v *= factor;
}

ClassifierGradients::ClassifierGradients(const TinyLM& model, const Classifier& classifier)
    : d_embedding(model.embedding().rows, model.embedding().cols),
      d_hidden_w(classifier.hidden_w().rows, classifier.hidden_w().cols),
      d_hidden_b(classifier.hidden_b().size(), 0.0),
      d_out_w(classifier.out_w().rows, classifier.out_w().cols),
      d_out_b(classifier.out_b().size(), 0.0) {}

void ClassifierGradients::scale(double factor) {
  for (double& v : d_embedding.data) v *= factor;
  for (double& v : d_hidden_w.data) v *= factor;
  for (double& v : d_hidden_b) v *= factor;
  for (double& v : d_out_w.data) v *= factor;
  for (double& v : d_out_b) v *= factor;
}

// --- Losses -----------------------------------------------------------------

namespace {

// Pushes one step's logit-space gradient g through the linear layer and the
// mean-of-embeddings context into the accumulators.
void backprop_step(const TinyLM& model, std::span<const std::size_t> ids,
                   std::span<const double> ctx, std::span<const double> g,
                   LmGradients& grad) {
  std::size_t dim = model.dimension();
  std::size_t vsize = model.vocab().size();
  add_scaled(grad.d_bias, g, 1.0);
  std::vector<double> d_ctx(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    double c = ctx[d];
    double acc = 0.0;
    for (std::size_t v = 0; v < vsize; ++v) {
      double gv = g[v];
      grad.d_output.at(d, v) += c * gv;
      acc += model.output().at(d, v) * gv;
    }
    d_ctx[d] = acc;
  }
  double inv = 1.0 / static_cast<double>(ids.size());
  for (std::size_t id : ids) {
    for (std::size_t d = 0; d < dim; ++d) grad.d_embedding.at(id, d) += d_ctx[d] * inv;
  }
}

void check_target(std::span<const std::size_t> target, std::span<const double> weights) {
  if (target.size() != weights.size()) {
    throw std::invalid_argument("weight vector length must equal target length");
  }
}

}  // namespace

double loss_sdw(const ConditionalLM& model, const Condition& condition,
                std::span<const std::size_t> target, std::span<const double> weights) {
  check_target(target, weights);
  double loss = 0.0;
  std::vector<std::size_t> prefix;
  prefix.reserve(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    std::vector<double> p = model.next_token_distribution(condition, prefix);
    loss -= weights[j] * clamped_log(p[target[j]]);
    prefix.push_back(target[j]);
  }
  return loss;
}

double loss_sdw_grad(const TinyLM& model, const Condition& condition,
                     std::span<const std::size_t> target, std::span<const double> weights,
                     LmGradients& grad) {
  check_target(target, weights);
  double loss = 0.0;
  std::vector<std::size_t> prefix;
  prefix.reserve(target.size());
  std::size_t vsize = model.vocab().size();
  for (std::size_t j = 0; j < target.size(); ++j) {
    std::vector<std::size_t> ids = model.context_ids(condition, prefix);
    std::vector<double> ctx = model.context_vector(ids);
    std::vector<double> p = model.distribution_from_context(ctx);
    std::size_t t = target[j];
    loss -= weights[j] * clamped_log(p[t]);
    if (p[t] > kProbFloor) {  // gradient is zero while the clamp is active
      std::vector<double> g(vsize, 0.0);
      for (std::size_t v = 0; v < vsize; ++v) g[v] = weights[j] * p[v];
      g[t] -= weights[j];
      backprop_step(model, ids, ctx, g, grad);
    }
    prefix.push_back(t);
  }
  return loss;
}

namespace {

void check_negatives(std::span<const std::size_t> target,
                     std::span<const std::size_t> negatives) {
  for (std::size_t n : negatives) {
    if (std::find(target.begin(), target.end(), n) != target.end()) {
      throw std::invalid_argument("negative word set overlaps the target sentence");
    }
  }
}

}  // namespace

double loss_ucr(const ConditionalLM& model, const Condition& condition,
                std::span<const std::size_t> target,
                std::span<const std::size_t> negatives) {
  if (negatives.empty()) return 0.0;
  check_negatives(target, negatives);
  double loss = 0.0;
  std::vector<std::size_t> prefix;
  prefix.reserve(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    std::vector<double> p = model.next_token_distribution(condition, prefix);
    double alpha = p[target[j]];
    double u = alpha;
    for (std::size_t n : negatives) u += p[n];
    double ratio = u > 0.0 ? alpha / u : 1.0;
    loss -= clamped_log(ratio);
    prefix.push_back(target[j]);
  }
  return loss;
}

double loss_ucr_grad(const TinyLM& model, const Condition& condition,
                     std::span<const std::size_t> target,
                     std::span<const std::size_t> negatives, LmGradients& grad) {
  if (negatives.empty()) return 0.0;
  check_negatives(target, negatives);
  double loss = 0.0;
  std::vector<std::size_t> prefix;
  prefix.reserve(target.size());
  std::size_t vsize = model.vocab().size();
  for (std::size_t j = 0; j < target.size(); ++j) {
    std::vector<std::size_t> ids = model.context_ids(condition, prefix);
    std::vector<double> ctx = model.context_vector(ids);
    std::vector<double> p = model.distribution_from_context(ctx);
    std::size_t t = target[j];
    double alpha = p[t];
    double u = alpha;
    for (std::size_t n : negatives) u += p[n];
    double ratio = u > 0.0 ? alpha / u : 1.0;
    loss -= clamped_log(ratio);
    if (u > 0.0 && ratio > kProbFloor) {
      std::vector<double> g(vsize, 0.0);
      g[t] = alpha / u - 1.0;
      for (std::size_t n : negatives) g[n] = p[n] / u;
      backprop_step(model, ids, ctx, g, grad);
    }
    prefix.push_back(t);
  }
  return loss;
}

double loss_cls(const TinyLM& lm, const Classifier& classifier,
                std::span<const std::size_t> tokens, Polarity label) {
  ClassifierForward fwd = classifier_forward(lm, classifier, tokens);
  return -clamped_log(fwd.probs[polarity_index(label)]);
}

double loss_cls_grad(const TinyLM& lm, const Classifier& classifier,
                     std::span<const std::size_t> tokens, Polarity label,
                     ClassifierGradients& grad) {
  ClassifierForward fwd = classifier_forward(lm, classifier, tokens);
  std::size_t y = polarity_index(label);
  double loss = -clamped_log(fwd.probs[y]);
  if (fwd.probs[y] <= kProbFloor) return loss;  // clamp active: zero gradient

  std::vector<double> g2(fwd.probs);
  g2[y] -= 1.0;

  std::size_t h_size = classifier.hidden_size();
  std::size_t dim = classifier.dimension();
  std::vector<double> d_hidden(h_size, 0.0);
  for (std::size_t h = 0; h < h_size; ++h) {
    double v = fwd.hidden[h];
    double acc = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      grad.d_out_w.at(h, c) += v * g2[c];
      acc += classifier.out_w().at(h, c) * g2[c];
    }
    d_hidden[h] = acc;
  }
  add_scaled(grad.d_out_b, g2, 1.0);

  std::vector<double> d_pooled(dim, 0.0);
  for (std::size_t h = 0; h < h_size; ++h) {
    double da = d_hidden[h] * (1.0 - fwd.hidden[h] * fwd.hidden[h]);
    grad.d_hidden_b[h] += da;
    for (std::size_t d = 0; d < dim; ++d) {
      grad.d_hidden_w.at(d, h) += fwd.pooled[d] * da;
      d_pooled[d] += classifier.hidden_w().at(d, h) * da;
    }
  }

  double inv = 1.0 / static_cast<double>(tokens.size());
  for (std::size_t id : tokens) {
    for (std::size_t d = 0; d < dim; ++d) grad.d_embedding.at(id, d) += d_pooled[d] * inv;
  }
  return loss;
}

double loss_total(double l1, double l2, double l3) { return l1 + l2 + l3; }

// --- Encoding ---------------------------------------------------------------

std::vector<std::size_t> classifier_input(const Vocabulary& vocab,
                                          const AspectInstance& instance,
                                          const std::vector<std::string>* augmentation) {
  std::vector<std::size_t> ids;
  ids.reserve(instance.tokens.size() + 4 +
              (augmentation != nullptr ? augmentation->size() : 0));
  std::size_t open = vocab.id(Vocabulary::kAspectOpen);
  std::size_t close = vocab.id(Vocabulary::kAspectClose);
  for (std::size_t i = 0; i <= instance.tokens.size(); ++i) {
    if (i == instance.aspect_span.from) ids.push_back(open);
    if (i == instance.aspect_span.to) ids.push_back(close);
    if (i < instance.tokens.size()) ids.push_back(vocab.id_or_unk(instance.tokens[i]));
  }
  if (augmentation != nullptr) {
    ids.push_back(vocab.sep());
    for (const auto& tok : *augmentation) ids.push_back(vocab.id_or_unk(tok));
  }
  return ids;
}

namespace {

std::vector<double> target_weights(const AspectInstance& positive) {
  std::vector<std::size_t> distances;
  if (positive.heads.has_value()) {
    DependencyTree tree(*positive.heads);
    distances = syntax_distances(tree, positive.aspect_span);
  } else {
    distances = positional_distances(positive.tokens.size(), positive.aspect_span);
  }
  std::vector<double> weights = sdw_weights(distances);
  weights.push_back(1.0);  // the appended </s> carries full weight
  return weights;
}

}  // namespace

TrainingExample encode_triplet(const Vocabulary& vocab, const TrainingTriplet& triplet) {
  TrainingExample ex;
  GenerationExample gen;
  gen.condition.aspect = vocab.encode(triplet.aspect);
  gen.condition.source = vocab.encode(triplet.input.tokens);
  gen.target = vocab.encode(triplet.positive_target.tokens);
  gen.target.push_back(vocab.eos());
  gen.weights = target_weights(triplet.positive_target);

  std::set<std::size_t> negatives;
  for (const auto& word : triplet.negative_words) {
    std::size_t id = vocab.id_or_unk(word);
    if (id != vocab.unk()) negatives.insert(id);
  }
  gen.negatives.assign(negatives.begin(), negatives.end());
  ex.generation = std::move(gen);

  ex.classification.tokens =
      classifier_input(vocab, triplet.input, &triplet.positive_target.tokens);
  ex.classification.label = triplet.input.polarity;
  return ex;
}

TrainingExample encode_classification_only(const Vocabulary& vocab,
                                           const AspectInstance& instance) {
  TrainingExample ex;
  ex.classification.tokens = classifier_input(vocab, instance, nullptr);
  ex.classification.label = instance.polarity;
  return ex;
}

// --- Training ---------------------------------------------------------------

namespace {

void apply_update(std::vector<double>& param, const std::vector<double>& grad,
                  double step) {
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= step * grad[i];
}

}  // namespace

std::vector<EpochTrace> train(TinyLM& model, Classifier& classifier,
                              const std::vector<TrainingExample>& examples,
                              const TrainOptions& options) {
  if (examples.empty()) throw std::invalid_argument("training set is empty");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");

  const LossCoefficients& co = options.coefficients;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochTrace> trace;
  trace.reserve(options.epochs);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng = Rng::split(options.seed, epoch);
    rng.shuffle(order);

    double sum1 = 0.0, sum2 = 0.0, sum3 = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      std::size_t stop = std::min(order.size(), start + options.batch_size);
      LmGradients sdw_grad(model);
      LmGradients ucr_grad(model);
      ClassifierGradients cls_grad(model, classifier);

      for (std::size_t i = start; i < stop; ++i) {
        const TrainingExample& ex = examples[order[i]];
        double l1 = 0.0, l2 = 0.0;
        if (ex.generation.has_value()) {
          const GenerationExample& gen = *ex.generation;
          l1 = loss_sdw_grad(model, gen.condition, gen.target, gen.weights, sdw_grad);
          l2 = loss_ucr_grad(model, gen.condition, gen.target, gen.negatives, ucr_grad);
        }
        double l3 = loss_cls_grad(model, classifier, ex.classification.tokens,
                                  ex.classification.label, cls_grad);
        if (!std::isfinite(l1) || !std::isfinite(l2) || !std::isfinite(l3)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", example " << order[i]
              << " (l1=" << l1 << ", l2=" << l2 << ", l3=" << l3 << ")";
          throw NumericError(msg.str());
        }
        sum1 += l1;
        sum2 += l2;
        sum3 += l3;
      }

      double inv = 1.0 / static_cast<double>(stop - start);
      double lr = options.learning_rate;
      apply_update(model.bias(), sdw_grad.d_bias, lr * co.sdw * inv);
      apply_update(model.bias(), ucr_grad.d_bias, lr * co.ucr * inv);
      apply_update(model.output().data, sdw_grad.d_output.data, lr * co.sdw * inv);
      apply_update(model.output().data, ucr_grad.d_output.data, lr * co.ucr * inv);
      apply_update(model.embedding().data, sdw_grad.d_embedding.data, lr * co.sdw * inv);
      apply_update(model.embedding().data, ucr_grad.d_embedding.data, lr * co.ucr * inv);
      apply_update(model.embedding().data, cls_grad.d_embedding.data, lr * co.cls * inv);
      apply_update(classifier.hidden_w().data, cls_grad.d_hidden_w.data, lr * co.cls * inv);
      apply_update(classifier.hidden_b(), cls_grad.d_hidden_b, lr * co.cls * inv);
      apply_update(classifier.out_w().data, cls_grad.d_out_w.data, lr * co.cls * inv);
      apply_update(classifier.out_b(), cls_grad.d_out_b, lr * co.cls * inv);
    }

    double n = static_cast<double>(examples.size());
    EpochTrace t;
    t.epoch = epoch;
    t.l1 = sum1 / n;
    t.l2 = sum2 / n;
    t.l3 = sum3 / n;
    t.total = loss_total(t.l1, t.l2, t.l3);
    trace.push_back(t);
  }
  return trace;
}

void save_trace_csv(std::span<const EpochTrace> trace, std::ostream& out) {
  out << "epoch,l1,l2,l3,total\n";
  out << std::setprecision(17);
  for (const auto& t : trace) {
    out << t.epoch << ',' << t.l1 << ',' << t.l2 << ',' << t.l3 << ',' << t.total << '\n';
  }
}

// --- Checkpointing ----------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) {
    throw DataError("checkpoint matrix data does not match its shape");
  }
  return m;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const TinyLM& model, const Classifier& classifier, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "sentaug-checkpoint";
  j["version"] = kCheckpointVersion;
  j["vocabulary"] = model.vocab().tokens();
  j["embedding"] = matrix_to_json(model.embedding());
  j["output"] = matrix_to_json(model.output());
  j["bias"] = model.bias();
  j["classifier"] = {{"hidden_w", matrix_to_json(classifier.hidden_w())},
                     {"hidden_b", classifier.hidden_b()},
                     {"out_w", matrix_to_json(classifier.out_w())},
                     {"out_b", classifier.out_b()}};
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(std::istream& in) {
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != "sentaug-checkpoint" ||
        j.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("unrecognized checkpoint format or version");
    }
    std::vector<std::string> tokens = j.at("vocabulary").get<std::vector<std::string>>();
    if (tokens.size() < 4) throw DataError("checkpoint vocabulary too small");
    std::vector<std::string> content(tokens.begin() + 4, tokens.end());
    Vocabulary vocab(std::move(content));
    if (vocab.tokens() != tokens) {
      throw DataError("checkpoint vocabulary does not start with the reserved tokens");
    }
    TinyLM model = TinyLM::from_parts(
        std::move(vocab), matrix_from_json(j.at("embedding")),
        matrix_from_json(j.at("output")), j.at("bias").get<std::vector<double>>());
    const nlohmann::json& c = j.at("classifier");
    Classifier classifier = Classifier::from_parts(
        matrix_from_json(c.at("hidden_w")), c.at("hidden_b").get<std::vector<double>>(),
        matrix_from_json(c.at("out_w")), c.at("out_b").get<std::vector<double>>());
    return Checkpoint{std::move(model), std::move(classifier)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace sentaug

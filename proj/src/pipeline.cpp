#include "sentaug/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "sentaug/error.hpp"
#include "sentaug/rng.hpp"
#include "sentaug/strings.hpp"

namespace sentaug {

using nlohmann::json;

namespace {

// Generation draws live in their own stream family, away from the
// per-instance selection streams and per-epoch training streams.
constexpr std::uint64_t kGenerationStream = 1ULL << 32;

}  // namespace

// --- Configuration ----------------------------------------------------------

void validate_config(const RunConfig& config) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(config.k_c >= 1, "k_c must be at least 1");
  require(config.k_n >= 1, "k_n must be at least 1");
  require(config.beam_width >= 1, "beam_width must be at least 1");
  require(config.top_z >= 1, "top_z must be at least 1");
  require(config.batch_size >= 1, "batch_size must be at least 1");
  require(config.max_steps >= 1, "max_steps must be at least 1");
  require(config.dimension >= 1, "dimension must be at least 1");
  require(config.hidden >= 1, "hidden must be at least 1");
  require(std::isfinite(config.learning_rate) && config.learning_rate >= 0.0,
          "learning_rate must be finite and non-negative");
  require(config.test_fraction >= 0.0 && config.test_fraction < 1.0,
          "test_fraction must lie in [0, 1)");
  for (double c : {config.coefficients.sdw, config.coefficients.ucr,
                   config.coefficients.cls}) {
    require(std::isfinite(c), "loss coefficients must be finite");
  }
}

RunConfig load_config(std::istream& in, RunConfig base) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig config = std::move(base);
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "k_c") config.k_c = value.get<std::size_t>();
      else if (key == "k_n") config.k_n = value.get<std::size_t>();
      else if (key == "beam_width") config.beam_width = value.get<std::size_t>();
      else if (key == "top_z") config.top_z = value.get<std::size_t>();
      else if (key == "epochs") config.epochs = value.get<std::size_t>();
      else if (key == "learning_rate") config.learning_rate = value.get<double>();
      else if (key == "batch_size") config.batch_size = value.get<std::size_t>();
      else if (key == "seed") config.seed = value.get<std::uint64_t>();
      else if (key == "max_steps") config.max_steps = value.get<std::size_t>();
      else if (key == "coeff_sdw") config.coefficients.sdw = value.get<double>();
      else if (key == "coeff_ucr") config.coefficients.ucr = value.get<double>();
      else if (key == "coeff_cls") config.coefficients.cls = value.get<double>();
      else if (key == "dimension") config.dimension = value.get<std::size_t>();
      else if (key == "hidden") config.hidden = value.get<std::size_t>();
      else if (key == "test_fraction") config.test_fraction = value.get<double>();
      else if (key == "beam_select") {
        std::string s = value.get<std::string>();
        if (s == "random") config.downselect = DownselectPolicy::kRandom;
        else if (s == "top") config.downselect = DownselectPolicy::kTop;
        else throw ConfigError("invalid config: beam_select must be 'random' or 'top'");
      } else if (key == "dataset") config.dataset_path = value.get<std::string>();
      else if (key == "conllu") config.conllu_path = value.get<std::string>();
      else if (key == "embeddings") config.embeddings_path = value.get<std::string>();
      else if (key == "out_dir") config.out_dir = value.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ill-typed config value: ") + e.what());
  }
  validate_config(config);
  return config;
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions options;
  options.epochs = config.epochs;
  options.learning_rate = config.learning_rate;
  options.batch_size = config.batch_size;
  options.seed = config.seed;
  options.coefficients = config.coefficients;
  return options;
}

DecodeOptions decode_options(const RunConfig& config) {
  DecodeOptions options;
  options.top_z = config.top_z;
  options.beam_width = config.beam_width;
  options.max_steps = config.max_steps;
  options.downselect = config.downselect;
  return options;
}

// --- Split ------------------------------------------------------------------

TrainTestSplit stratified_split(const Dataset& data, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must lie in [0, 1)");
  }
  // (polarity, implicit) -> instance indices, in dataset order.
  std::map<std::pair<std::size_t, bool>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const AspectInstance& inst = data.instances[i];
    groups[{polarity_index(inst.polarity), inst.implicit}].push_back(i);
  }
  std::vector<bool> in_test(data.instances.size(), false);
  for (const auto& [key, members] : groups) {
    std::size_t n = members.size();
    auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * test_fraction + 0.5));
    if (n_test >= n) n_test = n - 1;  // a group is never emptied of training data
    for (std::size_t k = 0; k < n_test; ++k) {
      std::size_t position = (2 * k + 1) * n / (2 * n_test);
      in_test[members[position]] = true;
    }
  }
  TrainTestSplit split;
  split.train.name = data.name;
  split.test.name = data.name;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    (in_test[i] ? split.test : split.train).instances.push_back(data.instances[i]);
  }
  return split;
}

// --- Augmentation -----------------------------------------------------------

ConstraintSet make_constraints(const Vocabulary& vocab, const AspectInstance& instance,
                               const SimilarityMatrix& sim, std::size_t k_c) {
  std::vector<std::vector<std::size_t>> forced;
  forced.push_back(vocab.encode(instance.aspect_tokens()));
  std::string key = instance.aspect_key();
  if (sim.index_of(key).has_value() && k_c >= 1) {
    std::size_t k = std::min(k_c, sim.size());
    for (const ScoredAspect& scored : sim.top_k_similar(key, k)) {
      std::vector<std::size_t> ids = vocab.encode(split_words(scored.aspect));
      if (ids.empty() ||
          std::find(ids.begin(), ids.end(), vocab.unk()) != ids.end()) {
        continue;  // an aspect the model cannot spell is no constraint
      }
      forced.push_back(std::move(ids));
    }
  }
  return ConstraintSet(std::move(forced));
}

std::vector<AugmentedInstance> augment_dataset(const Dataset& data, const TinyLM& model,
                                               const SimilarityMatrix& sim,
                                               const RunConfig& config) {
  const Vocabulary& vocab = model.vocab();
  DecodeOptions options = decode_options(config);
  std::vector<AugmentedInstance> out;
  out.reserve(data.instances.size());
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const AspectInstance& inst = data.instances[i];
    Condition condition{vocab.encode(inst.aspect_tokens()), vocab.encode(inst.tokens)};
    ConstraintSet constraints = make_constraints(vocab, inst, sim, config.k_c);
    Rng rng = Rng::split(config.seed, kGenerationStream + i);

    AugmentedInstance augmented;
    augmented.base = inst;
    GenerateResult result = generate(model, condition, constraints, options, rng);
    if (const auto* finished = std::get_if<FinishedSentence>(&result)) {
      augmented.augmentation = surface_tokens(vocab, finished->tokens);
      augmented.combined = inst.tokens;
      augmented.combined.insert(augmented.combined.end(), augmented.augmentation->begin(),
                                augmented.augmentation->end());
    } else {
      augmented.combined = inst.tokens;
      augmented.failure = "no constraint-satisfying sentence within " +
                          std::to_string(options.max_steps) + " steps";
    }
    out.push_back(std::move(augmented));
  }
  return out;
}

namespace {

json base_to_json(const AspectInstance& inst) {
  json record;
  record["id"] = inst.id;
  record["tokens"] = inst.tokens;
  record["aspect_from"] = inst.aspect_span.from;
  record["aspect_to"] = inst.aspect_span.to;
  record["polarity"] = to_string(inst.polarity);
  record["implicit"] = inst.implicit;
  if (inst.heads.has_value()) record["heads"] = *inst.heads;
  return record;
}

}  // namespace

void save_augmented(std::span<const AugmentedInstance> augmented, std::ostream& out) {
  for (const AugmentedInstance& a : augmented) {
    json record = base_to_json(a.base);
    if (a.augmentation.has_value()) record["augmentation"] = *a.augmentation;
    else record["augmentation"] = nullptr;
    record["combined"] = a.combined;
    if (a.failure.has_value()) record["failure"] = *a.failure;
    else record["failure"] = nullptr;
    out << record.dump() << '\n';
  }
}

std::vector<AugmentedInstance> load_augmented(std::istream& in) {
  // The base fields run through the dataset loader (all its validation
  // included); the extras are read in a second pass over the same lines.
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  std::stringstream base_stream;
  for (const auto& l : lines) base_stream << l << '\n';
  Dataset bases = load_dataset(base_stream);

  std::vector<AugmentedInstance> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json record = json::parse(lines[i]);
    AugmentedInstance a;
    a.base = bases.instances[i];
    try {
      if (record.contains("augmentation") && !record.at("augmentation").is_null()) {
        a.augmentation = record.at("augmentation").get<std::vector<std::string>>();
      }
      a.combined = record.at("combined").get<std::vector<std::string>>();
      if (record.contains("failure") && !record.at("failure").is_null()) {
        a.failure = record.at("failure").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw DataError("augmented line " + std::to_string(i + 1) + ": " + e.what());
    }
    std::vector<std::string> expected = a.base.tokens;
    if (a.augmentation.has_value()) {
      expected.insert(expected.end(), a.augmentation->begin(), a.augmentation->end());
    }
    if (a.combined != expected) {
      throw DataError("augmented line " + std::to_string(i + 1) +
                      ": combined is not tokens + augmentation");
    }
    out.push_back(std::move(a));
  }
  return out;
}

// --- Entropy ----------------------------------------------------------------

double avg_entropy(std::span<const std::vector<double>> predictions) {
  if (predictions.empty()) {
    throw std::invalid_argument("entropy of an empty prediction list");
  }
  double sum = 0.0;
  for (const auto& p : predictions) {
    for (double v : p) {
      if (v > 0.0) sum -= v * std::log(v);
    }
  }
  return sum / static_cast<double>(predictions.size());
}

EntropyReport entropy_report(std::span<const AspectInstance> instances,
                             std::span<const std::vector<double>> predictions) {
  if (instances.size() != predictions.size()) {
    throw std::invalid_argument("instances and predictions differ in length");
  }
  std::vector<std::vector<double>> explicit_p, implicit_p;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    (instances[i].implicit ? implicit_p : explicit_p).push_back(predictions[i]);
  }
  auto subset = [](std::span<const std::vector<double>> preds) {
    EntropySubset s;
    s.n = preds.size();
    if (!preds.empty()) s.value = avg_entropy(preds);
    return s;
  };
  EntropyReport report;
  report.all = subset(predictions);
  report.explicit_part = subset(explicit_p);
  report.implicit_part = subset(implicit_p);
  return report;
}

// --- Evaluation -------------------------------------------------------------

Polarity argmax_polarity(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return static_cast<Polarity>(best);
}

namespace {

SplitMetrics split_metrics(std::span<const Polarity> gold,
                           std::span<const Polarity> predicted) {
  SplitMetrics m;
  m.n = gold.size();
  if (gold.empty()) return m;

  std::size_t correct = 0;
  std::array<std::size_t, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::size_t g = polarity_index(gold[i]);
    std::size_t p = polarity_index(predicted[i]);
    if (g == p) {
      ++correct;
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double denom_p = static_cast<double>(tp[c] + fp[c]);
    double denom_r = static_cast<double>(tp[c] + fn[c]);
    double precision = denom_p > 0.0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
    double recall = denom_r > 0.0 ? static_cast<double>(tp[c]) / denom_r : 0.0;
    double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                           : 0.0;
    f1_sum += f1;
  }
  m.macro_f1 = f1_sum / static_cast<double>(kNumClasses);
  return m;
}

}  // namespace

EvaluationReport evaluate(std::span<const AspectInstance> instances,
                          std::span<const Polarity> predictions) {
  if (instances.size() != predictions.size()) {
    throw std::invalid_argument("instances and predictions differ in length");
  }
  std::vector<Polarity> gold_all, pred_all, gold_e, pred_e, gold_i, pred_i;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    gold_all.push_back(instances[i].polarity);
    pred_all.push_back(predictions[i]);
    if (instances[i].implicit) {
      gold_i.push_back(instances[i].polarity);
      pred_i.push_back(predictions[i]);
    } else {
      gold_e.push_back(instances[i].polarity);
      pred_e.push_back(predictions[i]);
    }
  }
  EvaluationReport report;
  report.all = split_metrics(gold_all, pred_all);
  report.explicit_part = split_metrics(gold_e, pred_e);
  report.implicit_part = split_metrics(gold_i, pred_i);
  return report;
}

// --- Experiment -------------------------------------------------------------

namespace {

ArmReport score_arm(const TinyLM& model, const Classifier& classifier,
                    const Dataset& test,
                    const std::vector<const std::vector<std::string>*>& augmentations) {
  std::vector<std::vector<double>> probs;
  std::vector<Polarity> preds;
  probs.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::vector<std::size_t> input =
        classifier_input(model.vocab(), test.instances[i], augmentations[i]);
    probs.push_back(classifier.predict(model, input));
    preds.push_back(argmax_polarity(probs.back()));
  }
  ArmReport arm;
  arm.metrics = evaluate(test.instances, preds);
  arm.entropy = entropy_report(test.instances, probs);
  return arm;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& data, const EmbeddingTable& table,
                                const RunConfig& config) {
  validate_config(config);
  TrainTestSplit split = stratified_split(data, config.test_fraction);
  if (split.train.instances.empty()) throw DataError("experiment: empty training split");
  if (split.test.instances.empty()) throw DataError("experiment: empty test split");

  Vocabulary vocab = Vocabulary::from_dataset(split.train);
  ExperimentReport report;
  report.train_size = split.train.size();
  report.test_size = split.test.size();

  std::vector<const std::vector<std::string>*> no_augmentation(split.test.size(), nullptr);

  // Baseline arm: the classifier alone, raw sentences.
  {
    TinyLM model(vocab, config.dimension, config.seed);
    Classifier classifier(config.dimension, config.hidden, config.seed);
    std::vector<TrainingExample> examples;
    examples.reserve(split.train.size());
    for (const auto& inst : split.train.instances) {
      examples.push_back(encode_classification_only(vocab, inst));
    }
    train(model, classifier, examples, train_options(config));
    report.baseline = score_arm(model, classifier, split.test, no_augmentation);
  }

  // Augmented arm: identical initialization, full pipeline.
  {
    TinyLM model(vocab, config.dimension, config.seed);
    Classifier classifier(config.dimension, config.hidden, config.seed);

    SelectionConfig sel_config{config.k_c, config.k_n, config.seed};
    SelectionResult selection = build_training_set(split.train, sel_config, table);
    report.triplet_count = selection.triplets.size();
    report.skipped_count = selection.skipped.size();

    std::unordered_map<std::string, const TrainingTriplet*> by_input;
    for (const auto& t : selection.triplets) by_input.emplace(t.input.id, &t);
    std::vector<TrainingExample> examples;
    examples.reserve(split.train.size());
    for (const auto& inst : split.train.instances) {
      auto it = by_input.find(inst.id);
      if (it != by_input.end()) {
        examples.push_back(encode_triplet(vocab, *it->second));
      } else {
        examples.push_back(encode_classification_only(vocab, inst));
      }
    }
    train(model, classifier, examples, train_options(config));

    SimilarityMatrix sim = build_aspect_similarity(split.train, table);
    std::vector<AugmentedInstance> augmented =
        augment_dataset(split.test, model, sim, config);
    std::vector<const std::vector<std::string>*> augmentations;
    augmentations.reserve(augmented.size());
    for (const auto& a : augmented) {
      if (a.augmentation.has_value()) {
        ++report.generation_successes;
        augmentations.push_back(&*a.augmentation);
      } else {
        ++report.generation_failures;
        augmentations.push_back(nullptr);
      }
    }
    report.augmented = score_arm(model, classifier, split.test, augmentations);
  }
  return report;
}

// --- Reports ----------------------------------------------------------------

namespace {

json metrics_to_json(const SplitMetrics& m) {
  json j;
  j["n"] = m.n;
  j["accuracy"] = m.accuracy.has_value() ? json(*m.accuracy) : json(nullptr);
  j["macro_f1"] = m.macro_f1.has_value() ? json(*m.macro_f1) : json(nullptr);
  return j;
}

json entropy_to_json(const EntropySubset& s) {
  json j;
  j["n"] = s.n;
  j["avg_entropy"] = s.value.has_value() ? json(*s.value) : json(nullptr);
  return j;
}

json arm_to_json(const ArmReport& arm) {
  json j;
  j["all"] = metrics_to_json(arm.metrics.all);
  j["explicit"] = metrics_to_json(arm.metrics.explicit_part);
  j["implicit"] = metrics_to_json(arm.metrics.implicit_part);
  j["entropy"] = {{"all", entropy_to_json(arm.entropy.all)},
                  {"explicit", entropy_to_json(arm.entropy.explicit_part)},
                  {"implicit", entropy_to_json(arm.entropy.implicit_part)}};
  return j;
}

json delta_or_null(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() && b.has_value()) return json(*a - *b);
  return json(nullptr);
}

const char* policy_name(DownselectPolicy policy) {
  return policy == DownselectPolicy::kRandom ? "random" : "top";
}

}  // namespace

void write_experiment_json(const ExperimentReport& report, const RunConfig& config,
                           std::ostream& out) {
  json j;
  j["config"] = {{"k_c", config.k_c},
                 {"k_n", config.k_n},
                 {"beam_width", config.beam_width},
                 {"top_z", config.top_z},
                 {"epochs", config.epochs},
                 {"learning_rate", config.learning_rate},
                 {"batch_size", config.batch_size},
                 {"seed", config.seed},
                 {"max_steps", config.max_steps},
                 {"coeff_sdw", config.coefficients.sdw},
                 {"coeff_ucr", config.coefficients.ucr},
                 {"coeff_cls", config.coefficients.cls},
                 {"dimension", config.dimension},
                 {"hidden", config.hidden},
                 {"test_fraction", config.test_fraction},
                 {"beam_select", policy_name(config.downselect)}};
  j["sizes"] = {{"train", report.train_size},
                {"test", report.test_size},
                {"triplets", report.triplet_count},
                {"selection_skipped", report.skipped_count},
                {"generation_successes", report.generation_successes},
                {"generation_failures", report.generation_failures}};
  j["baseline"] = arm_to_json(report.baseline);
  j["augmented"] = arm_to_json(report.augmented);
  j["delta"] = {
      {"accuracy_all", delta_or_null(report.augmented.metrics.all.accuracy,
                                     report.baseline.metrics.all.accuracy)},
      {"accuracy_explicit", delta_or_null(report.augmented.metrics.explicit_part.accuracy,
                                          report.baseline.metrics.explicit_part.accuracy)},
      {"accuracy_implicit", delta_or_null(report.augmented.metrics.implicit_part.accuracy,
                                          report.baseline.metrics.implicit_part.accuracy)},
      {"macro_f1_all", delta_or_null(report.augmented.metrics.all.macro_f1,
                                     report.baseline.metrics.all.macro_f1)},
      {"avg_entropy_all", delta_or_null(report.augmented.entropy.all.value,
                                        report.baseline.entropy.all.value)}};
  out << j.dump(2) << '\n';
}

void write_evaluation_json(const EvaluationReport& metrics, const EntropyReport& entropy,
                           std::ostream& out) {
  ArmReport arm{metrics, entropy};
  out << arm_to_json(arm).dump(2) << '\n';
}

void write_entropy_json(const EntropyReport& entropy, std::ostream& out) {
  json j = {{"all", entropy_to_json(entropy.all)},
            {"explicit", entropy_to_json(entropy.explicit_part)},
            {"implicit", entropy_to_json(entropy.implicit_part)}};
  out << j.dump(2) << '\n';
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v.has_value()) return "-";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << *v;
  return ss.str();
}

void table_row(std::ostream& out, const std::string& arm, const std::string& subset,
               const SplitMetrics& m, const EntropySubset& e) {
  out << std::left << std::setw(11) << arm << std::setw(10) << subset << std::right
      << std::setw(6) << m.n << std::setw(10) << fmt(m.accuracy) << std::setw(10)
      << fmt(m.macro_f1) << std::setw(10) << fmt(e.value) << '\n';
}

}  // namespace

void write_experiment_table(const ExperimentReport& report, std::ostream& out) {
  out << std::left << std::setw(11) << "arm" << std::setw(10) << "subset" << std::right
      << std::setw(6) << "n" << std::setw(10) << "acc" << std::setw(10) << "macro_f1"
      << std::setw(10) << "entropy" << '\n';
  table_row(out, "baseline", "all", report.baseline.metrics.all, report.baseline.entropy.all);
  table_row(out, "baseline", "explicit", report.baseline.metrics.explicit_part,
            report.baseline.entropy.explicit_part);
  table_row(out, "baseline", "implicit", report.baseline.metrics.implicit_part,
            report.baseline.entropy.implicit_part);
  table_row(out, "augmented", "all", report.augmented.metrics.all,
            report.augmented.entropy.all);
  table_row(out, "augmented", "explicit", report.augmented.metrics.explicit_part,
            report.augmented.entropy.explicit_part);
  table_row(out, "augmented", "implicit", report.augmented.metrics.implicit_part,
            report.augmented.entropy.implicit_part);

  auto delta = [](const std::optional<double>& a, const std::optional<double>& b) {
    std::optional<double> d;
    if (a.has_value() && b.has_value()) d = *a - *b;
    return d;
  };
  out << "delta (augmented - baseline): accuracy all "
      << fmt(delta(report.augmented.metrics.all.accuracy,
                   report.baseline.metrics.all.accuracy))
      << ", implicit "
      << fmt(delta(report.augmented.metrics.implicit_part.accuracy,
                   report.baseline.metrics.implicit_part.accuracy))
      << ", entropy all "
      << fmt(delta(report.augmented.entropy.all.value, report.baseline.entropy.all.value))
      << '\n';
  out << "selection: " << report.triplet_count << " triplets, " << report.skipped_count
      << " skipped; generation: " << report.generation_successes << " ok, "
      << report.generation_failures << " failed\n";
}

}  // namespace sentaug

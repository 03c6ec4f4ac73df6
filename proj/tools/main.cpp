// Command-line front end: one subcommand per pipeline stage.
// Exit codes: 0 success, 1 usage/config, 2 data validation, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sentaug/corpus.hpp"
#include "sentaug/decoder.hpp"
#include "sentaug/embeddings.hpp"
#include "sentaug/error.hpp"
#include "sentaug/genmodel.hpp"
#include "sentaug/pipeline.hpp"
#include "sentaug/rng.hpp"
#include "sentaug/selection.hpp"
#include "sentaug/strings.hpp"

namespace {

using namespace sentaug;
using nlohmann::json;

std::ifstream open_input(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + what + " file '" + path + "'");
  return in;
}

// Writes to the path when given, stdout otherwise.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << content;
}

Dataset load_dataset_file(const std::string& dataset_path, const std::string& conllu_path) {
  std::ifstream in = open_input(dataset_path, "dataset");
  Dataset data = load_dataset(in, dataset_path);
  if (!conllu_path.empty()) {
    std::ifstream conllu = open_input(conllu_path, "conllu");
    attach_trees(data, import_conllu(conllu));
  }
  return data;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::ifstream in = open_input(path, "embeddings");
  return EmbeddingTable::parse(in);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in = open_input(path, "checkpoint");
  return load_checkpoint(in);
}

// Shared flag set. Flags the user actually passed override the config file.
struct CommonFlags {
  std::string config_path;
  std::string dataset;
  std::string conllu;
  std::string embeddings;
  std::string checkpoint;
  std::string out;
  std::string beam_select;
  RunConfig flag_values;

  CLI::Option* o_seed = nullptr;
  CLI::Option* o_k_c = nullptr;
  CLI::Option* o_k_n = nullptr;
  CLI::Option* o_beam_width = nullptr;
  CLI::Option* o_top_z = nullptr;
  CLI::Option* o_max_steps = nullptr;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_learning_rate = nullptr;
  CLI::Option* o_batch_size = nullptr;
  CLI::Option* o_dimension = nullptr;
  CLI::Option* o_hidden = nullptr;
  CLI::Option* o_test_fraction = nullptr;
  CLI::Option* o_beam_select = nullptr;
  CLI::Option* o_dataset = nullptr;
  CLI::Option* o_conllu = nullptr;
  CLI::Option* o_embeddings = nullptr;
  CLI::Option* o_out = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    o_seed = cmd->add_option("--seed", flag_values.seed, "random seed");
    o_k_c = cmd->add_option("--k-c", flag_values.k_c, "similar-aspect count");
    o_k_n = cmd->add_option("--k-n", flag_values.k_n, "negative-word count");
    o_beam_width = cmd->add_option("--beam-width", flag_values.beam_width, "beam width V");
    o_top_z = cmd->add_option("--top-z", flag_values.top_z, "top-z candidate words");
    o_max_steps = cmd->add_option("--max-steps", flag_values.max_steps,
                                  "generation step budget");
    o_epochs = cmd->add_option("--epochs", flag_values.epochs, "training epochs");
    o_learning_rate =
        cmd->add_option("--lr", flag_values.learning_rate, "learning rate");
    o_batch_size = cmd->add_option("--batch-size", flag_values.batch_size, "batch size");
    o_dimension = cmd->add_option("--dimension", flag_values.dimension,
                                  "model embedding width");
    o_hidden = cmd->add_option("--hidden", flag_values.hidden,
                               "classifier hidden width");
    o_test_fraction = cmd->add_option("--test-fraction", flag_values.test_fraction,
                                      "experiment holdout share");
    o_beam_select = cmd->add_option("--beam-select", beam_select,
                                    "beam overflow policy: random|top")
                        ->check(CLI::IsMember({"random", "top"}));
    o_dataset = cmd->add_option("--dataset", dataset, "dataset JSONL file");
    o_conllu = cmd->add_option("--conllu", conllu, "CoNLL-U parse file");
    o_embeddings = cmd->add_option("--embeddings", embeddings, "word-vector text file");
    o_out = cmd->add_option("--out", out, "output path (stdout when omitted)");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) {
      std::ifstream in = open_input(config_path, "config");
      config = load_config(in);
    }
    if (o_seed->count() > 0) config.seed = flag_values.seed;
    if (o_k_c->count() > 0) config.k_c = flag_values.k_c;
    if (o_k_n->count() > 0) config.k_n = flag_values.k_n;
    if (o_beam_width->count() > 0) config.beam_width = flag_values.beam_width;
    if (o_top_z->count() > 0) config.top_z = flag_values.top_z;
    if (o_max_steps->count() > 0) config.max_steps = flag_values.max_steps;
    if (o_epochs->count() > 0) config.epochs = flag_values.epochs;
    if (o_learning_rate->count() > 0) config.learning_rate = flag_values.learning_rate;
    if (o_batch_size->count() > 0) config.batch_size = flag_values.batch_size;
    if (o_dimension->count() > 0) config.dimension = flag_values.dimension;
    if (o_hidden->count() > 0) config.hidden = flag_values.hidden;
    if (o_test_fraction->count() > 0) config.test_fraction = flag_values.test_fraction;
    if (o_beam_select->count() > 0) {
      config.downselect =
          beam_select == "top" ? DownselectPolicy::kTop : DownselectPolicy::kRandom;
    }
    if (o_dataset->count() > 0) config.dataset_path = dataset;
    if (o_conllu->count() > 0) config.conllu_path = conllu;
    if (o_embeddings->count() > 0) config.embeddings_path = embeddings;
    validate_config(config);
    return config;
  }
};

std::string require_path(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError("missing required input: " + flag);
  return value;
}

// Builds the joint training set: a triplet example where selection found
// one, a classification-only example otherwise.
std::vector<TrainingExample> build_examples(const Dataset& data,
                                            const SelectionResult& selection,
                                            const Vocabulary& vocab) {
  std::unordered_map<std::string, const TrainingTriplet*> by_input;
  for (const auto& t : selection.triplets) by_input.emplace(t.input.id, &t);
  std::vector<TrainingExample> examples;
  examples.reserve(data.size());
  for (const auto& inst : data.instances) {
    auto it = by_input.find(inst.id);
    if (it != by_input.end()) examples.push_back(encode_triplet(vocab, *it->second));
    else examples.push_back(encode_classification_only(vocab, inst));
  }
  return examples;
}

int run_stats(const CommonFlags& flags, const RunConfig& config) {
  Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                   config.conllu_path);
  DatasetStatistics stats = statistics(data);
  json j = {{"positive", stats.positive}, {"negative", stats.negative},
            {"neutral", stats.neutral},   {"implicit", stats.implicit},
            {"total", stats.total},       {"note", DatasetStatistics::kCountingNote}};
  write_output(flags.out, j.dump(2) + "\n");
  return 0;
}

int run_select(const CommonFlags& flags, const RunConfig& config) {
  Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                   config.conllu_path);
  EmbeddingTable table =
      load_embeddings_file(require_path(config.embeddings_path, "--embeddings"));
  SelectionConfig sel{config.k_c, config.k_n, config.seed};
  SelectionResult result = build_training_set(data, sel, table);
  std::ostringstream out;
  save_triplets(result, out);
  write_output(flags.out, out.str());
  std::cerr << result.triplets.size() << " triplets, " << result.skipped.size()
            << " skipped\n";
  return 0;
}

int run_train(const CommonFlags& flags, const RunConfig& config,
              const std::string& trace_path) {
  Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                   config.conllu_path);
  EmbeddingTable table =
      load_embeddings_file(require_path(config.embeddings_path, "--embeddings"));
  SelectionConfig sel{config.k_c, config.k_n, config.seed};
  SelectionResult selection = build_training_set(data, sel, table);

  Vocabulary vocab = Vocabulary::from_dataset(data);
  TinyLM model(vocab, config.dimension, config.seed);
  Classifier classifier(config.dimension, config.hidden, config.seed);
  std::vector<TrainingExample> examples = build_examples(data, selection, vocab);
  std::vector<EpochTrace> trace = train(model, classifier, examples, train_options(config));

  std::ostringstream out;
  save_checkpoint(model, classifier, out);
  write_output(flags.out, out.str());
  if (!trace_path.empty()) {
    std::ostringstream csv;
    save_trace_csv(trace, csv);
    write_output(trace_path, csv.str());
  }
  std::cerr << "trained on " << examples.size() << " examples ("
            << selection.triplets.size() << " triplets); final loss "
            << (trace.empty() ? 0.0 : trace.back().total) << "\n";
  return 0;
}

int run_augment(const CommonFlags& flags, const RunConfig& config, bool generated_only) {
  Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                   config.conllu_path);
  EmbeddingTable table =
      load_embeddings_file(require_path(config.embeddings_path, "--embeddings"));
  Checkpoint ckpt = load_checkpoint_file(require_path(flags.checkpoint, "--checkpoint"));
  SimilarityMatrix sim = build_aspect_similarity(data, table);
  std::vector<AugmentedInstance> augmented =
      augment_dataset(data, ckpt.model, sim, config);

  std::ostringstream out;
  if (generated_only) {
    for (const AugmentedInstance& a : augmented) {
      json row;
      row["id"] = a.base.id;
      row["aspect"] = join(a.base.aspect_tokens());
      row["generated"] =
          a.augmentation.has_value() ? json(*a.augmentation) : json(nullptr);
      row["failure"] = a.failure.has_value() ? json(*a.failure) : json(nullptr);
      out << row.dump() << '\n';
    }
  } else {
    save_augmented(augmented, out);
  }
  write_output(flags.out, out.str());
  return 0;
}

// The instances to score plus any augmentations, from either input shape.
struct EvalInput {
  std::vector<AspectInstance> instances;
  std::vector<std::optional<std::vector<std::string>>> augmentations;
};

EvalInput load_eval_input(const RunConfig& config, const std::string& augmented_path) {
  EvalInput input;
  if (!augmented_path.empty()) {
    std::ifstream in = open_input(augmented_path, "augmented dataset");
    for (AugmentedInstance& a : load_augmented(in)) {
      input.instances.push_back(std::move(a.base));
      input.augmentations.push_back(std::move(a.augmentation));
    }
  } else {
    Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                     config.conllu_path);
    for (AspectInstance& inst : data.instances) {
      input.instances.push_back(std::move(inst));
      input.augmentations.emplace_back();
    }
  }
  return input;
}

int run_evaluate(const CommonFlags& flags, const RunConfig& config,
                 const std::string& augmented_path, bool entropy_only) {
  Checkpoint ckpt = load_checkpoint_file(require_path(flags.checkpoint, "--checkpoint"));
  EvalInput input = load_eval_input(config, augmented_path);
  if (input.instances.empty()) throw DataError("no instances to evaluate");

  std::vector<std::vector<double>> probs;
  std::vector<Polarity> preds;
  probs.reserve(input.instances.size());
  for (std::size_t i = 0; i < input.instances.size(); ++i) {
    const std::vector<std::string>* aug =
        input.augmentations[i].has_value() ? &*input.augmentations[i] : nullptr;
    std::vector<std::size_t> ids =
        classifier_input(ckpt.model.vocab(), input.instances[i], aug);
    probs.push_back(ckpt.classifier.predict(ckpt.model, ids));
    preds.push_back(argmax_polarity(probs.back()));
  }
  EntropyReport entropy = entropy_report(input.instances, probs);
  std::ostringstream out;
  if (entropy_only) {
    write_entropy_json(entropy, out);
  } else {
    write_evaluation_json(evaluate(input.instances, preds), entropy, out);
  }
  write_output(flags.out, out.str());
  return 0;
}

int run_experiment_cmd(const CommonFlags& flags, const RunConfig& config) {
  Dataset data = load_dataset_file(require_path(config.dataset_path, "--dataset"),
                                   config.conllu_path);
  EmbeddingTable table =
      load_embeddings_file(require_path(config.embeddings_path, "--embeddings"));
  ExperimentReport report = run_experiment(data, table, config);
  std::ostringstream out;
  write_experiment_json(report, config, out);
  write_output(flags.out, out.str());
  if (flags.out.empty()) {
    write_experiment_table(report, std::cerr);
  } else {
    write_experiment_table(report, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explicit-sentiment augmentation toolkit"};
  app.require_subcommand(1);

  CommonFlags stats_f, select_f, train_f, generate_f, augment_f, evaluate_f, entropy_f,
      experiment_f;
  std::string trace_path, evaluate_augmented, entropy_augmented;

  CLI::App* c_stats = app.add_subcommand("stats", "per-polarity instance counts");
  stats_f.add_to(c_stats);
  CLI::App* c_select = app.add_subcommand("select", "build the training triplets");
  select_f.add_to(c_select);
  CLI::App* c_train = app.add_subcommand("train", "select, train, write a checkpoint");
  train_f.add_to(c_train);
  c_train->add_option("--trace", trace_path, "write the per-epoch loss CSV here");
  CLI::App* c_generate =
      app.add_subcommand("generate", "generate explicit sentences only");
  generate_f.add_to(c_generate);
  c_generate->add_option("--checkpoint", generate_f.checkpoint, "trained model file");
  CLI::App* c_augment =
      app.add_subcommand("augment", "write the augmented dataset");
  augment_f.add_to(c_augment);
  c_augment->add_option("--checkpoint", augment_f.checkpoint, "trained model file");
  CLI::App* c_evaluate = app.add_subcommand("evaluate", "accuracy / macro-F1 / entropy");
  evaluate_f.add_to(c_evaluate);
  c_evaluate->add_option("--checkpoint", evaluate_f.checkpoint, "trained model file");
  c_evaluate->add_option("--augmented", evaluate_augmented,
                         "score an augmented dataset instead of --dataset");
  CLI::App* c_entropy = app.add_subcommand("entropy", "prediction-entropy diagnostic");
  entropy_f.add_to(c_entropy);
  c_entropy->add_option("--checkpoint", entropy_f.checkpoint, "trained model file");
  c_entropy->add_option("--augmented", entropy_augmented,
                        "score an augmented dataset instead of --dataset");
  CLI::App* c_experiment =
      app.add_subcommand("experiment", "baseline vs augmented A/B run");
  experiment_f.add_to(c_experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_stats->parsed()) return run_stats(stats_f, stats_f.resolve());
    if (c_select->parsed()) return run_select(select_f, select_f.resolve());
    if (c_train->parsed()) return run_train(train_f, train_f.resolve(), trace_path);
    if (c_generate->parsed()) return run_augment(generate_f, generate_f.resolve(), true);
    if (c_augment->parsed()) return run_augment(augment_f, augment_f.resolve(), false);
    if (c_evaluate->parsed()) {
      return run_evaluate(evaluate_f, evaluate_f.resolve(), evaluate_augmented, false);
    }
    if (c_entropy->parsed()) {
      return run_evaluate(entropy_f, entropy_f.resolve(), entropy_augmented, true);
    }
    if (c_experiment->parsed()) {
      return run_experiment_cmd(experiment_f, experiment_f.resolve());
    }
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "sentaug/strings.hpp"

namespace sentaug::testing {

std::vector<std::size_t> random_tree_heads(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("tree must have at least one node");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::size_t> heads(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t parent = order[rng.uniform_index(i)];
    heads[order[i]] = parent + 1;  // 1-based
  }
  heads[order[0]] = 0;
  return heads;
}

std::vector<std::vector<std::size_t>> all_pairs_tree_distances(
    const std::vector<std::size_t>& heads) {
  const std::size_t n = heads.size();
  const std::size_t inf = n + 1;  // longer than any tree path
  std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) dist[i][i] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (heads[i] == 0) continue;
    std::size_t p = heads[i] - 1;
    dist[i][p] = 1;
    dist[p][i] = 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (dist[i][k] + dist[k][j] < dist[i][j]) dist[i][j] = dist[i][k] + dist[k][j];
      }
    }
  }
  return dist;
}

namespace {

constexpr std::array<const char*, 8> kAspects = {"food",  "pizza", "pasta",  "service",
                                                 "staff", "waiter", "screen", "battery"};
constexpr std::array<const char*, 4> kPositiveOps = {"good", "great", "tasty", "lovely"};
constexpr std::array<const char*, 4> kNegativeOps = {"bad", "awful", "gross", "dreadful"};
constexpr std::array<const char*, 4> kNeutralOps = {"okay", "average", "plain", "ordinary"};
// Wide reaction lexicon: each verb is class-consistent but individually rare,
// so a classifier has to memorise many words to read polarity from reactions
// while a handful of opinion adjectives carry the explicit cue.
constexpr std::array<const char*, 8> kPositiveReacts = {
    "smiled", "cheered", "grinned", "rejoiced", "laughed", "clapped", "beamed", "danced"};
constexpr std::array<const char*, 8> kNegativeReacts = {
    "frowned", "groaned", "sighed", "grumbled", "winced", "scowled", "sobbed", "flinched"};
constexpr std::array<const char*, 8> kNeutralReacts = {
    "shrugged", "paused", "nodded", "waited", "blinked", "breathed", "lingered", "remained"};

const char* opinion_word(Polarity p, std::size_t variant) {
  switch (p) {
    case Polarity::kPositive: return kPositiveOps[variant];
    case Polarity::kNegative: return kNegativeOps[variant];
    case Polarity::kNeutral: return kNeutralOps[variant];
  }
  return kNeutralOps[variant];
}

const char* reaction_word(Polarity p, std::size_t variant) {
  switch (p) {
    case Polarity::kPositive: return kPositiveReacts[variant];
    case Polarity::kNegative: return kNegativeReacts[variant];
    case Polarity::kNeutral: return kNeutralReacts[variant];
  }
  return kNeutralReacts[variant];
}

}  // namespace

SyntheticCorpus build_synthetic_corpus(std::size_t total) {
  SyntheticCorpus corpus;
  corpus.data.name = "synthetic";
  const std::array<Polarity, 3> polarities = {Polarity::kPositive, Polarity::kNegative,
                                              Polarity::kNeutral};
  std::size_t idx = 0;
  // One implicit instance per two explicit ones within each polarity, so the
  // implicit flag stays uncorrelated with the label.
  std::array<std::size_t, 3> per_polarity = {0, 0, 0};
  for (std::size_t round = 0; corpus.data.size() < total; ++round) {
    std::size_t variant = round % kPositiveOps.size();
    for (std::size_t a = 0; a < kAspects.size() && corpus.data.size() < total; ++a) {
      for (Polarity p : polarities) {
        if (corpus.data.size() >= total) break;
        std::size_t& seen = per_polarity[polarity_index(p)];
        bool implicit = seen % 3 == 2;
        // 8 and 3 are coprime, so every reaction verb cycles through both
        // explicit and implicit instances.
        const char* react = reaction_word(p, seen % kPositiveReacts.size());
        ++seen;
        AspectInstance inst;
        inst.id = "syn-" + std::to_string(idx++);
        inst.polarity = p;
        inst.implicit = implicit;
        inst.aspect_span = {1, 2};
        if (!implicit) {
          inst.tokens = {"the", kAspects[a], "was", opinion_word(p, variant),
                         "and", "we",        react};
          inst.heads = std::vector<std::size_t>{2, 4, 4, 0, 7, 7, 4};
        } else {
          // The implicit variant is the same sentence with the opinion token
          // removed; the reaction verb becomes the root.
          inst.tokens = {"the", kAspects[a], "was", "and", "we", react};
          inst.heads = std::vector<std::size_t>{2, 6, 6, 6, 6, 0};
        }
        corpus.data.instances.push_back(std::move(inst));
      }
    }
  }
  corpus.embeddings_text =
      "food 1 0 0 0.02\n"
      "pizza 1 0 0 0.05\n"
      "pasta 1 0 0 0.09\n"
      "service 0 1 0 0.02\n"
      "staff 0 1 0 0.05\n"
      "waiter 0 1 0 0.09\n"
      "screen 0 0 1 0.03\n"
      "battery 0 0 1 0.07\n";
  return corpus;
}

Dataset build_count_fixture(std::size_t positive, std::size_t negative,
                            std::size_t neutral, std::size_t implicit) {
  Dataset data;
  data.name = "counts";
  std::size_t total = positive + negative + neutral;
  if (implicit > total) throw std::invalid_argument("implicit exceeds total");
  for (std::size_t i = 0; i < total; ++i) {
    AspectInstance inst;
    inst.id = "c-" + std::to_string(i);
    inst.tokens = {"thing", "here"};
    inst.aspect_span = {0, 1};
    if (i < positive) inst.polarity = Polarity::kPositive;
    else if (i < positive + negative) inst.polarity = Polarity::kNegative;
    else inst.polarity = Polarity::kNeutral;
    inst.implicit = i < implicit;
    data.instances.push_back(std::move(inst));
  }
  return data;
}

// --- Independent oracles ------------------------------------------------------

namespace {

struct BruteAspect {
  std::vector<double> mean;
  bool valid = false;
};

// Mean embedding per distinct aspect key, recomputed directly from the table.
std::map<std::string, BruteAspect> brute_aspect_vectors(const Dataset& data,
                                                        const EmbeddingTable& table) {
  std::map<std::string, BruteAspect> out;
  for (const auto& inst : data.instances) {
    std::string key = inst.aspect_key();
    if (out.count(key) > 0) continue;
    BruteAspect entry;
    entry.mean.assign(table.dimension(), 0.0);
    std::size_t found = 0;
    for (const auto& tok : inst.aspect_tokens()) {
      const std::vector<double>* vec = table.find(tok);
      if (vec == nullptr) continue;
      for (std::size_t d = 0; d < vec->size(); ++d) entry.mean[d] += (*vec)[d];
      ++found;
    }
    if (found > 0) {
      double norm_sq = 0.0;
      for (double& c : entry.mean) {
        c /= static_cast<double>(found);
        norm_sq += c * c;
      }
      entry.valid = norm_sq > 0.0;
    }
    out.emplace(std::move(key), std::move(entry));
  }
  return out;
}

double brute_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// The k_c most similar aspect keys (self included), similarity descending,
// ties by ascending key.
std::set<std::string> brute_top_k(const std::map<std::string, BruteAspect>& vectors,
                                  const std::string& query, std::size_t k_c) {
  const BruteAspect& q = vectors.at(query);
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [key, entry] : vectors) {
    if (!entry.valid) continue;
    scored.emplace_back(brute_cosine(q.mean, entry.mean), key);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::set<std::string> top;
  for (std::size_t i = 0; i < scored.size() && i < k_c; ++i) top.insert(scored[i].second);
  return top;
}

std::vector<const AspectInstance*> brute_positive_candidates(
    const AspectInstance& input, const Dataset& data, const std::set<std::string>& top) {
  std::vector<const AspectInstance*> out;
  for (const auto& inst : data.instances) {
    if (inst.implicit || inst.id == input.id) continue;
    if (inst.polarity != input.polarity) continue;
    if (top.count(inst.aspect_key()) == 0) continue;
    out.push_back(&inst);
  }
  return out;
}

bool has_negative_candidate(const AspectInstance& input, const Dataset& data,
                            Polarity wanted) {
  for (const auto& inst : data.instances) {
    if (inst.implicit || inst.id == input.id) continue;
    if (inst.polarity != wanted) continue;
    if (inst.aspect_key() == input.aspect_key()) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> selection_violations(const Dataset& data,
                                              const SelectionResult& result,
                                              const EmbeddingTable& table,
                                              std::size_t k_c, std::size_t k_n) {
  std::vector<std::string> bad;
  auto complain = [&](const std::string& id, const std::string& what) {
    bad.push_back("instance '" + id + "': " + what);
  };

  std::unordered_map<std::string, const AspectInstance*> by_id;
  for (const auto& inst : data.instances) by_id.emplace(inst.id, &inst);
  std::map<std::string, BruteAspect> vectors = brute_aspect_vectors(data, table);

  if (result.triplets.size() + result.skipped.size() != data.size()) {
    bad.push_back("triplets + skipped != dataset size");
  }
  std::unordered_set<std::string> covered;
  for (const auto& t : result.triplets) {
    if (!covered.insert(t.input.id).second) complain(t.input.id, "duplicated in output");
  }
  for (const auto& s : result.skipped) {
    if (!covered.insert(s.id).second) complain(s.id, "duplicated in output");
    if (s.reason.empty()) complain(s.id, "skip carries no reason");
  }
  for (const auto& inst : data.instances) {
    if (covered.count(inst.id) == 0) complain(inst.id, "missing from output");
  }

  for (const auto& t : result.triplets) {
    const std::string& id = t.input.id;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      complain(id, "input is not a dataset member");
      continue;
    }
    const AspectInstance& input = *it->second;
    if (t.input != input) complain(id, "input record altered");
    if (t.aspect != input.aspect_tokens()) complain(id, "aspect term mismatch");

    const std::string key = input.aspect_key();
    auto vec = vectors.find(key);
    if (vec == vectors.end() || !vec->second.valid) {
      complain(id, "selected despite an unrankable aspect");
      continue;
    }
    const std::set<std::string> top = brute_top_k(vectors, key, k_c);

    // Rule 1: the target is explicit. Rule 2: its aspect is among the k_c
    // most similar. Rule 3: polarities match.
    const AspectInstance& pos = t.positive_target;
    auto pos_it = by_id.find(pos.id);
    if (pos_it == by_id.end() || *pos_it->second != pos) {
      complain(id, "positive target is not a dataset member");
    }
    if (pos.implicit) complain(id, "positive target is implicit");
    if (pos.polarity != input.polarity) complain(id, "positive target polarity differs");
    if (top.count(pos.aspect_key()) == 0) {
      complain(id, "positive target aspect not among the k_c most similar");
    }
    if (pos.id == id) complain(id, "positive target is the input itself");

    if (t.negative_target.has_value()) {
      const AspectInstance& neg = *t.negative_target;
      auto neg_it = by_id.find(neg.id);
      if (neg_it == by_id.end() || *neg_it->second != neg) {
        complain(id, "negative target is not a dataset member");
      }
      if (neg.implicit) complain(id, "negative target is implicit");
      if (neg.id == id) complain(id, "negative target is the input itself");
      if (neg.aspect_key() != key) complain(id, "negative target aspect differs");
      switch (input.polarity) {
        case Polarity::kPositive:
          if (neg.polarity != Polarity::kNegative) {
            complain(id, "positive input paired with a non-negative contrast");
          }
          break;
        case Polarity::kNegative:
          if (neg.polarity != Polarity::kPositive) {
            complain(id, "negative input paired with a non-positive contrast");
          }
          break;
        case Polarity::kNeutral:
          if (neg.polarity == Polarity::kNeutral) {
            complain(id, "neutral input paired with a neutral contrast");
          }
          break;
      }

      if (t.negative_words.size() > k_n) complain(id, "more than k_n negative words");
      std::unordered_set<std::string> pos_words, seen_words;
      for (const auto& tok : pos.tokens) pos_words.insert(lowercase(tok));
      for (const auto& word : t.negative_words) {
        const std::string low = lowercase(word);
        if (!seen_words.insert(low).second) complain(id, "duplicate negative word");
        if (pos_words.count(low) > 0) {
          complain(id, "negative word also appears in the positive target");
        }
        if (std::find(neg.tokens.begin(), neg.tokens.end(), word) == neg.tokens.end()) {
          complain(id, "negative word '" + word + "' not in the contrast sentence");
        }
      }
    } else {
      if (!t.negative_words.empty()) {
        complain(id, "negative words without a negative target");
      }
      // Absence must be justified: no opposite-polarity explicit sentence
      // over the same aspect exists (for neutral inputs, at least one of the
      // two polarities must be exhausted).
      const bool has_pos = has_negative_candidate(input, data, Polarity::kPositive);
      const bool has_neg = has_negative_candidate(input, data, Polarity::kNegative);
      switch (input.polarity) {
        case Polarity::kPositive:
          if (has_neg) complain(id, "negative target missing despite candidates");
          break;
        case Polarity::kNegative:
          if (has_pos) complain(id, "negative target missing despite candidates");
          break;
        case Polarity::kNeutral:
          if (has_pos && has_neg) {
            complain(id, "negative target missing despite candidates");
          }
          break;
      }
    }
  }

  for (const auto& s : result.skipped) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      complain(s.id, "skip of a non-member");
      continue;
    }
    const AspectInstance& input = *it->second;
    auto vec = vectors.find(input.aspect_key());
    if (vec == vectors.end() || !vec->second.valid) continue;  // rightly skipped
    const std::set<std::string> top = brute_top_k(vectors, input.aspect_key(), k_c);
    if (!brute_positive_candidates(input, data, top).empty()) {
      complain(s.id, "skipped despite an available positive target");
    }
  }
  return bad;
}

double max_gradient_error(const std::function<double()>& loss,
                          std::span<const ParamTensor> tensors) {
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (const ParamTensor& tensor : tensors) {
    for (std::size_t i = 0; i < tensor.values->size(); ++i) {
      double& param = (*tensor.values)[i];
      const double saved = param;
      param = saved + kStep;
      const double up = loss();
      param = saved - kStep;
      const double down = loss();
      param = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      const double analytic = (*tensor.analytic)[i];
      const double denom = std::max({1e-4, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

namespace {

bool brute_contains(const std::vector<std::size_t>& haystack,
                    const std::vector<std::size_t>& needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  for (std::size_t s = 0; s + needle.size() <= haystack.size(); ++s) {
    bool all = true;
    for (std::size_t i = 0; i < needle.size(); ++i) {
      if (haystack[s + i] != needle[i]) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

bool brute_satisfied(const std::vector<std::size_t>& generated,
                     const ConstraintSet& constraints) {
  for (const auto& seq : constraints.forced()) {
    if (brute_contains(generated, seq)) return true;
  }
  return false;
}

void enumerate_rec(const ConditionalLM& model, const Condition& condition,
                   const ConstraintSet& constraints, std::size_t min_len,
                   std::size_t max_len, std::vector<std::size_t>& generated,
                   double logprob, std::optional<EnumeratedBest>& best) {
  const std::size_t eos = model.vocab().eos();
  const std::vector<double> dist = model.next_token_distribution(condition, generated);
  for (std::size_t id = 0; id < dist.size(); ++id) {
    generated.push_back(id);
    const double lp = logprob + std::log(dist[id]);
    if (id == eos && generated.size() >= min_len && brute_satisfied(generated, constraints)) {
      if (!best.has_value() || lp > best->logprob) {
        std::vector<std::size_t> tokens;
        tokens.push_back(model.vocab().bos());
        tokens.insert(tokens.end(), generated.begin(), generated.end());
        best = EnumeratedBest{std::move(tokens), lp, generated.size()};
      }
    }
    if (generated.size() < max_len) {
      enumerate_rec(model, condition, constraints, min_len, max_len, generated, lp, best);
    }
    generated.pop_back();
  }
}

}  // namespace

std::optional<EnumeratedBest> enumerate_best(const ConditionalLM& model,
                                             const Condition& condition,
                                             const ConstraintSet& constraints,
                                             std::size_t max_len) {
  std::optional<EnumeratedBest> best;
  std::vector<std::size_t> generated;
  enumerate_rec(model, condition, constraints, 1, max_len, generated, 0.0, best);
  return best;
}

std::optional<EnumeratedBest> enumerate_best_at_length(const ConditionalLM& model,
                                                       const Condition& condition,
                                                       const ConstraintSet& constraints,
                                                       std::size_t len) {
  std::optional<EnumeratedBest> best;
  std::vector<std::size_t> generated;
  enumerate_rec(model, condition, constraints, len, len, generated, 0.0, best);
  return best;
}

FunctionLM jittered_lm(Vocabulary vocab, std::uint64_t salt) {
  const std::size_t vsize = vocab.size();
  auto fn = [vsize, salt](const Condition& condition,
                          std::span<const std::size_t> prefix) {
    std::uint64_t h = splitmix64(salt);
    for (std::size_t id : condition.aspect) h = splitmix64(h ^ (id + 0x51ed2701UL));
    h = splitmix64(h ^ 0xa5a5a5a5UL);
    for (std::size_t id : condition.source) h = splitmix64(h ^ (id + 0x51ed2701UL));
    h = splitmix64(h ^ 0x5a5a5a5aUL);
    for (std::size_t id : prefix) h = splitmix64(h ^ (id + 0x51ed2701UL));
    std::vector<double> p(vsize);
    double sum = 0.0;
    for (std::size_t i = 0; i < vsize; ++i) {
      const std::uint64_t bits = splitmix64(h ^ (0x9e3779b9UL * (i + 1)));
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
      p[i] = 1.0 + 0.25 * (u - 0.5);  // [0.875, 1.125]
      sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
  };
  return FunctionLM(std::move(vocab), std::move(fn));
}

// --- CLI harness ------------------------------------------------------------

std::string scratch_dir() {
  static const std::string dir = [] {
    std::filesystem::path base = std::filesystem::temp_directory_path() /
                                 ("sentaug-tests-" + std::to_string(::getpid()));
    std::filesystem::create_directories(base);
    return base.string();
  }();
  return dir;
}

std::string write_scratch_file(const std::string& name, const std::string& content) {
  std::string path = scratch_dir() + "/" + name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  std::string tag = std::to_string(counter++);
  std::string out_path = scratch_dir() + "/cli-out-" + tag;
  std::string err_path = scratch_dir() + "/cli-err-" + tag;
  std::string command = std::string(SENTAUG_CLI_PATH) + " " + args + " >" + out_path +
                        " 2>" + err_path;
  int status = std::system(command.c_str());
  CliResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

}  // namespace sentaug::testing

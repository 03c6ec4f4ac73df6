#include "sentaug/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace sentaug {

namespace {

// Floor for log accumulation only; keeps logprobs finite when the model
// assigns (numerically) zero mass to a forced word.
constexpr double kLogFloor = 1e-300;

bool contains_contiguous(std::span<const std::size_t> haystack,
                         std::span<const std::size_t> needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  for (std::size_t start = 0; start + needle.size() <= haystack.size(); ++start) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + start)) return true;
  }
  return false;
}

// Length of the longest suffix of `generated` that is a proper prefix of
// `seq`. Sequences are a handful of tokens, so the scan is direct.
std::size_t partial_match(std::span<const std::size_t> generated,
                          std::span<const std::size_t> seq) {
  std::size_t bound = std::min(generated.size(), seq.size() - 1);
  for (std::size_t len = bound; len > 0; --len) {
    if (std::equal(seq.begin(), seq.begin() + len, generated.end() - len)) return len;
  }
  return 0;
}

}  // namespace

ConstraintSet::ConstraintSet(std::vector<std::vector<std::size_t>> forced) {
  if (forced.empty()) throw std::invalid_argument("constraint set must be non-empty");
  for (auto& seq : forced) {
    if (seq.empty()) throw std::invalid_argument("forced sequence must be non-empty");
    if (std::find(forced_.begin(), forced_.end(), seq) == forced_.end()) {
      forced_.push_back(std::move(seq));
    }
  }
}

bool ConstraintSet::satisfied(std::span<const std::size_t> generated) const {
  for (const auto& seq : forced_) {
    if (contains_contiguous(generated, seq)) return true;
  }
  return false;
}

std::vector<std::size_t> ConstraintSet::needed_tokens(
    std::span<const std::size_t> generated) const {
  if (satisfied(generated)) return {};
  std::set<std::size_t> needed;
  for (const auto& seq : forced_) {
    needed.insert(seq[partial_match(generated, seq)]);
  }
  return std::vector<std::size_t>(needed.begin(), needed.end());
}

std::vector<std::size_t> candidate_words(std::span<const double> dist, std::size_t z,
                                         const ConstraintSet& constraints,
                                         std::span<const std::size_t> generated) {
  if (z == 0) throw std::invalid_argument("z must be at least 1");
  std::vector<std::size_t> by_prob(dist.size());
  std::iota(by_prob.begin(), by_prob.end(), 0);
  std::size_t take = std::min(z, by_prob.size());
  std::partial_sort(by_prob.begin(), by_prob.begin() + take, by_prob.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] > dist[b];
                      return a < b;
                    });
  std::set<std::size_t> words(by_prob.begin(), by_prob.begin() + take);
  for (std::size_t id : constraints.needed_tokens(generated)) words.insert(id);
  return std::vector<std::size_t>(words.begin(), words.end());
}

std::vector<std::size_t> candidate_words(std::span<const double> dist, std::size_t z,
                                         const ConstraintSet& constraints) {
  return candidate_words(dist, z, constraints, std::span<const std::size_t>());
}

StepResult cbs_step(const Beam& beam, const ConditionalLM& model,
                    const Condition& condition, const ConstraintSet& constraints,
                    std::size_t z, std::size_t beam_width, Rng& rng,
                    DownselectPolicy policy) {
  if (beam.prefixes.empty()) throw std::invalid_argument("beam must be non-empty");
  if (beam_width == 0) throw std::invalid_argument("beam width must be at least 1");

  std::size_t eos = model.vocab().eos();
  std::vector<ScoredPrefix> pool;
  for (const ScoredPrefix& prefix : beam.prefixes) {
    std::vector<double> dist = model.next_token_distribution(condition, prefix.generated());
    for (std::size_t word : candidate_words(dist, z, constraints, prefix.generated())) {
      ScoredPrefix next;
      next.tokens = prefix.tokens;
      next.tokens.push_back(word);
      next.logprob = prefix.logprob + std::log(std::max(dist[word], kLogFloor));
      pool.push_back(std::move(next));
    }
  }

  const ScoredPrefix* best_finished = nullptr;
  for (const ScoredPrefix& candidate : pool) {
    if (candidate.tokens.back() != eos) continue;
    if (!constraints.satisfied(candidate.generated())) continue;
    if (best_finished == nullptr || candidate.logprob > best_finished->logprob) {
      best_finished = &candidate;
    }
  }
  StepResult result;
  if (best_finished != nullptr) {
    result.finished = FinishedSentence{best_finished->tokens, best_finished->logprob};
    return result;
  }

  if (pool.size() <= beam_width) {
    result.beam.prefixes = std::move(pool);
    return result;
  }
  if (policy == DownselectPolicy::kRandom) {
    std::vector<std::size_t> picks = rng.sample_without_replacement(pool.size(), beam_width);
    std::sort(picks.begin(), picks.end());
    for (std::size_t i : picks) result.beam.prefixes.push_back(std::move(pool[i]));
  } else {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + beam_width, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (pool[a].logprob != pool[b].logprob) {
                          return pool[a].logprob > pool[b].logprob;
                        }
                        return a < b;
                      });
    for (std::size_t i = 0; i < beam_width; ++i) {
      result.beam.prefixes.push_back(std::move(pool[order[i]]));
    }
  }
  return result;
}

GenerateResult generate(const ConditionalLM& model, const Condition& condition,
                        const ConstraintSet& constraints, const DecodeOptions& options,
                        Rng& rng) {
  if (options.max_steps == 0) throw std::invalid_argument("max_steps must be at least 1");
  if (options.top_z == 0) throw std::invalid_argument("top_z must be at least 1");

  Beam beam;
  beam.prefixes.push_back(ScoredPrefix{{model.vocab().bos()}, 0.0});
  std::optional<ScoredPrefix> best_constrained;

  for (std::size_t step = 1; step <= options.max_steps; ++step) {
    StepResult result = cbs_step(beam, model, condition, constraints, options.top_z,
                                 options.beam_width, rng, options.downselect);
    if (result.finished.has_value()) return std::move(*result.finished);
    beam = std::move(result.beam);
    for (const ScoredPrefix& prefix : beam.prefixes) {
      if (!constraints.satisfied(prefix.generated())) continue;
      if (!best_constrained.has_value() || prefix.logprob > best_constrained->logprob) {
        best_constrained = prefix;
      }
    }
  }
  return FailureReport{std::move(best_constrained), std::move(beam), options.max_steps};
}

std::vector<std::string> surface_tokens(const Vocabulary& vocab,
                                        std::span<const std::size_t> tokens) {
  std::size_t begin = 0;
  std::size_t end = tokens.size();
  if (begin < end && tokens[begin] == vocab.bos()) ++begin;
  if (begin < end && tokens[end - 1] == vocab.eos()) --end;
  std::vector<std::string> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(vocab.token(tokens[i]));
  return out;
}

}  // namespace sentaug

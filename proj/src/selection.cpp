#include "sentaug/selection.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "sentaug/strings.hpp"
#include "sentaug/syntax.hpp"

namespace sentaug {

Polarity opposite_polarity(Polarity p, Rng& rng) {
  switch (p) {
    case Polarity::kPositive:
      return Polarity::kNegative;
    case Polarity::kNegative:
      return Polarity::kPositive;
    case Polarity::kNeutral:
      return rng.uniform_index(2) == 0 ? Polarity::kPositive : Polarity::kNegative;
  }
  throw std::invalid_argument("unknown polarity");
}

SimilarityMatrix build_aspect_similarity(const Dataset& data, const EmbeddingTable& table) {
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  std::unordered_set<std::string> seen;
  for (const auto& inst : data.instances) {
    std::string key = inst.aspect_key();
    if (!seen.insert(key).second) continue;
    AspectVector vec = aspect_vector(table, inst.aspect_tokens());
    if (!vec.valid) continue;
    entries.emplace_back(std::move(key), std::move(vec.vector));
  }
  return SimilarityMatrix::build(std::move(entries));
}

std::vector<const AspectInstance*> build_candidates(const AspectInstance& input,
                                                    const Dataset& explicit_set,
                                                    const SimilarityMatrix& sim,
                                                    std::size_t k_c) {
  std::vector<const AspectInstance*> out;
  std::string input_key = input.aspect_key();
  if (!sim.index_of(input_key).has_value()) return out;
  std::size_t k = std::min(k_c, sim.size());
  if (k == 0) return out;
  std::unordered_set<std::string> wanted;
  for (const ScoredAspect& scored : sim.top_k_similar(input_key, k)) {
    wanted.insert(scored.aspect);
  }
  for (const auto& inst : explicit_set.instances) {
    if (inst.id == input.id) continue;
    if (inst.polarity != input.polarity) continue;
    if (wanted.count(inst.aspect_key()) == 0) continue;
    out.push_back(&inst);
  }
  return out;
}

namespace {

// Opposite-polarity explicit sentences over the same aspect term, input
// itself excluded.
std::vector<const AspectInstance*> negative_candidates(const AspectInstance& input,
                                                       Polarity opposite,
                                                       const Dataset& explicit_set) {
  std::vector<const AspectInstance*> out;
  std::string key = input.aspect_key();
  for (const auto& inst : explicit_set.instances) {
    if (inst.id == input.id) continue;
    if (inst.polarity != opposite) continue;
    if (inst.aspect_key() != key) continue;
    out.push_back(&inst);
  }
  return out;
}

std::vector<std::string> negatives_from_instance(const AspectInstance& inst,
                                                 const AspectInstance& positive,
                                                 std::size_t k_n) {
  // Words of the chosen positive target never qualify: the generator is
  // encouraged toward them by the weighted likelihood term.
  std::unordered_set<std::string> exclude;
  for (const auto& tok : positive.tokens) exclude.insert(lowercase(tok));
  if (inst.heads.has_value()) {
    DependencyTree tree(*inst.heads);
    return negative_word_set(tree, inst.aspect_span, inst.tokens, k_n, exclude);
  }
  std::vector<std::size_t> dist = positional_distances(inst.tokens.size(), inst.aspect_span);
  return negative_word_set(dist, inst.aspect_span, inst.tokens, k_n, exclude);
}

}  // namespace

SelectionResult build_training_set(const Dataset& data, const SelectionConfig& config,
                                   const EmbeddingTable& table) {
  SelectionResult result;
  ExplicitSplit split = split_explicit(data);
  SimilarityMatrix sim = build_aspect_similarity(data, table);

  for (std::size_t index = 0; index < data.instances.size(); ++index) {
    const AspectInstance& input = data.instances[index];
    Rng rng = Rng::split(config.seed, index);

    std::string key = input.aspect_key();
    if (!sim.index_of(key).has_value()) {
      result.skipped.push_back({input.id, "aspect term out of embedding vocabulary"});
      continue;
    }
    std::vector<const AspectInstance*> positives =
        build_candidates(input, split.explicit_part, sim, config.k_c);
    if (positives.empty()) {
      result.skipped.push_back(
          {input.id, "no explicit sentence with matching polarity over a similar aspect"});
      continue;
    }

    // Fixed draw order per instance: positive pick, then (for neutral
    // inputs) the opposite-polarity coin, then the negative pick.
    const AspectInstance& positive = *positives[rng.uniform_index(positives.size())];
    Polarity opposite = opposite_polarity(input.polarity, rng);
    std::vector<const AspectInstance*> negatives =
        negative_candidates(input, opposite, split.explicit_part);

    TrainingTriplet triplet;
    triplet.input = input;
    triplet.positive_target = positive;
    triplet.aspect = input.aspect_tokens();
    if (!negatives.empty()) {
      const AspectInstance& negative = *negatives[rng.uniform_index(negatives.size())];
      triplet.negative_target = negative;
      triplet.negative_words = negatives_from_instance(negative, positive, config.k_n);
    }
    result.triplets.push_back(std::move(triplet));
  }
  return result;
}

void save_triplets(const SelectionResult& result, std::ostream& out) {
  for (const auto& t : result.triplets) {
    nlohmann::json row;
    row["input_id"] = t.input.id;
    row["positive_id"] = t.positive_target.id;
    row["aspect"] = join(t.aspect);
    row["input_tokens"] = t.input.tokens;
    row["positive_tokens"] = t.positive_target.tokens;
    row["polarity"] = to_string(t.input.polarity);
    if (t.negative_target.has_value()) {
      row["negative_id"] = t.negative_target->id;
      row["negative_tokens"] = t.negative_target->tokens;
    } else {
      row["negative_id"] = nullptr;
      row["negative_tokens"] = nullptr;
    }
    row["negative_words"] = t.negative_words;
    out << row.dump() << "\n";
  }
  for (const auto& s : result.skipped) {
    nlohmann::json row;
    row["skipped_id"] = s.id;
    row["reason"] = s.reason;
    out << row.dump() << "\n";
  }
}

}  // namespace sentaug

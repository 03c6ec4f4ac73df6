#include "sentaug/corpus.hpp"

#include <unordered_set>

#include "json.hpp"
#include "sentaug/error.hpp"
#include "sentaug/strings.hpp"

namespace sentaug {

using nlohmann::json;

std::string to_string(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNegative: return "negative";
    case Polarity::kNeutral: return "neutral";
  }
  return "neutral";
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "positive") return Polarity::kPositive;
  if (s == "negative") return Polarity::kNegative;
  if (s == "neutral") return Polarity::kNeutral;
  throw DataError("unknown polarity '" + s + "'");
}

std::vector<std::string> AspectInstance::aspect_tokens() const {
  return {tokens.begin() + static_cast<std::ptrdiff_t>(aspect_span.from),
          tokens.begin() + static_cast<std::ptrdiff_t>(aspect_span.to)};
}

std::string AspectInstance::aspect_key() const {
  const auto aspect = aspect_tokens();
  return lowercase(join(aspect));
}

namespace {

AspectInstance instance_from_json(const json& record) {
  AspectInstance inst;
  inst.id = record.at("id").get<std::string>();
  if (inst.id.empty()) throw DataError("field 'id': empty");
  inst.tokens = record.at("tokens").get<std::vector<std::string>>();
  const auto from = record.at("aspect_from").get<long long>();
  const auto to = record.at("aspect_to").get<long long>();
  const long long m = static_cast<long long>(inst.tokens.size());
  if (from < 0 || to <= from || to > m) {
    throw DataError("field 'aspect_from'/'aspect_to': span [" + std::to_string(from) + ", " +
                    std::to_string(to) + ") invalid for " + std::to_string(m) + " tokens");
  }
  inst.aspect_span = {static_cast<std::size_t>(from), static_cast<std::size_t>(to)};
  inst.polarity = polarity_from_string(record.at("polarity").get<std::string>());
  inst.implicit = record.at("implicit").get<bool>();
  if (record.contains("heads") && !record.at("heads").is_null()) {
    auto heads = record.at("heads").get<std::vector<long long>>();
    if (heads.size() != inst.tokens.size()) {
      throw DataError("field 'heads': length " + std::to_string(heads.size()) +
                      " does not match " + std::to_string(inst.tokens.size()) + " tokens");
    }
    std::vector<std::size_t> converted;
    converted.reserve(heads.size());
    for (const long long h : heads) {
      if (h < 0) throw DataError("field 'heads': negative head index");
      converted.push_back(static_cast<std::size_t>(h));
    }
    DependencyTree validate(converted);  // throws DataError on a bad tree
    inst.heads = std::move(converted);
  }
  return inst;
}

json instance_to_json(const AspectInstance& inst) {
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

Dataset load_dataset(std::istream& in, std::string name) {
  Dataset dataset;
  dataset.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    try {
      AspectInstance inst = instance_from_json(record);
      if (!ids.insert(inst.id).second) {
        throw DataError("duplicate id '" + inst.id + "'");
      }
      dataset.instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& inst : dataset.instances) {
    out << instance_to_json(inst).dump() << '\n';
  }
}

ExplicitSplit split_explicit(const Dataset& dataset) {
  ExplicitSplit split;
  split.explicit_part.name = dataset.name + "/explicit";
  split.implicit_part.name = dataset.name + "/implicit";
  for (const auto& inst : dataset.instances) {
    (inst.implicit ? split.implicit_part : split.explicit_part).instances.push_back(inst);
  }
  return split;
}

DatasetStatistics statistics(const Dataset& dataset) {
  DatasetStatistics stats;
  for (const auto& inst : dataset.instances) {
    switch (inst.polarity) {
      case Polarity::kPositive: ++stats.positive; break;
      case Polarity::kNegative: ++stats.negative; break;
      case Polarity::kNeutral: ++stats.neutral; break;
    }
    if (inst.implicit) ++stats.implicit;
  }
  stats.total = dataset.size();
  return stats;
}

void attach_trees(Dataset& dataset, const std::vector<ConlluSentence>& sentences) {
  if (sentences.size() != dataset.size()) {
    throw DataError("conllu/dataset mismatch: " + std::to_string(sentences.size()) +
                    " parsed sentences for " + std::to_string(dataset.size()) + " instances");
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    AspectInstance& inst = dataset.instances[i];
    const ConlluSentence& sent = sentences[i];
    if (sent.forms != inst.tokens) {
      throw DataError("conllu sentence " + std::to_string(i + 1) +
                      " does not match tokens of instance '" + inst.id + "'");
    }
    inst.heads = sent.tree.heads();
  }
}

}  // namespace sentaug

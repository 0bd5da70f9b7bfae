#include "azlab/synthetic.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "azlab/random.hpp"

namespace azlab {

nlohmann::json generate_keyvalue_squad(const SyntheticConfig& config) {
  if (config.min_pairs < 1 || config.min_pairs > config.max_pairs) throw std::invalid_argument("invalid pair range");
  if (config.max_pairs > config.num_keys) throw std::invalid_argument("more pairs per passage than distinct keys");
  if (config.num_values < 1 || config.questions_per_passage < 1) throw std::invalid_argument("empty synthetic vocabulary");
  Rng rng(config.seed);
  nlohmann::json paragraphs = nlohmann::json::array();
  std::vector<std::size_t> keys(config.num_keys);
  std::iota(keys.begin(), keys.end(), std::size_t{0});
  std::size_t qid = 0;
  for (std::size_t p = 0; p < config.num_passages; ++p) {
    const std::size_t pairs = config.min_pairs + rng.below(config.max_pairs - config.min_pairs + 1);
    rng.shuffle(std::span<std::size_t>(keys));
    std::string context;
    std::vector<std::pair<std::string, std::size_t>> values;  // value text, char offset
    for (std::size_t i = 0; i < pairs; ++i) {
      const std::size_t v = config.bind_values ? keys[i] : rng.below(config.num_values);
      const std::string value = "v" + std::to_string(v);
      if (!context.empty()) context += ' ';
      context += "k" + std::to_string(keys[i]) + " is ";
      values.emplace_back(value, context.size());
      context += value + " .";
    }
    nlohmann::json qas = nlohmann::json::array();
    for (std::size_t q = 0; q < config.questions_per_passage; ++q) {
      const std::size_t pick = rng.below(pairs);
      char id[32];
      std::snprintf(id, sizeof id, "%06zu", qid++);
      qas.push_back({{"id", config.id_prefix + "-" + id},
                     {"question", "what is k" + std::to_string(keys[pick]) + " ?"},
                     {"answers", nlohmann::json::array({{{"text", values[pick].first},
                                                         {"answer_start", values[pick].second}}})}});
    }
    paragraphs.push_back({{"context", context}, {"qas", std::move(qas)}});
  }
  return {{"version", "1.1"},
          {"data", nlohmann::json::array({{{"title", "synthetic key-value"}, {"paragraphs", std::move(paragraphs)}}})}};
}

}  // namespace azlab

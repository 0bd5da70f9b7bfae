#pragma once

// SQuAD exact-match / F1 scoring.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "azlab/text.hpp"

namespace azlab {

/// qas_id → predicted answer text.
using PredictionSet = std::map<std::string, std::string>;

/// Unicode general category P, plus the ASCII symbols of Python's string.punctuation.
bool is_punctuation(char32_t code_point);

/// Lowercase, drop punctuation, drop the whole words a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);
/// normalize_answer(text) split on whitespace.
std::vector<std::string> answer_tokens(std::string_view text);

int exact_match(std::string_view prediction, std::span<const std::string> golds);
double f1_score(std::string_view prediction, std::span<const std::string> golds);

struct MetricsReport {
  double exact = 0.0;
  double f1 = 0.0;
  std::size_t total = 0;
  double has_ans_exact = 0.0;
  double has_ans_f1 = 0.0;
  std::size_t has_ans_total = 0;

  /// Single-line JSON with the keys exact, f1, total, HasAns_exact, HasAns_f1,
  /// HasAns_total, floats printed at full round-trip precision.
  std::string to_json() const;
};

/// Scores every question of `dataset`; throws std::invalid_argument listing
/// qas_ids that have no prediction. Extra predictions are ignored.
MetricsReport evaluate(std::span<const SquadExample> dataset, const PredictionSet& predictions);

PredictionSet read_predictions(const std::filesystem::path& path);
PredictionSet parse_predictions(std::string_view json_text);
std::string predictions_to_json(const PredictionSet& predictions);

}  // namespace azlab

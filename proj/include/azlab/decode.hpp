#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "azlab/tensor.hpp"
#include "azlab/text.hpp"

namespace azlab {

struct SpanPrediction {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;  ///< start_logit[start] + end_logit[end]
  std::size_t window = 0;
  friend bool operator==(const SpanPrediction&, const SpanPrediction&) = default;
};

/// Ranks every (s, e) with s ≤ e < s + max_answer_length inside the passage by
/// start_logits[s] + end_logits[e], descending; ties prefer smaller s, then
/// smaller e. Returns at most n_best entries with text cut from `context`.
std::vector<SpanPrediction> predict_span(const Tensor& start_logits, const Tensor& end_logits, const Feature& feature,
                                         std::string_view context, std::size_t max_answer_length = 30,
                                         std::size_t n_best = 20);

/// Best span over the windows of one question: highest score, ties to the
/// earlier window. `per_window` holds each window's ranked list.
SpanPrediction best_across_windows(std::span<const std::vector<SpanPrediction>> per_window);

}  // namespace azlab

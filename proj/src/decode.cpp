#include "azlab/decode.hpp"

#include <algorithm>
#include <stdexcept>

namespace azlab {

std::vector<SpanPrediction> predict_span(const Tensor& start_logits, const Tensor& end_logits, const Feature& feature,
                                         std::string_view context, std::size_t max_answer_length, std::size_t n_best) {
  if (max_answer_length < 1) throw std::invalid_argument("predict_span: max_answer_length must be at least 1");
  if (n_best < 1) throw std::invalid_argument("predict_span: n_best must be at least 1");
  const IndexRange passage = feature.layout.passage;
  if (passage.empty()) throw std::invalid_argument("predict_span: feature has an empty passage");
  const std::size_t n = feature.layout.length();
  if (start_logits.numel() != n || end_logits.numel() != n) {
    throw std::invalid_argument("predict_span: logits of length " + std::to_string(start_logits.numel()) + "/" +
                                std::to_string(end_logits.numel()) + " for a sequence of " + std::to_string(n));
  }
  std::vector<SpanPrediction> all;
  for (std::size_t s = passage.begin; s < passage.end; ++s) {
    const std::size_t last = std::min(passage.end, s + max_answer_length);
    for (std::size_t e = s; e < last; ++e) {
      SpanPrediction p;
      p.start = s;
      p.end = e;
      p.score = start_logits[s] + end_logits[e];
      p.window = feature.window_index;
      all.push_back(std::move(p));
    }
  }
  auto better = [](const SpanPrediction& a, const SpanPrediction& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  };
  const std::size_t keep = std::min(n_best, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  for (auto& p : all) {
    const CharSpan a = *feature.token_span(p.start);
    const CharSpan b = *feature.token_span(p.end);
    if (b.end > context.size()) throw std::invalid_argument("predict_span: token span outside the context");
    p.text = std::string(context.substr(a.begin, b.end - a.begin));
  }
  return all;
}

SpanPrediction best_across_windows(std::span<const std::vector<SpanPrediction>> per_window) {
  const SpanPrediction* best = nullptr;
  for (const auto& ranked : per_window) {
    if (ranked.empty()) continue;
    if (!best || ranked.front().score > best->score) best = &ranked.front();
  }
  if (!best) throw std::invalid_argument("best_across_windows: no candidate spans");
  return *best;
}

}  // namespace azlab

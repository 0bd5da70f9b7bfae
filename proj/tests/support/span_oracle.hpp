#pragma once

// Brute-force span ranking: repeated linear selection of the best remaining
// (start, end) pair, comparing scores first, then start, then end.

#include <string>
#include <vector>

#include "azlab/decode.hpp"
#include "azlab/random.hpp"
#include "support/op_cases.hpp"

namespace azlab::testing {

inline std::vector<SpanPrediction> brute_force_spans(const Tensor& start, const Tensor& end, const Feature& f,
                                                     const std::string& context, std::size_t max_len,
                                                     std::size_t n_best) {
  struct Pair {
    std::size_t s, e;
    double score;
  };
  std::vector<Pair> pool;
  for (std::size_t s = 0; s < f.layout.length(); ++s)
    for (std::size_t e = 0; e < f.layout.length(); ++e)
      if (f.layout.passage.contains(s) && f.layout.passage.contains(e) && s <= e && e - s < max_len)
        pool.push_back({s, e, start[s] + end[e]});
  std::vector<SpanPrediction> out;
  while (!pool.empty() && out.size() < n_best) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      const Pair& a = pool[i];
      const Pair& b = pool[best];
      if (a.score > b.score || (a.score == b.score && (a.s < b.s || (a.s == b.s && a.e < b.e)))) best = i;
    }
    const Pair p = pool[best];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    const std::size_t from = f.passage_spans[p.s - f.layout.passage.begin].begin;
    const std::size_t to = f.passage_spans[p.e - f.layout.passage.begin].end;
    out.push_back({context.substr(from, to - from), p.s, p.e, p.score, f.window_index});
  }
  return out;
}

struct DecodeInstance {
  Feature feature;
  std::string context;
  Tensor start, end;
  std::size_t max_len = 1;
  std::size_t n_best = 1;
};

/// Random passage of 1..12 tokens. Half the instances draw logits from a
/// three-value set so equal scores are common.
inline DecodeInstance random_decode_instance(Rng& rng) {
  DecodeInstance d;
  const std::size_t q = rng.below(4), p = 1 + rng.below(12);
  const std::size_t n = q + p + 3 + rng.below(3);
  d.feature = tiny_feature(rng, q, p, n, 10);
  for (std::size_t i = 0; i < p; ++i) d.context += "w" + std::to_string(i % 10) + " ";
  d.context += "       ";
  d.start = Tensor(Shape{n}, kMaskSentinel);
  d.end = Tensor(Shape{n}, kMaskSentinel);
  const bool ties = rng.below(2) == 0;
  for (std::size_t i = d.feature.layout.passage.begin; i < d.feature.layout.passage.end; ++i) {
    d.start[i] = ties ? static_cast<double>(rng.below(3)) : rng.normal();
    d.end[i] = ties ? static_cast<double>(rng.below(3)) : rng.normal();
  }
  d.max_len = 1 + rng.below(p + 2);
  d.n_best = 1 + rng.below(25);
  return d;
}

}  // namespace azlab::testing

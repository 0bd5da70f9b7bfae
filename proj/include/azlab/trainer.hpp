#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "azlab/autodiff.hpp"
#include "azlab/checkpoint.hpp"
#include "azlab/text.hpp"

namespace azlab {

struct TrainConfig {
  double epochs = 3.0;
  std::size_t batch_size = 16;
  double learning_rate = 3e-5;
  std::uint64_t seed = 0;
  /// Upper bound on optimizer steps (nullopt: epochs decide).
  std::optional<std::size_t> max_steps;

  void validate() const;
};

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossPoint> loss_trace;
};

/// Mean of the start and end cross-entropies. When `passage` is given the gold
/// indices must fall inside it.
Var span_loss(Var start_logits, Var end_logits, std::size_t gold_start, std::size_t gold_end,
              std::optional<IndexRange> passage = std::nullopt);

/// Freshly initialized checkpoint (parameters seeded by `seed`).
Checkpoint initial_checkpoint(const ModelConfig& model, const FeaturizeConfig& text, const Vocab& vocab,
                              std::uint64_t seed);

/// Number of optimizer steps train() will take for `num_features` usable features.
std::size_t planned_steps(std::size_t num_features, const TrainConfig& config);

/// Seeded mini-batch Adam fine-tuning on the span loss, starting from `init`.
/// Features without a gold span are skipped; if none has one, throws.
TrainResult train(std::span<const Feature> features, const Checkpoint& init, const TrainConfig& config);

/// Convenience: initializes from config.seed, then trains.
TrainResult train(std::span<const Feature> features, const ModelConfig& model, const FeaturizeConfig& text,
                  const Vocab& vocab, const TrainConfig& config);

/// "step,loss" CSV.
void write_loss_csv(std::span<const LossPoint> trace, const std::filesystem::path& path);

}  // namespace azlab

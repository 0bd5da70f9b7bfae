#include "azlab/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "azlab/model.hpp"
#include "azlab/random.hpp"

namespace azlab {

void TrainConfig::validate() const {
  if (!(epochs > 0.0)) throw std::invalid_argument("epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

Var span_loss(Var start_logits, Var end_logits, std::size_t gold_start, std::size_t gold_end,
              std::optional<IndexRange> passage) {
  if (passage && (!passage->contains(gold_start) || !passage->contains(gold_end))) {
    throw std::out_of_range("span_loss: gold span (" + std::to_string(gold_start) + "," + std::to_string(gold_end) +
                            ") outside passage [" + std::to_string(passage->begin) + "," +
                            std::to_string(passage->end) + ")");
  }
  return ad::scale(ad::add(ad::cross_entropy(start_logits, gold_start), ad::cross_entropy(end_logits, gold_end)), 0.5);
}

Checkpoint initial_checkpoint(const ModelConfig& model, const FeaturizeConfig& text, const Vocab& vocab,
                              std::uint64_t seed) {
  Checkpoint c;
  c.model = model;
  c.model.vocab_size = vocab.size();
  c.text = text;
  c.vocab = vocab;
  c.params = init_parameters(c.model, seed);
  c.metadata.seed = seed;
  return c;
}

std::size_t planned_steps(std::size_t num_features, const TrainConfig& config) {
  const auto by_epochs = static_cast<std::size_t>(
      std::floor(static_cast<double>(num_features) / static_cast<double>(config.batch_size) * config.epochs));
  const std::size_t steps = std::max<std::size_t>(by_epochs, num_features > 0 ? 1 : 0);
  return config.max_steps ? std::min(steps, *config.max_steps) : steps;
}

TrainResult train(std::span<const Feature> features, const Checkpoint& init, const TrainConfig& config) {
  config.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].has_gold()) usable.push_back(i);
  if (usable.empty()) throw std::invalid_argument("train: no feature carries a gold answer span");

  TrainResult result{init, {}};
  Checkpoint& ckpt = result.checkpoint;
  ckpt.metadata.seed = config.seed;
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});
  // Shuffling uses its own stream so it is independent of how parameters were drawn.
  Rng order_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  const std::size_t steps = planned_steps(usable.size(), config);
  std::vector<std::size_t> order = usable;
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < steps; ++step) {
    Gradients batch_grads;
    double batch_loss = 0.0;
    const std::size_t bs = std::min(config.batch_size, usable.size());
    for (std::size_t b = 0; b < bs; ++b) {
      if (cursor == order.size()) {
        order_rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const Feature& f = features[order[cursor++]];
      Tape tape;
      const Var hidden = encode(tape, ckpt.params, ckpt.model, f, ZoneSpec::identity());
      const SpanLogits logits = span_logits(tape, hidden, ckpt.params, f.layout);
      const Var loss = span_loss(logits.start, logits.end, *f.gold_start, *f.gold_end, f.layout.passage);
      batch_loss += loss.value().item();
      Gradients grads = tape.backward(loss);
      if (batch_grads.empty()) {
        batch_grads = std::move(grads);
      } else {
        for (auto& [name, g] : grads) {
          Tensor& acc = batch_grads.at(name);
          for (std::size_t i = 0; i < g.numel(); ++i) acc[i] += g[i];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(bs);
    for (auto& [name, g] : batch_grads)
      for (double& v : g.data()) v *= inv;
    adam_update(ckpt.params, batch_grads, adam);
    result.loss_trace.push_back({step, batch_loss * inv});
  }
  ckpt.metadata.steps = steps;
  return result;
}

TrainResult train(std::span<const Feature> features, const ModelConfig& model, const FeaturizeConfig& text,
                  const Vocab& vocab, const TrainConfig& config) {
  return train(features, initial_checkpoint(model, text, vocab, config.seed), config);
}

void write_loss_csv(std::span<const LossPoint> trace, const std::filesystem::path& path) {
  std::string out = "step,loss\n";
  char buf[64];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", p.step, p.loss);
    out += buf;
  }
  write_file_atomic(path, out);
}

}  // namespace azlab

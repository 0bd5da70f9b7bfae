#pragma once

// Zone-maskable transformer encoder with a span-extraction head.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "azlab/adam.hpp"
#include "azlab/autodiff.hpp"
#include "azlab/text.hpp"
#include "azlab/zones.hpp"
#include "json.hpp"

namespace azlab {

struct ModelConfig {
  std::size_t num_layers = 4;
  std::size_t num_heads = 4;
  std::size_t d_model = 128;
  std::size_t d_ff = 512;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 128;
  double layer_norm_eps = 1e-12;

  std::size_t head_dim() const { return d_model / num_heads; }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Parameter names and shapes in initialization order.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);

/// Truncated normal (σ = 0.02) weights and embeddings, zero biases, unit
/// layer-norm gains. Deterministic in `seed`.
ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed);

/// Throws if `params` does not hold exactly the names/shapes of `config`.
void check_parameters(const ModelConfig& config, const ParameterSet& params);

struct LayerWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  Var ln1_gamma, ln1_beta;
  Var w1, b1, w2, b2;
  Var ln2_gamma, ln2_beta;
};

LayerWeights bind_layer(Tape& tape, const ParameterSet& params, std::size_t layer);

/// Intermediate values of one attention layer, for inspection in tests.
struct AttentionTrace {
  std::vector<Tensor> probabilities;  ///< per head, n×n
  Tensor context;                     ///< concatenated head outputs before the output projection
  Tensor attention_sublayer;          ///< layer_norm(x + attention(x))
};

/// One encoder layer: masked multi-head self-attention and a GELU feed-forward
/// block, each with residual connection and post layer norm. The zone and
/// padding masks are added to the scores of every head.
Var attention_layer(Var x, const LayerWeights& w, const ModelConfig& config, const Tensor& zone_mask,
                    const Tensor& padding_mask, AttentionTrace* trace = nullptr);

/// Token + position + segment embeddings (layer-normed) followed by every
/// encoder layer; the zone mask is injected into the layers `spec` selects.
Var encode(Tape& tape, const ParameterSet& params, const ModelConfig& config, const Feature& feature,
           const ZoneSpec& spec, std::vector<AttentionTrace>* traces = nullptr);

struct SpanLogits {
  Var start;
  Var end;
};

/// Start/end logits from an affine head; positions outside the passage are
/// set to exactly kMaskSentinel.
SpanLogits span_logits(Tape& tape, Var hidden, const ParameterSet& params, const SequenceLayout& layout);

}  // namespace azlab

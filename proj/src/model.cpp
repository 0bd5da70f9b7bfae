#include "azlab/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "azlab/random.hpp"

namespace azlab {

void ModelConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("model needs at least one layer");
  if (num_heads < 1 || d_model % num_heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(d_model) + " is not divisible by " +
                                std::to_string(num_heads) + " heads");
  }
  if (d_model == 0 || d_ff == 0) throw std::invalid_argument("d_model and d_ff must be positive");
  if (vocab_size <= Vocab::kNumReserved) throw std::invalid_argument("vocab_size must exceed the reserved tokens");
  if (max_positions == 0) throw std::invalid_argument("max_positions must be positive");
  if (!(layer_norm_eps > 0.0)) throw std::invalid_argument("layer_norm_eps must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"num_layers", c.num_layers}, {"num_heads", c.num_heads},         {"d_model", c.d_model},
                     {"d_ff", c.d_ff},             {"vocab_size", c.vocab_size},       {"max_positions", c.max_positions},
                     {"layer_norm_eps", c.layer_norm_eps}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("num_layers").get_to(c.num_layers);
  j.at("num_heads").get_to(c.num_heads);
  j.at("d_model").get_to(c.d_model);
  j.at("d_ff").get_to(c.d_ff);
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("max_positions").get_to(c.max_positions);
  j.at("layer_norm_eps").get_to(c.layer_norm_eps);
}

namespace {

std::string layer_prefix(std::size_t layer) { return "layer" + std::to_string(layer) + "."; }

bool is_bias_like(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = name.substr(dot + 1);
  return leaf.front() == 'b' || leaf == "beta";
}

}  // namespace

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<std::pair<std::string, Shape>> out = {
      {"embeddings.token", {c.vocab_size, d}},
      {"embeddings.position", {c.max_positions, d}},
      {"embeddings.segment", {2, d}},
      {"embeddings.ln.gamma", {d}},
      {"embeddings.ln.beta", {d}},
  };
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* proj : {"q", "k", "v", "o"}) {
      out.push_back({p + "attn.w" + proj, {d, d}});
      out.push_back({p + "attn.b" + proj, {d}});
    }
    out.push_back({p + "ln1.gamma", {d}});
    out.push_back({p + "ln1.beta", {d}});
    out.push_back({p + "ffn.w1", {d, c.d_ff}});
    out.push_back({p + "ffn.b1", {c.d_ff}});
    out.push_back({p + "ffn.w2", {c.d_ff, d}});
    out.push_back({p + "ffn.b2", {d}});
    out.push_back({p + "ln2.gamma", {d}});
    out.push_back({p + "ln2.beta", {d}});
  }
  out.push_back({"span.w", {d, 2}});
  out.push_back({"span.b", {2}});
  return out;
}

ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParameterSet params;
  for (auto& [name, shape] : parameter_shapes(config)) {
    Tensor t(shape);
    if (name.ends_with(".gamma")) {
      for (double& v : t.data()) v = 1.0;
    } else if (!is_bias_like(name)) {
      for (double& v : t.data()) v = rng.truncated_normal(0.02);
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

void check_parameters(const ModelConfig& config, const ParameterSet& params) {
  const auto shapes = parameter_shapes(config);
  for (const auto& [name, shape] : shapes) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw std::invalid_argument("parameter '" + name + "' has shape " + shape_str(it->second.shape()) +
                                  ", config expects " + shape_str(shape));
    }
  }
  if (params.size() != shapes.size()) {
    for (const auto& [name, t] : params) {
      bool known = false;
      for (const auto& s : shapes) known = known || s.first == name;
      if (!known) throw std::invalid_argument("unexpected parameter '" + name + "'");
    }
  }
}

LayerWeights bind_layer(Tape& tape, const ParameterSet& params, std::size_t layer) {
  const std::string p = layer_prefix(layer);
  auto bind = [&](const std::string& leaf) {
    const std::string name = p + leaf;
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    return tape.parameter(name, it->second);
  };
  return LayerWeights{bind("attn.wq"),   bind("attn.bq"),  bind("attn.wk"),   bind("attn.bk"),
                      bind("attn.wv"),   bind("attn.bv"),  bind("attn.wo"),   bind("attn.bo"),
                      bind("ln1.gamma"), bind("ln1.beta"), bind("ffn.w1"),    bind("ffn.b1"),
                      bind("ffn.w2"),    bind("ffn.b2"),   bind("ln2.gamma"), bind("ln2.beta")};
}

Var attention_layer(Var x, const LayerWeights& w, const ModelConfig& config, const Tensor& zone_mask,
                    const Tensor& padding_mask, AttentionTrace* trace) {
  const Shape& xs = x.shape();
  if (xs.size() != 2 || xs[1] != config.d_model) {
    throw std::invalid_argument("attention_layer: input " + shape_str(xs) + " does not have d_model " +
                                std::to_string(config.d_model) + " columns");
  }
  const std::size_t n = xs[0];
  const Shape square{n, n};
  if (zone_mask.shape() != square || padding_mask.shape() != square) {
    throw std::invalid_argument("attention_layer: masks " + shape_str(zone_mask.shape()) + " / " +
                                shape_str(padding_mask.shape()) + " do not match sequence length " +
                                std::to_string(n));
  }
  Tensor mask = zone_mask;
  for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] += padding_mask[i];

  const Var q = ad::add_row(ad::matmul(x, w.wq), w.bq);
  const Var k = ad::add_row(ad::matmul(x, w.wk), w.bk);
  const Var v = ad::add_row(ad::matmul(x, w.wv), w.bv);
  const std::size_t dh = config.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(config.num_heads);
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    const Var qh = ad::slice_cols(q, h * dh, (h + 1) * dh);
    const Var kh = ad::slice_cols(k, h * dh, (h + 1) * dh);
    const Var vh = ad::slice_cols(v, h * dh, (h + 1) * dh);
    const Var probs = ad::masked_softmax(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt), mask);
    if (trace) trace->probabilities.push_back(probs.value());
    heads.push_back(ad::matmul(probs, vh));
  }
  const Var context = ad::concat_cols(heads);
  const Var attended = ad::add_row(ad::matmul(context, w.wo), w.bo);
  const Var h1 = ad::layer_norm(ad::add(x, attended), w.ln1_gamma, w.ln1_beta, config.layer_norm_eps);
  if (trace) {
    trace->context = context.value();
    trace->attention_sublayer = h1.value();
  }
  const Var inner = ad::gelu(ad::add_row(ad::matmul(h1, w.w1), w.b1));
  const Var ffn = ad::add_row(ad::matmul(inner, w.w2), w.b2);
  return ad::layer_norm(ad::add(h1, ffn), w.ln2_gamma, w.ln2_beta, config.layer_norm_eps);
}

Var encode(Tape& tape, const ParameterSet& params, const ModelConfig& config, const Feature& feature,
           const ZoneSpec& spec, std::vector<AttentionTrace>* traces) {
  spec.validate(config.num_layers);
  const std::size_t n = feature.input_ids.size();
  if (n == 0 || n != feature.layout.length() || feature.segment_ids.size() != n) {
    throw std::invalid_argument("encode: feature arrays disagree with its layout");
  }
  if (n > config.max_positions) {
    throw std::invalid_argument("encode: sequence length " + std::to_string(n) + " exceeds max_positions " +
                                std::to_string(config.max_positions));
  }
  for (std::size_t id : feature.input_ids) {
    if (id >= config.vocab_size) {
      throw std::out_of_range("encode: token id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(config.vocab_size));
    }
  }
  auto param = [&](const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    return tape.parameter(name, it->second);
  };
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  std::vector<std::size_t> segments(feature.segment_ids.begin(), feature.segment_ids.end());

  Var h = ad::add(ad::add(ad::gather_rows(param("embeddings.token"), feature.input_ids),
                          ad::gather_rows(param("embeddings.position"), positions)),
                  ad::gather_rows(param("embeddings.segment"), segments));
  h = ad::layer_norm(h, param("embeddings.ln.gamma"), param("embeddings.ln.beta"), config.layer_norm_eps);

  const Tensor pad = padding_mask(feature.layout);
  const Tensor no_zone(Shape{n, n});
  const Tensor zone = spec.zone == Zone::None ? no_zone : zone_mask(feature.layout, spec.zone);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const LayerWeights w = bind_layer(tape, params, l);
    AttentionTrace* trace = nullptr;
    if (traces) trace = &traces->emplace_back();
    h = attention_layer(h, w, config, spec.applies_to(l) ? zone : no_zone, pad, trace);
  }
  return h;
}

SpanLogits span_logits(Tape& tape, Var hidden, const ParameterSet& params, const SequenceLayout& layout) {
  const std::size_t n = hidden.shape().at(0);
  if (layout.length() != n) {
    throw std::invalid_argument("span_logits: layout length " + std::to_string(layout.length()) +
                                " does not match hidden rows " + std::to_string(n));
  }
  const Var w = tape.parameter("span.w", params.at("span.w"));
  const Var b = tape.parameter("span.b", params.at("span.b"));
  const Var logits = ad::add_row(ad::matmul(hidden, w), b);
  Tensor keep(Shape{n}), fill(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    if (layout.passage.contains(i))
      keep[i] = 1.0;
    else
      fill[i] = kMaskSentinel;
  }
  const Var keep_v = tape.constant(std::move(keep));
  const Var fill_v = tape.constant(std::move(fill));
  auto column = [&](std::size_t c) {
    return ad::add(ad::mul(ad::reshape(ad::slice_cols(logits, c, c + 1), {n}), keep_v), fill_v);
  };
  return {column(0), column(1)};
}

}  // namespace azlab

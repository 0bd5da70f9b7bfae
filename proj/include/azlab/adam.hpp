#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "azlab/autodiff.hpp"
#include "azlab/tensor.hpp"

namespace azlab {

/// Named model parameters; iteration order (sorted by name) is the canonical order.
using ParameterSet = std::map<std::string, Tensor>;

struct AdamConfig {
  double learning_rate = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One bias-corrected Adam step over every parameter in `params`.
/// `grads` must hold a same-shaped finite gradient for each parameter; the
/// update is all-or-nothing (validation happens before anything is mutated).
void adam_update(ParameterSet& params, const Gradients& grads, AdamState& state);

}  // namespace azlab

#include "azlab/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace azlab {

void adam_update(ParameterSet& params, const Gradients& grads, AdamState& state) {
  for (const auto& [name, value] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_update: no gradient for parameter '" + name + "'");
    if (it->second.shape() != value.shape()) {
      throw std::invalid_argument("adam_update: gradient for '" + name + "' has shape " +
                                  shape_str(it->second.shape()) + ", parameter has " + shape_str(value.shape()));
    }
    for (double g : it->second.data()) {
      if (!std::isfinite(g)) throw std::invalid_argument("adam_update: non-finite gradient for parameter '" + name + "'");
    }
    for (const ParameterSet* moments : {&state.first_moment, &state.second_moment}) {
      auto m = moments->find(name);
      if (m != moments->end() && m->second.shape() != value.shape()) {
        throw std::invalid_argument("adam_update: optimizer state for '" + name + "' has shape " +
                                    shape_str(m->second.shape()));
      }
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, value] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, value.shape());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, value.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < value.numel(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace azlab

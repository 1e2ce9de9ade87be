#include "impostor/adam.hpp"

#include <cmath>

#include "impostor/error.hpp"

namespace impostor {

void AdamHyper::validate() const {
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, "Adam: learning rate must be >= 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "Adam: beta1 must be in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "Adam: beta2 must be in [0, 1)");
  require(epsilon > 0.0, "Adam: epsilon must be positive");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, "Adam: weight decay must be >= 0");
}

AdamState AdamState::zeros_like(std::span<const std::span<double>> params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0);
    state.second_moment.emplace_back(p.size(), 0.0);
  }
  return state;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamHyper& hyper) {
  require(params.size() == grads.size(), "adam_step: parameter/gradient tensor count mismatch");
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          "adam_step: optimizer state does not match parameters");
  for (std::size_t t = 0; t < params.size(); ++t) {
    require(params[t].size() == grads[t].size() && state.first_moment[t].size() == params[t].size() &&
                state.second_moment[t].size() == params[t].size(),
            "adam_step: tensor shape mismatch");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k];
    auto g = grads[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double grad = g[i] + hyper.weight_decay * theta[i];
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grad;
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grad * grad;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
}

}  // namespace impostor

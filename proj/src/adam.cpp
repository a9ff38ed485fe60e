#include "lossscape/optim.hpp"

#include <cmath>

namespace lossscape {

AdamState::AdamState(std::size_t n, AdamConfig config)
    : config_(config), m_(Vector::Zero(static_cast<Eigen::Index>(n))), v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void AdamState::update(std::span<double> variable, std::span<const double> grad) {
  const auto n = static_cast<std::size_t>(m_.size());
  if (variable.size() != n || grad.size() != n) throw Error("Adam: shape mismatch");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    m_[k] = b1 * m_[k] + (1.0 - b1) * grad[i];
    v_[k] = b2 * v_[k] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    variable[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

Vector adam_step(AdamState& state, Vector variable, const Vector& grad) {
  state.update({variable.data(), static_cast<std::size_t>(variable.size())},
               {grad.data(), static_cast<std::size_t>(grad.size())});
  return variable;
}

}  // namespace lossscape

#include "gridshed/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gridshed {

void Adam::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam::step: list size mismatch");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows, p->cols, 0.0);
      v_.emplace_back(p->rows, p->cols, 0.0);
    }
  }
  if (params.size() != m_.size()) throw std::invalid_argument("Adam::step: parameter count changed");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    if (!p.same_shape(m_[k]) || !p.same_shape(g))
      throw std::invalid_argument("Adam::step: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1.0 - cfg_.beta1) * g.data[i];
      v_[k].data[i] = cfg_.beta2 * v_[k].data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double mhat = m_[k].data[i] / bc1;
      const double vhat = v_[k].data[i] / bc2;
      p.data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace gridshed

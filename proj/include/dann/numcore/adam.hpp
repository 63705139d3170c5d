#pragma once

#include <cmath>
#include <vector>

#include "dann/error.hpp"
#include "dann/numcore/params.hpp"

namespace dann {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of a single parameter at step t (t >= 1).
inline void adam_update(Parameter& p, Tensor& m, Tensor& v, const AdamConfig& cfg, long t) {
  if (t < 1) throw ContractError("adam step index must be >= 1, got " + std::to_string(t));
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

/// Adam over a whole ParamStore; owns the moment buffers.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update from the accumulated gradients. Gradients are left
  /// untouched; callers zero them.
  void step(ParamStore& store) {
    for (const Parameter& p : store) {
      if (!p.grad.all_finite()) throw NonFiniteError("non-finite gradient in parameter '" + p.name + "'");
    }
    if (m_.size() != store.size()) {
      m_.clear();
      v_.clear();
      for (const Parameter& p : store) {
        m_.emplace_back(p.value.shape);
        v_.emplace_back(p.value.shape);
      }
    }
    ++t_;
    for (std::size_t i = 0; i < store.size(); ++i) adam_update(store.at(i), m_[i], v_[i], cfg_, t_);
  }

  long steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

}  // namespace dann

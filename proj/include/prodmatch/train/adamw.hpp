#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "prodmatch/core/error.hpp"

namespace prodmatch {

/// Adam with decoupled weight decay:
///   p -= lr * wd * p;  p -= lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  AdamW(double learning_rate, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  }

  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size()) throw Error("AdamW: parameter/gradient block count mismatch");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto p = params[b];
      auto g = grads[b];
      if (p.size() != g.size() || p.size() != m_[b].size()) throw Error("AdamW: block size mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] -= lr_ * wd_ * p[i];
        m_[b][i] = beta1_ * m_[b][i] + (1.0 - beta1_) * g[i];
        v_[b][i] = beta2_ * v_[b][i] + (1.0 - beta2_) * g[i] * g[i];
        const double m_hat = m_[b][i] / c1;
        const double v_hat = v_[b][i] / c2;
        p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  double lr_;
  double wd_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace prodmatch

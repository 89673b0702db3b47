#pragma once

#include <cmath>
#include <limits>

#include "prodmatch/core/error.hpp"

namespace prodmatch {

/// Positive likelihood ratio TPR / FPR of a validation process. FPR = 0 with
/// TPR > 0 yields +infinity (a perfectly specific validator).
inline double lr_plus(double tpr, double fpr) {
  if (tpr < 0.0 || tpr > 1.0 || fpr < 0.0 || fpr > 1.0) throw DomainError("rates must lie in [0, 1]");
  if (fpr == 0.0) {
    if (tpr == 0.0) throw DomainError("LR+ undefined: TPR = FPR = 0");
    return std::numeric_limits<double>::infinity();
  }
  return tpr / fpr;
}

/// Output precision of human validation applied to model predictions of
/// precision `p_model`:  P_hitl = 1 / (1 + (1/p_model - 1) / LR+).
inline double predict_hitl_precision(double p_model, double likelihood_ratio) {
  if (!(p_model > 0.0) || p_model > 1.0) throw DomainError("p_model must lie in (0, 1]");
  if (!(likelihood_ratio >= 0.0)) throw DomainError("LR+ must be non-negative");
  if (p_model == 1.0 || std::isinf(likelihood_ratio)) return 1.0;
  if (likelihood_ratio == 0.0) return 0.0;  // validators never confirm a true match
  return 1.0 / (1.0 + (1.0 / p_model - 1.0) / likelihood_ratio);
}

}  // namespace prodmatch

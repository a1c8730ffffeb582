#pragma once

#include <cmath>

#include "jadce/nets.hpp"

namespace jadce {

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected); moments
// zero-initialized and shaped like the trainables. Thresholds are clamped to
// stay nonnegative after every step.
struct AdamState {
  NetGrads m;
  NetGrads v;
  long t = 0;

  explicit AdamState(const NetParams& params)
      : m(zero_grads_like(params)), v(zero_grads_like(params)) {}
};

namespace detail {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

inline void adam_tensor(Mat& p, Mat& m, Mat& v, const Mat& g, double lr,
                        double bc1, double bc2) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}

inline void adam_scalar(double& p, double& m, double& v, double g, double lr,
                        double bc1, double bc2) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
  p -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
}
}  // namespace detail

inline void adam_step(AdamState& state, const NetGrads& grads, NetParams& params,
                      double lr) {
  if (lr <= 0.0) throw std::invalid_argument("adam_step: nonpositive lr");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(detail::kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(detail::kAdamBeta2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.w1.size(); ++k)
    detail::adam_tensor(params.w1[k], state.m.w1[k], state.v.w1[k], grads.w1[k], lr, bc1, bc2);
  for (size_t k = 0; k < params.w2.size(); ++k)
    detail::adam_tensor(params.w2[k], state.m.w2[k], state.v.w2[k], grads.w2[k], lr, bc1, bc2);
  for (size_t k = 0; k < params.w.size(); ++k)
    detail::adam_tensor(params.w[k], state.m.w[k], state.v.w[k], grads.w[k], lr, bc1, bc2);
  for (size_t k = 0; k < params.theta.size(); ++k) {
    detail::adam_scalar(params.theta[k], state.m.theta[k], state.v.theta[k],
                        grads.theta[k], lr, bc1, bc2);
    if (params.theta[k] < 0.0) params.theta[k] = 0.0;
  }
  for (size_t k = 0; k < params.gamma.size(); ++k)
    detail::adam_scalar(params.gamma[k], state.m.gamma[k], state.v.gamma[k],
                        grads.gamma[k], lr, bc1, bc2);
}

}  // namespace jadce

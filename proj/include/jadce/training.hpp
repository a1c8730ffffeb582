#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "jadce/adam.hpp"
#include "jadce/dataset.hpp"
#include "jadce/metrics.hpp"
#include "jadce/nets.hpp"

namespace jadce {

struct TrainSchedule {
  long steps_per_phase = 400;
  double lr1_factor = 0.2;  // fine-tune rate = lr1_factor * lr0
};

struct StageLog {
  int stage = 0;      // 1..K
  char phase = 'A';   // 'A' new layer only, 'B' all layers so far
  std::vector<double> losses;  // losses[i] before step i; last entry after the final step
  double val_nmse_db = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
  std::vector<StageLog> stages;
  bool diverged = false;
  std::string divergence_note;
};

struct TrainResult {
  NetParams params;
  TrainLog log;
};

namespace detail {
// One-layer view of layer k (shares nothing; tensors are copied in and the
// trained ones are copied back after the phase).
inline NetParams slice_layer(const NetParams& p, int k) {
  NetParams s;
  s.arch = p.arch;
  s.k_layers = 1;
  const size_t ku = static_cast<size_t>(k);
  s.theta = {p.theta[ku]};
  switch (p.arch) {
    case Arch::lista_gs:
      s.w1 = {p.w1[ku]};
      s.w2 = {p.w2[ku]};
      break;
    case Arch::lista_gscp:
      s.w = {p.w[ku]};
      break;
    case Arch::alista_gs:
      s.gamma = {p.gamma[ku]};
      s.w_shared = p.w_shared;
      break;
  }
  return s;
}

inline void unslice_layer(NetParams& p, const NetParams& s, int k) {
  const size_t ku = static_cast<size_t>(k);
  p.theta[ku] = s.theta[0];
  switch (p.arch) {
    case Arch::lista_gs:
      p.w1[ku] = s.w1[0];
      p.w2[ku] = s.w2[0];
      break;
    case Arch::lista_gscp:
      p.w[ku] = s.w[0];
      break;
    case Arch::alista_gs:
      p.gamma[ku] = s.gamma[0];
      break;
  }
}
}  // namespace detail

// Two-phase layer-wise schedule. For each k = 1..K: phase A trains only the
// new layer's parameters at lr0 (the frozen prefix output is computed once
// and reused); phase B fine-tunes all layers 0..k-1 at lr1_factor * lr0.
// Both phases run full-batch with the loss mean(|X_k - truth|_F^2) over the
// training samples; Adam state is reset at each phase boundary. Aborts (with
// the partial log flagged) if the loss stops being finite.
inline TrainResult train_layerwise(Arch arch, const Dataset& train, int k_layers,
                                   double lr0, const TrainSchedule& sched = {},
                                   const Dataset* val = nullptr,
                                   const Mat* alista_w = nullptr) {
  if (train.p() < 1) throw std::invalid_argument("train_layerwise: empty dataset");
  if (k_layers < 1) throw std::invalid_argument("train_layerwise: k_layers < 1");
  if (lr0 <= 0.0) throw std::invalid_argument("train_layerwise: lr0 <= 0");
  const Mat& s_tilde = train.s_tilde;
  const Mat y_stack = train.y_stack();
  const Mat x_stack = train.x_stack();
  const Eigen::Index m = train.m;
  const double p_count = static_cast<double>(train.p());
  const double inv_p = 1.0 / p_count;
  Mat y_val, x_val;
  if (val) {
    y_val = val->y_stack();
    x_val = val->x_stack();
  }

  TrainResult out;
  out.params = init_params(arch, s_tilde, k_layers, alista_w);
  NetParams& params = out.params;

  auto batch_loss = [&](const Mat& xk) {
    return (xk - x_stack).squaredNorm() * inv_p;
  };
  auto check_finite = [&](double loss, int stage, char phase) {
    if (std::isfinite(loss)) return true;
    out.log.diverged = true;
    out.log.divergence_note = "non-finite loss in stage " + std::to_string(stage) +
                              " phase " + std::string(1, phase);
    return false;
  };

  for (int k = 1; k <= k_layers; ++k) {
    // ---- Phase A: new layer only, prefix frozen and cached.
    {
      StageLog sl;
      sl.stage = k;
      sl.phase = 'A';
      const Mat x_pre =
          forward(params, s_tilde, y_stack, Mat(), k - 1, m).iterates.back();
      NetParams sub = detail::slice_layer(params, k - 1);
      AdamState adam(sub);
      ForwardCache cache;
      for (long step = 0; step < sched.steps_per_phase; ++step) {
        IterateTrace tr = forward(sub, s_tilde, y_stack, x_pre, 1, m, nullptr, &cache);
        const double loss = batch_loss(tr.iterates.back());
        sl.losses.push_back(loss);
        if (!check_finite(loss, k, 'A')) {
          detail::unslice_layer(params, sub, k - 1);
          out.log.stages.push_back(std::move(sl));
          return out;
        }
        NetGrads grads = backward(sub, tr, s_tilde, y_stack, x_stack, 0, m, inv_p, &cache);
        adam_step(adam, grads, sub, lr0);
      }
      sl.losses.push_back(batch_loss(
          forward(sub, s_tilde, y_stack, x_pre, 1, m).iterates.back()));
      detail::unslice_layer(params, sub, k - 1);
      if (val)
        sl.val_nmse_db = nmse(forward(params, s_tilde, y_val, Mat(), k, m).iterates.back(), x_val);
      out.log.stages.push_back(std::move(sl));
    }

    // ---- Phase B: all layers built so far, reduced rate.
    {
      StageLog sl;
      sl.stage = k;
      sl.phase = 'B';
      AdamState adam(params);
      ForwardCache cache;
      const double lr1 = lr0 * sched.lr1_factor;
      for (long step = 0; step < sched.steps_per_phase; ++step) {
        IterateTrace tr = forward(params, s_tilde, y_stack, Mat(), k, m, nullptr, &cache);
        const double loss = batch_loss(tr.iterates.back());
        sl.losses.push_back(loss);
        if (!check_finite(loss, k, 'B')) {
          out.log.stages.push_back(std::move(sl));
          return out;
        }
        NetGrads grads = backward(params, tr, s_tilde, y_stack, x_stack, 0, m, inv_p, &cache);
        adam_step(adam, grads, params, lr1);
      }
      sl.losses.push_back(batch_loss(
          forward(params, s_tilde, y_stack, Mat(), k, m).iterates.back()));
      if (val)
        sl.val_nmse_db = nmse(forward(params, s_tilde, y_val, Mat(), k, m).iterates.back(), x_val);
      out.log.stages.push_back(std::move(sl));
    }
  }
  return out;
}

}  // namespace jadce

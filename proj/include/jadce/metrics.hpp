#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jadce/types.hpp"

namespace jadce {

// 10 log10(|est - truth|_F^2 / |truth|_F^2). Column-stacked batches reduce to
// the same expression (ratio of summed squared norms == ratio of means).
// An exact match returns -infinity (serialized by callers as a null flag).
inline double nmse(const Mat& est, const Mat& truth) {
  const double den = truth.squaredNorm();
  if (den == 0.0) throw std::invalid_argument("nmse: all-zero truth");
  const double num = (est - truth).squaredNorm();
  if (num == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

// 10 log10(|clean|_F^2 / |noise|_F^2)
inline double snr_empirical(const Mat& clean, const Mat& noise) {
  const double nz = noise.squaredNorm();
  if (nz == 0.0) throw std::invalid_argument("snr_empirical: zero noise");
  return 10.0 * std::log10(clean.squaredNorm() / nz);
}
inline double snr_empirical(const CMat& clean, const CMat& noise) {
  const double nz = noise.squaredNorm();
  if (nz == 0.0) throw std::invalid_argument("snr_empirical: zero noise");
  return 10.0 * std::log10(clean.squaredNorm() / nz);
}

// Per-device score from a lifted estimate: device n owns rows n and N+n, so
// r_n = sqrt(|row n|^2 + |row N+n|^2) is the complex row norm.
inline Vec device_scores(const Mat& estimate, Eigen::Index n_complex) {
  if (estimate.rows() != 2 * n_complex)
    throw std::invalid_argument("device_scores: estimate must have 2N rows");
  Vec r(n_complex);
  for (Eigen::Index i = 0; i < n_complex; ++i)
    r(i) = std::sqrt(estimate.row(i).squaredNorm() +
                     estimate.row(n_complex + i).squaredNorm());
  return r;
}

struct ThresholdRule {
  enum class Kind { relative, absolute };
  Kind kind = Kind::relative;
  double value = 0.1;  // relative: fraction of max score; absolute: tau itself
};

// Declares device n active iff its score exceeds tau; the default rule sets
// tau = 0.1 * max score (scale-invariant in the estimate).
inline std::vector<uint8_t> detect_activity(const Mat& estimate,
                                            Eigen::Index n_complex,
                                            const ThresholdRule& rule = {}) {
  const Vec r = device_scores(estimate, n_complex);
  const double tau = rule.kind == ThresholdRule::Kind::relative
                         ? rule.value * r.maxCoeff()
                         : rule.value;
  std::vector<uint8_t> act(static_cast<size_t>(n_complex));
  for (Eigen::Index i = 0; i < n_complex; ++i)
    act[static_cast<size_t>(i)] = r(i) > tau ? 1 : 0;
  return act;
}

// Ground-truth-assisted rule: scans the score order statistics for the
// threshold minimizing miss + false alarm. Returns the decisions and tau.
inline std::pair<std::vector<uint8_t>, double> detect_activity_oracle(
    const Mat& estimate, Eigen::Index n_complex,
    const std::vector<uint8_t>& truth) {
  const Vec r = device_scores(estimate, n_complex);
  std::vector<double> cuts(r.data(), r.data() + r.size());
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(cuts.back() + 1.0);  // "declare nothing" cut
  double best_tau = cuts.back();
  long best_err = std::numeric_limits<long>::max();
  for (double cut : cuts) {
    // tau just below `cut`: scores >= cut are active
    long err = 0;
    for (Eigen::Index i = 0; i < n_complex; ++i) {
      const bool on = r(i) >= cut;
      if (on != (truth[static_cast<size_t>(i)] != 0)) ++err;
    }
    if (err < best_err) {
      best_err = err;
      best_tau = cut;
    }
  }
  std::vector<uint8_t> act(static_cast<size_t>(n_complex));
  for (Eigen::Index i = 0; i < n_complex; ++i)
    act[static_cast<size_t>(i)] = r(i) >= best_tau ? 1 : 0;
  return {act, best_tau};
}

struct EvalSummary {
  double nmse_db = 0.0;
  double detection_error_prob = 0.0;
  long miss_count = 0;
  long false_alarm_count = 0;
  std::vector<double> per_layer_nmse;
};

inline EvalSummary summarize_detection(const std::vector<uint8_t>& detected,
                                       const std::vector<uint8_t>& truth) {
  if (detected.size() != truth.size())
    throw std::invalid_argument("summarize_detection: length mismatch");
  EvalSummary s;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && !detected[i]) ++s.miss_count;
    if (!truth[i] && detected[i]) ++s.false_alarm_count;
  }
  s.detection_error_prob =
      static_cast<double>(s.miss_count + s.false_alarm_count) /
      static_cast<double>(truth.size());
  return s;
}

}  // namespace jadce

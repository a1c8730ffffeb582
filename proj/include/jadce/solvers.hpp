#pragma once

#include <optional>
#include <vector>

#include "jadce/metrics.hpp"
#include "jadce/operators.hpp"
#include "jadce/types.hpp"

namespace jadce {

// Full iterate history X0..XK with per-iterate diagnostics.
struct IterateTrace {
  std::vector<Mat> iterates;
  std::vector<double> objectives;
  std::vector<double> per_iter_nmse;  // filled when a ground truth is supplied
};

namespace detail {
inline double resolve_step(const Mat& s, double step) {
  if (step == kAutoStep) return 1.0 / spectral_norm_sq(s);
  if (step <= 0.0) throw std::invalid_argument("solver: nonpositive step");
  return step;
}

// l2,1 norm with rows grouped per block of columns (one block per stacked
// sample); block_cols = -1 treats the whole width as one block.
inline double blocked_l21(const Mat& x, Eigen::Index block_cols) {
  if (block_cols <= 0 || block_cols == x.cols()) return l21_norm(x);
  if (x.cols() % block_cols != 0)
    throw std::invalid_argument("blocked_l21: width not a multiple of block_cols");
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); c += block_cols)
    total += l21_norm(x.middleCols(c, block_cols));
  return total;
}

inline double blocked_objective(const Mat& y, const Mat& s, const Mat& x,
                                double lambda, Eigen::Index block_cols) {
  return 0.5 * (y - s * x).squaredNorm() + lambda * blocked_l21(x, block_cols);
}
}  // namespace detail

// Proximal gradient for the group LASSO:
//   X <- shrink(X + t * S^T (Y - S X), lambda * t),   t = step (1/C if auto).
// Stacked batches (one sample per block_cols columns) are handled by blocking
// the shrinkage and the l2,1 term per sample, which keeps the problem
// separable across samples.
inline IterateTrace ista_gs(const Mat& y, const Mat& s, double lambda,
                            int k_iters, double step = kAutoStep,
                            const Mat& x0 = Mat(),
                            const Mat* truth = nullptr,
                            Eigen::Index block_cols = -1) {
  if (lambda <= 0.0) throw std::invalid_argument("ista_gs: lambda <= 0");
  if (k_iters < 0) throw std::invalid_argument("ista_gs: negative k_iters");
  const double t = detail::resolve_step(s, step);
  Mat x = x0.size() ? x0 : Mat::Zero(s.cols(), y.cols());
  if (x.rows() != s.cols() || x.cols() != y.cols())
    throw std::invalid_argument("ista_gs: x0 shape mismatch");
  IterateTrace tr;
  tr.iterates.reserve(static_cast<size_t>(k_iters) + 1);
  tr.iterates.push_back(x);
  tr.objectives.push_back(detail::blocked_objective(y, s, x, lambda, block_cols));
  if (truth) tr.per_iter_nmse.push_back(nmse(x, *truth));
  for (int k = 0; k < k_iters; ++k) {
    x += t * (s.transpose() * (y - s * x));
    msto_inplace(x, lambda * t, block_cols);
    tr.iterates.push_back(x);
    tr.objectives.push_back(detail::blocked_objective(y, s, x, lambda, block_cols));
    if (truth) tr.per_iter_nmse.push_back(nmse(x, *truth));
  }
  return tr;
}

// Accelerated proximal gradient (momentum t_{k+1} = (1+sqrt(1+4 t_k^2))/2,
// prox step taken at the extrapolated point). The first iteration coincides
// with the plain proximal step.
inline IterateTrace nesterov_gs(const Mat& y, const Mat& s, double lambda,
                                int k_iters, double step = kAutoStep,
                                const Mat& x0 = Mat(),
                                const Mat* truth = nullptr,
                                Eigen::Index block_cols = -1) {
  if (lambda <= 0.0) throw std::invalid_argument("nesterov_gs: lambda <= 0");
  if (k_iters < 0) throw std::invalid_argument("nesterov_gs: negative k_iters");
  const double t = detail::resolve_step(s, step);
  Mat x = x0.size() ? x0 : Mat::Zero(s.cols(), y.cols());
  if (x.rows() != s.cols() || x.cols() != y.cols())
    throw std::invalid_argument("nesterov_gs: x0 shape mismatch");
  IterateTrace tr;
  tr.iterates.reserve(static_cast<size_t>(k_iters) + 1);
  tr.iterates.push_back(x);
  tr.objectives.push_back(detail::blocked_objective(y, s, x, lambda, block_cols));
  if (truth) tr.per_iter_nmse.push_back(nmse(x, *truth));
  Mat v = x;  // extrapolated point
  double mom = 1.0;
  for (int k = 0; k < k_iters; ++k) {
    Mat x_next = v + t * (s.transpose() * (y - s * v));
    msto_inplace(x_next, lambda * t, block_cols);
    const double mom_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
    v = x_next + ((mom - 1.0) / mom_next) * (x_next - x);
    x = std::move(x_next);
    mom = mom_next;
    tr.iterates.push_back(x);
    tr.objectives.push_back(detail::blocked_objective(y, s, x, lambda, block_cols));
    if (truth) tr.per_iter_nmse.push_back(nmse(x, *truth));
  }
  return tr;
}

}  // namespace jadce

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jadce/rng.hpp"
#include "jadce/types.hpp"

namespace jadce {

struct ShrinkageResult {
  Mat value;
  std::vector<Eigen::Index> active_rows;  // rows with nonzero output
};

// Row-wise shrinkage applied in place. `v` is treated as a horizontal stack of
// blocks of width `block_cols` (one block per sample); each (row, block) slice
// of length block_cols is shrunk as a group. Rows with norm <= theta are set
// to zero; the 0/0 case maps to zero.
inline void msto_inplace(Eigen::Ref<Mat> v, double theta,
                         Eigen::Index block_cols = -1) {
  if (theta < 0.0) throw std::invalid_argument("msto: negative theta");
  if (block_cols <= 0) block_cols = v.cols();
  if (v.cols() % block_cols != 0)
    throw std::invalid_argument("msto: cols not a multiple of block width");
  if (theta == 0.0) return;
  const Eigen::Index nblocks = v.cols() / block_cols;
  for (Eigen::Index b = 0; b < nblocks; ++b) {
    auto blk = v.middleCols(b * block_cols, block_cols);
    for (Eigen::Index i = 0; i < blk.rows(); ++i) {
      const double r = blk.row(i).norm();
      if (r > theta) {
        blk.row(i) *= (1.0 - theta / r);
      } else {
        blk.row(i).setZero();
      }
    }
  }
}

// Proximal operator of theta * (sum of row l2 norms).
inline ShrinkageResult msto(const Mat& x, double theta) {
  ShrinkageResult out;
  out.value = x;
  msto_inplace(out.value, theta);
  for (Eigen::Index i = 0; i < out.value.rows(); ++i) {
    if (out.value.row(i).squaredNorm() > 0.0) out.active_rows.push_back(i);
  }
  return out;
}

// Reverse-mode derivative of msto. For a row u with r = |u| > theta and
// upstream row g:
//   grad_u     = (1 - theta/r) g + (theta/r^3) (u.g) u
//   d/d theta += -(u.g)/r
// Rows at or below the threshold contribute zero to both outputs (subgradient
// choice at the kink, keeps training gradients bounded). Blocked layout as in
// msto_inplace. Returns grad_theta; grad wrt v is written into `grad_v`.
inline double msto_vjp_inplace(const Mat& v, double theta, const Mat& upstream,
                               Mat& grad_v, Eigen::Index block_cols = -1) {
  if (v.rows() != upstream.rows() || v.cols() != upstream.cols())
    throw std::invalid_argument("msto_vjp: shape mismatch");
  if (block_cols <= 0) block_cols = v.cols();
  if (v.cols() % block_cols != 0)
    throw std::invalid_argument("msto_vjp: cols not a multiple of block width");
  grad_v.setZero(v.rows(), v.cols());
  double grad_theta = 0.0;
  const Eigen::Index nblocks = v.cols() / block_cols;
  for (Eigen::Index b = 0; b < nblocks; ++b) {
    auto vb = v.middleCols(b * block_cols, block_cols);
    auto gb = upstream.middleCols(b * block_cols, block_cols);
    auto ob = grad_v.middleCols(b * block_cols, block_cols);
    for (Eigen::Index i = 0; i < vb.rows(); ++i) {
      const double r = vb.row(i).norm();
      if (r > theta) {
        const double dot = vb.row(i).dot(gb.row(i));
        ob.row(i) = (1.0 - theta / r) * gb.row(i) +
                    (theta / (r * r * r)) * dot * vb.row(i);
        grad_theta -= dot / r;
      }
    }
  }
  return grad_theta;
}

inline std::pair<Mat, double> msto_vjp(const Mat& x, double theta,
                                       const Mat& upstream) {
  Mat grad_x;
  const double grad_theta = msto_vjp_inplace(x, theta, upstream, grad_x);
  return {std::move(grad_x), grad_theta};
}

// Per-row l2 norms (the group-sparsity profile).
inline Vec group_norms(const Mat& x) { return x.rowwise().norm(); }

// Mixed l2,1 norm: sum of row l2 norms.
inline double l21_norm(const Mat& x) { return x.rowwise().norm().sum(); }

// Number of rows with l2 norm above tol.
inline Eigen::Index l20_norm(const Mat& x, double tol = 0.0) {
  return (group_norms(x).array() > tol).count();
}

// Group-LASSO objective 0.5 |y - s x|_F^2 + lambda * |x|_{2,1}.
inline double lasso_objective(const Mat& y, const Mat& s, const Mat& x,
                              double lambda) {
  if (s.cols() != x.rows() || s.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("lasso_objective: shape mismatch");
  if (lambda <= 0.0) throw std::invalid_argument("lasso_objective: lambda <= 0");
  return 0.5 * (y - s * x).squaredNorm() + lambda * l21_norm(x);
}

// Sentinel step size: callers that receive it compute 1/|S|_2^2 themselves.
constexpr double kAutoStep = 0.0;

// Largest squared singular value via power iteration on the Gram operator,
// to 1e-10 relative tolerance. Deterministic (fixed internal start vector).
inline double spectral_norm_sq(const Mat& s, int max_iters = 20000) {
  Rng rng(0x5eed5eedULL);
  Vec v = rng.normal_matrix(s.cols(), 1);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vec sv = s * v;
    const double next = sv.squaredNorm();  // Rayleigh quotient of S^T S at v
    Vec w = s.transpose() * sv;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;  // zero matrix
    v = w / wn;
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::max(next, 1.0)) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

namespace detail {
template <typename MatT>
double coherence_impl(const MatT& s) {
  const Eigen::Index n = s.cols();
  if (n < 2) throw std::invalid_argument("mutual_coherence: need >= 2 columns");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(s.col(j).norm() - 1.0) > 1e-9)
      throw std::invalid_argument("mutual_coherence: columns not unit-norm");
  }
  auto gram = (s.adjoint() * s).eval();
  double mu = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) mu = std::max(mu, std::abs(gram(i, j)));
  return mu;
}
}  // namespace detail

// max_{i != j} |<s_i, s_j>| over unit-norm columns.
inline double mutual_coherence(const Mat& s) { return detail::coherence_impl(s); }
inline double mutual_coherence(const CMat& s) { return detail::coherence_impl(s); }

// Replace the singular values of `a` by a log-spaced sequence from sigma_max
// down to sigma_max/kappa, reassemble, then column-normalize. The seed
// parameter is accepted for interface stability; the construction is
// deterministic. If pre_norm is non-null it receives the matrix before
// column normalization (whose condition number equals kappa).
inline PreambleMatrix set_condition_number(const CMat& a, double kappa,
                                           uint64_t /*seed*/ = 0,
                                           CMat* pre_norm = nullptr) {
  if (kappa < 1.0) throw std::invalid_argument("set_condition_number: kappa < 1");
  if (a.rows() > a.cols())
    throw std::invalid_argument("set_condition_number: need L <= N");
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index r = svd.singularValues().size();
  const double smax = svd.singularValues()(0);
  if (svd.singularValues()(r - 1) <= smax * 1e-12)
    throw std::invalid_argument("set_condition_number: rank-deficient input");
  Vec sv(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double t = (r == 1) ? 0.0 : static_cast<double>(i) / (r - 1);
    sv(i) = smax * std::exp(-t * std::log(kappa));
  }
  CMat b = svd.matrixU() * sv.asDiagonal() * svd.matrixV().adjoint();
  if (pre_norm) *pre_norm = b;
  for (Eigen::Index j = 0; j < b.cols(); ++j) b.col(j) /= b.col(j).norm();
  PreambleMatrix out;
  out.entries = std::move(b);
  out.kind = PreambleKind::custom;
  return out;
}

}  // namespace jadce

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "jadce/operators.hpp"
#include "jadce/rng.hpp"
#include "jadce/types.hpp"

namespace jadce {

namespace detail {
inline bool is_prime(long x) {
  if (x < 2) return false;
  for (long d = 2; d * d <= x; ++d)
    if (x % d == 0) return false;
  return true;
}
inline long next_prime(long x) {
  while (!is_prime(x)) ++x;
  return x;
}
}  // namespace detail

// Zadoff-Chu bank: base length = smallest prime >= l, roots u = 1, 2, ...
// (all nonzero residues are coprime to a prime base), columns enumerate
// (root, cyclic shift) pairs in lexicographic order, truncated to the first
// l samples and column-normalized.
inline CMat zadoff_chu_bank(Eigen::Index l, Eigen::Index n) {
  const long nzc = detail::next_prime(static_cast<long>(l));
  const long budget = (nzc - 1) * nzc;
  if (n > budget)
    throw std::invalid_argument("zadoff_chu: n exceeds root*shift budget (" +
                                std::to_string(budget) + ")");
  CMat s(l, n);
  Eigen::Index col = 0;
  for (long u = 1; u <= nzc - 1 && col < n; ++u) {
    for (long q = 0; q < nzc && col < n; ++q, ++col) {
      for (Eigen::Index k = 0; k < l; ++k) {
        const long t = (k + q) % nzc;
        // exp(-j pi u t(t+1) / nzc); phase reduced mod 2*nzc to keep the
        // argument small for large t.
        const long num = (u % (2 * nzc)) * (t % (2 * nzc)) % (2 * nzc) *
                         ((t + 1) % (2 * nzc)) % (2 * nzc);
        const double phase = -M_PI * static_cast<double>(num) / nzc;
        s(k, col) = cplx(std::cos(phase), std::sin(phase));
      }
      s.col(col) /= s.col(col).norm();
    }
  }
  return s;
}

inline PreambleMatrix gen_preamble(PreambleKind kind, Eigen::Index l,
                                   Eigen::Index n, uint64_t seed) {
  if (l < 2 || n < 2) throw std::invalid_argument("gen_preamble: need l,n >= 2");
  PreambleMatrix out;
  out.kind = kind;
  Rng rng(seed);
  switch (kind) {
    case PreambleKind::gaussian: {
      out.entries = rng.cnormal_matrix(l, n);
      for (Eigen::Index j = 0; j < n; ++j)
        out.entries.col(j) /= out.entries.col(j).norm();
      break;
    }
    case PreambleKind::binary: {
      // +-1/sqrt(L), imaginary part zero; columns are exactly unit norm.
      const double a = 1.0 / std::sqrt(static_cast<double>(l));
      out.entries.resize(l, n);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < l; ++i)
          out.entries(i, j) = cplx(rng.rademacher() * a, 0.0);
      break;
    }
    case PreambleKind::zadoff_chu: {
      out.entries = zadoff_chu_bank(l, n);
      break;
    }
    default:
      throw std::invalid_argument("gen_preamble: unsupported kind");
  }
  return out;
}

inline GroupSparseSignal gen_signal(Eigen::Index n, Eigen::Index m,
                                    double activity_prob, uint64_t seed) {
  if (activity_prob < 0.0 || activity_prob > 1.0)
    throw std::invalid_argument("gen_signal: activity_prob outside [0,1]");
  Rng rng(seed);
  GroupSparseSignal out;
  out.activity.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    out.activity[static_cast<size_t>(i)] = rng.bernoulli(activity_prob) ? 1 : 0;
  out.channel = rng.cnormal_matrix(n, m);
  out.entries = out.channel;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!out.activity[static_cast<size_t>(i)]) out.entries.row(i).setZero();
  return out;
}

// Draw i.i.d. complex Gaussian noise and rescale it so the realized ratio
// |clean|_F^2 / |Z|_F^2 hits snr_db exactly (per-instance calibration).
// snr_db = +infinity returns the zero matrix.
inline CMat gen_noise_for_snr(const CMat& clean, double snr_db, uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return CMat::Zero(clean.rows(), clean.cols());
  const double clean_sq = clean.squaredNorm();
  if (clean_sq == 0.0)
    throw std::invalid_argument("gen_noise_for_snr: all-zero clean signal");
  Rng rng(seed);
  CMat z = rng.cnormal_matrix(clean.rows(), clean.cols());
  const double target_sq = clean_sq / std::pow(10.0, snr_db / 10.0);
  z *= std::sqrt(target_sq / z.squaredNorm());
  return z;
}

inline ProblemInstance make_instance(const PreambleMatrix& preamble,
                                     Eigen::Index m, double activity_prob,
                                     double snr_db, uint64_t seed) {
  ProblemInstance inst;
  inst.preamble = preamble;
  inst.seed = seed;
  inst.snr_db = snr_db;
  inst.signal = gen_signal(preamble.n(), m, activity_prob, derive_seed(seed, 1));
  const CMat clean = preamble.entries * inst.signal.entries;
  if (clean.squaredNorm() == 0.0 && !std::isinf(snr_db)) {
    // No active device drawn: observation is pure noise at unit power.
    Rng rng(derive_seed(seed, 2));
    inst.noise = rng.cnormal_matrix(clean.rows(), clean.cols());
  } else {
    inst.noise = gen_noise_for_snr(clean, snr_db, derive_seed(seed, 2));
  }
  inst.observation = clean + inst.noise;
  return inst;
}

// [[Re S, -Im S],[Im S, Re S]]
inline Mat lift_matrix(const CMat& s) {
  const Eigen::Index l = s.rows(), n = s.cols();
  Mat out(2 * l, 2 * n);
  out.topLeftCorner(l, n) = s.real();
  out.topRightCorner(l, n) = -s.imag();
  out.bottomLeftCorner(l, n) = s.imag();
  out.bottomRightCorner(l, n) = s.real();
  return out;
}

// [Re X; Im X]
inline Mat lift_stack(const CMat& x) {
  Mat out(2 * x.rows(), x.cols());
  out.topRows(x.rows()) = x.real();
  out.bottomRows(x.rows()) = x.imag();
  return out;
}

inline CMat unlift_stack(const Mat& x) {
  if (x.rows() % 2 != 0) throw std::invalid_argument("unlift_stack: odd rows");
  const Eigen::Index n = x.rows() / 2;
  CMat out(n, x.cols());
  out.real() = x.topRows(n);
  out.imag() = x.bottomRows(n);
  return out;
}

inline RealLiftedSystem lift_to_real(const ProblemInstance& inst) {
  RealLiftedSystem sys;
  sys.s_tilde = lift_matrix(inst.preamble.entries);
  sys.x_tilde = lift_stack(inst.signal.entries);
  sys.y_tilde = lift_stack(inst.observation);
  sys.z_tilde = lift_stack(inst.noise);
  sys.n_complex = inst.preamble.n();
  sys.l_complex = inst.preamble.l();
  return sys;
}

}  // namespace jadce

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace jadce {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

enum class PreambleKind { gaussian, binary, zadoff_chu, custom };

inline const char* to_string(PreambleKind k) {
  switch (k) {
    case PreambleKind::gaussian: return "gaussian";
    case PreambleKind::binary: return "binary";
    case PreambleKind::zadoff_chu: return "zadoff_chu";
    case PreambleKind::custom: return "custom";
  }
  return "?";
}

inline PreambleKind preamble_kind_from_string(const std::string& s) {
  if (s == "gaussian") return PreambleKind::gaussian;
  if (s == "binary") return PreambleKind::binary;
  if (s == "zadoff_chu") return PreambleKind::zadoff_chu;
  if (s == "custom") return PreambleKind::custom;
  throw std::invalid_argument("unknown preamble kind: " + s);
}

// Known signature matrix S, columns unit-normalized.
struct PreambleMatrix {
  CMat entries;  // L x N
  PreambleKind kind = PreambleKind::gaussian;

  Eigen::Index l() const { return entries.rows(); }
  Eigen::Index n() const { return entries.cols(); }
};

// X = diag(activity) * channel; zero rows mark inactive devices.
struct GroupSparseSignal {
  CMat entries;                 // N x M
  std::vector<uint8_t> activity;  // length N, 0/1
  CMat channel;                 // N x M
};

struct ProblemInstance {
  PreambleMatrix preamble;
  GroupSparseSignal signal;
  CMat noise;        // L x M
  CMat observation;  // L x M, = S * X + Z by construction
  double snr_db = 0.0;
  uint64_t seed = 0;
};

// Real-valued counterpart: s_tilde = [[Re S, -Im S],[Im S, Re S]],
// x_tilde = [Re X; Im X], y_tilde = [Re Y; Im Y].
struct RealLiftedSystem {
  Mat s_tilde;  // 2L x 2N
  Mat x_tilde;  // 2N x M
  Mat y_tilde;  // 2L x M
  Mat z_tilde;  // 2L x M
  Eigen::Index n_complex = 0;
  Eigen::Index l_complex = 0;
};

}  // namespace jadce

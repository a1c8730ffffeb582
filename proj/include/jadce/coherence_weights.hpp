#pragma once

#include <filesystem>
#include <stdexcept>

#include "jadce/blob_io.hpp"
#include "jadce/operators.hpp"
#include "jadce/types.hpp"

namespace jadce {

struct CoherenceWeight {
  Mat w;                            // 2L x 2N, one analysis column per signature
  double objective = 0.0;           // |W^T S|_F^2 at return
  double constraint_violation = 0.0;  // max_i |w_i . s_i - 1|
  double mu_tilde_estimate = 0.0;   // max_{i != j} |w_i . s_j| of the returned W
  int iters = 0;
  bool converged = false;
};

// max_{i != j} |W[:,i]^T S[:,j]| for a W meeting the unit-diagonal constraint.
inline double generalized_coherence(const Mat& w, const Mat& s) {
  if (w.rows() != s.rows() || w.cols() != s.cols())
    throw std::invalid_argument("generalized_coherence: shape mismatch");
  const Mat cross = w.transpose() * s;
  double viol = 0.0, mu = 0.0;
  for (Eigen::Index i = 0; i < cross.rows(); ++i)
    for (Eigen::Index j = 0; j < cross.cols(); ++j) {
      if (i == j)
        viol = std::max(viol, std::abs(cross(i, j) - 1.0));
      else
        mu = std::max(mu, std::abs(cross(i, j)));
    }
  if (viol > 1e-6)
    throw std::invalid_argument("generalized_coherence: w violates the unit-diagonal constraint");
  return mu;
}

// Minimize |W^T S|_F^2 subject to W[:,i]^T S[:,i] = 1 by projected gradient:
// gradient 2 S S^T W, then per-column re-projection w <- w + (1 - s_i.w) s_i
// (exact for unit-norm s_i). Start from W = S projected; step defaults to
// 1/(2 |S|_2^2), the guaranteed-descent choice for this quadratic.
inline CoherenceWeight pgd_weight(const Mat& s, int max_iters = 5000,
                                  double step = kAutoStep, double tol = 1e-10) {
  for (Eigen::Index j = 0; j < s.cols(); ++j)
    if (std::abs(s.col(j).norm() - 1.0) > 1e-9)
      throw std::invalid_argument("pgd_weight: columns of s not unit-norm");
  const double c = spectral_norm_sq(s);
  const double t = (step == kAutoStep) ? 1.0 / (2.0 * c) : step;
  if (t <= 0.0) throw std::invalid_argument("pgd_weight: nonpositive step");

  const Mat gram_op = s * s.transpose();  // 2L x 2L
  auto project = [&](Mat& w) {
    for (Eigen::Index i = 0; i < w.cols(); ++i)
      w.col(i) += (1.0 - s.col(i).dot(w.col(i))) * s.col(i);
  };
  auto objective = [&](const Mat& w) { return (w.transpose() * s).squaredNorm(); };

  CoherenceWeight out;
  out.w = s;
  project(out.w);
  double prev = objective(out.w);
  for (out.iters = 0; out.iters < max_iters; ++out.iters) {
    out.w -= (2.0 * t) * (gram_op * out.w);
    project(out.w);
    const double cur = objective(out.w);
    if (std::abs(prev - cur) <= tol * std::max(1.0, std::abs(prev))) {
      out.converged = true;
      prev = cur;
      break;
    }
    prev = cur;
  }
  out.objective = prev;
  for (Eigen::Index i = 0; i < out.w.cols(); ++i)
    out.constraint_violation = std::max(
        out.constraint_violation, std::abs(s.col(i).dot(out.w.col(i)) - 1.0));
  out.mu_tilde_estimate = generalized_coherence(out.w, s);
  return out;
}

// Cache layout: <root>/<hash of S>/ { manifest.json, w.f64 }.
inline std::filesystem::path weight_cache_dir(const std::filesystem::path& root,
                                              const Mat& s) {
  return root / hash_hex(fnv1a_hash(s));
}

inline void save_weight(const CoherenceWeight& cw, const Mat& s,
                        const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path dir = weight_cache_dir(root, s);
  fs::create_directories(dir);
  write_f64_blob(dir / "w.f64", cw.w);
  nlohmann::ordered_json man;
  man["format_version"] = 1;
  man["kind"] = "coherence_weight";
  man["s_hash"] = hash_hex(fnv1a_hash(s));
  man["rows"] = cw.w.rows();
  man["cols"] = cw.w.cols();
  man["objective"] = cw.objective;
  man["constraint_violation"] = cw.constraint_violation;
  man["mu_tilde_estimate"] = cw.mu_tilde_estimate;
  man["iters"] = cw.iters;
  man["converged"] = cw.converged;
  man["blobs"] = nlohmann::ordered_json{{"w", "w.f64"}};
  std::ofstream f(dir / "manifest.json");
  f << man.dump(2) << "\n";
  if (!f) throw std::runtime_error("failed writing weight manifest");
}

inline bool load_weight(CoherenceWeight& cw, const Mat& s,
                        const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path dir = weight_cache_dir(root, s);
  if (!fs::exists(dir / "manifest.json")) return false;
  std::ifstream f(dir / "manifest.json");
  nlohmann::ordered_json man = nlohmann::ordered_json::parse(f);
  if (man.at("s_hash").get<std::string>() != hash_hex(fnv1a_hash(s))) return false;
  cw.w = read_f64_blob(dir / "w.f64", man.at("rows").get<Eigen::Index>(),
                       man.at("cols").get<Eigen::Index>());
  cw.objective = man.at("objective").get<double>();
  cw.constraint_violation = man.at("constraint_violation").get<double>();
  cw.mu_tilde_estimate = man.at("mu_tilde_estimate").get<double>();
  cw.iters = man.at("iters").get<int>();
  cw.converged = man.at("converged").get<bool>();
  return true;
}

// Computes (or loads) the cached analysis weight for a given lifted preamble.
inline CoherenceWeight pgd_weight_cached(const Mat& s,
                                         const std::filesystem::path& root,
                                         int max_iters = 5000,
                                         double tol = 1e-10) {
  CoherenceWeight cw;
  if (load_weight(cw, s, root)) return cw;
  cw = pgd_weight(s, max_iters, kAutoStep, tol);
  save_weight(cw, s, root);
  return cw;
}

}  // namespace jadce

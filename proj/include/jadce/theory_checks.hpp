#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jadce/nets.hpp"
#include "jadce/operators.hpp"
#include "jadce/solvers.hpp"
#include "jadce/types.hpp"

namespace jadce {

// Per-layer coupling residual |w2_k - (I - w1_k s)|_F and the thresholds, for
// the two-matrix architecture. At the data-driven init the residual is
// identically zero; training toward a converging solver should keep it small
// in late layers while the thresholds decay.
struct CouplingDiag {
  std::vector<double> residuals;
  std::vector<double> thresholds;
};

inline CouplingDiag coupling_diagnostics(const NetParams& p, const Mat& s_tilde) {
  if (p.arch != Arch::lista_gs)
    throw std::invalid_argument("coupling_diagnostics: needs the two-matrix architecture");
  CouplingDiag d;
  const Mat eye = Mat::Identity(s_tilde.cols(), s_tilde.cols());
  for (int k = 0; k < p.k_layers; ++k) {
    const size_t ku = static_cast<size_t>(k);
    d.residuals.push_back((p.w2[ku] - (eye - p.w1[ku] * s_tilde)).norm());
    d.thresholds.push_back(p.theta[ku]);
  }
  return d;
}

// In-class batch for the bound checks: ground truths and (optional) noise;
// observations are rebuilt as y = s x + z.
struct TheoryBatch {
  std::vector<Mat> x;  // 2N x M each
  std::vector<Mat> z;  // 2L x M each; empty = noiseless
};

struct GoodThresholds {
  std::vector<double> theta;
  double sigma = 0.0;  // max |Z|_F over the batch
  double c_w = 0.0;    // |W|_{2,1} (max over layers; constant W here)
};

namespace detail {
inline Mat theory_layer(const Mat& x, const Mat& y, const Mat& s_tilde,
                        const Mat& w, double gamma, double theta) {
  Mat v = x + gamma * (w.transpose() * (y - s_tilde * x));
  msto_inplace(v, theta);
  return v;
}
}  // namespace detail

// Threshold schedules that make the convergence guarantees bite:
//   residual form:  theta_k = mu * max_i |X_k,i - X*_i|_{2,1} + sigma * C_W
//   stepped form:   theta_k = mu * gamma_k * max_i |X_k,i - X*_i|_{2,1}
// The supremum over the signal class is replaced by the batch maximum, so the
// schedule is valid for exactly these samples. The forward pass interleaves:
// theta_k uses the iterates produced by theta_0..theta_{k-1}.
inline GoodThresholds good_thresholds(Arch arch, const TheoryBatch& batch,
                                      const Mat& s_tilde, const Mat& w,
                                      double mu_tilde, int k_layers,
                                      const std::vector<double>& gammas = {}) {
  if (batch.x.empty()) throw std::invalid_argument("good_thresholds: empty batch");
  if (arch != Arch::lista_gscp && arch != Arch::alista_gs)
    throw std::invalid_argument("good_thresholds: residual architectures only");
  const bool stepped = arch == Arch::alista_gs;
  if (stepped && static_cast<int>(gammas.size()) != k_layers)
    throw std::invalid_argument("good_thresholds: need one gamma per layer");
  GoodThresholds out;
  out.c_w = l21_norm(w);
  const size_t b = batch.x.size();
  const bool noisy = !batch.z.empty();
  if (noisy && batch.z.size() != b)
    throw std::invalid_argument("good_thresholds: x/z size mismatch");
  std::vector<Mat> y(b), cur(b);
  for (size_t i = 0; i < b; ++i) {
    y[i] = s_tilde * batch.x[i];
    if (noisy) {
      y[i] += batch.z[i];
      out.sigma = std::max(out.sigma, batch.z[i].norm());
    }
    cur[i] = Mat::Zero(batch.x[i].rows(), batch.x[i].cols());
  }
  for (int k = 0; k < k_layers; ++k) {
    double err = 0.0;
    for (size_t i = 0; i < b; ++i) err = std::max(err, l21_norm(cur[i] - batch.x[i]));
    const double gamma = stepped ? gammas[static_cast<size_t>(k)] : 1.0;
    const double theta = stepped ? mu_tilde * gamma * err
                                 : mu_tilde * err + out.sigma * out.c_w;
    out.theta.push_back(theta);
    for (size_t i = 0; i < b; ++i)
      cur[i] = detail::theory_layer(cur[i], y[i], s_tilde, w, gamma, theta);
  }
  return out;
}

// Analytic envelope s*beta*exp(-c k) + C*sigma with
//   c = -log(2 mu s - mu),  C = (s+1) C_W / (1 + mu - 2 mu s).
// Requires 2 mu s - mu in (0,1), i.e. 1 <= s < (1 + 1/mu)/2.
inline std::vector<double> error_bound_curve(long s, double beta, double mu_tilde,
                                             double c_w, double sigma, int k_max) {
  const double q = 2.0 * mu_tilde * s - mu_tilde;
  if (s < 1 || q <= 0.0 || q >= 1.0)
    throw std::invalid_argument(
        "error_bound_curve: sparsity condition violated (2*mu*s - mu outside (0,1))");
  const double c = -std::log(q);
  const double big_c = (s + 1.0) * c_w / (1.0 + mu_tilde - 2.0 * mu_tilde * s);
  std::vector<double> out;
  for (int k = 0; k <= k_max; ++k)
    out.push_back(s * beta * std::exp(-c * k) + big_c * sigma);
  return out;
}

// Noiseless per-layer-rate variant: factor c_t = -log(gamma_t (2 mu s - mu)
// + |1 - gamma_t|) accumulates across layers.
inline std::vector<double> stepped_bound_curve(long s, double beta, double mu_tilde,
                                               const std::vector<double>& gammas) {
  const double q = 2.0 * mu_tilde * s - mu_tilde;
  if (s < 1 || q <= 0.0 || q >= 1.0)
    throw std::invalid_argument(
        "stepped_bound_curve: sparsity condition violated (2*mu*s - mu outside (0,1))");
  std::vector<double> out{static_cast<double>(s) * beta};
  double acc = 0.0;
  for (double g : gammas) {
    const double decay = g * q + std::abs(1.0 - g);
    if (decay <= 0.0 || decay >= 1.0)
      throw std::invalid_argument("stepped_bound_curve: step size outside the contraction range");
    acc += -std::log(decay);
    out.push_back(s * beta * std::exp(-acc));
  }
  return out;
}

struct TheoryReport {
  std::vector<double> coupling_residuals;
  std::vector<double> thresholds;
  std::vector<double> empirical_l21;  // per-layer batch max |X_k - X*|_{2,1}
  std::vector<double> empirical_fro;  // per-layer batch max |X_k - X*|_F
  std::vector<double> analytic_bounds;
  std::vector<int> bound_exceeded_layers;
  double mu_tilde = 0.0;
  long s = 0;
  double beta = 0.0;
  double sigma = 0.0;
  double c_w = 0.0;
  double c_rate = 0.0;
  double c_noise = 0.0;
  long nfp_violations = 0;
};

// Rows outside the true support carrying norm > tol at any layer of a trace.
inline long no_false_positive_check(const IterateTrace& trace,
                                    const std::vector<Eigen::Index>& true_support,
                                    double tol) {
  if (trace.iterates.empty()) return 0;
  std::vector<uint8_t> in_support(static_cast<size_t>(trace.iterates[0].rows()), 0);
  for (Eigen::Index r : true_support) in_support[static_cast<size_t>(r)] = 1;
  long violations = 0;
  for (const Mat& x : trace.iterates) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!in_support[static_cast<size_t>(i)] && x.row(i).norm() > tol) ++violations;
    }
  }
  return violations;
}

inline std::vector<Eigen::Index> lifted_support(const std::vector<uint8_t>& activity) {
  std::vector<Eigen::Index> rows;
  const Eigen::Index n = static_cast<Eigen::Index>(activity.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (activity[static_cast<size_t>(i)]) {
      rows.push_back(i);
      rows.push_back(n + i);
    }
  }
  return rows;
}

// Runs the residual architecture with the supplied threshold schedule on an
// in-class batch and compares against the analytic envelope. Preconditions:
// row norms <= beta, at most s active rows per sample, |Z|_F <= sigma, and
// the sparsity gate s <= (1 + 1/mu)/2. Empirical maxima exceeding the
// envelope are flagged per layer rather than thrown: mu_tilde is an upper
// estimate, so the certified direction is "bound holds".
inline TheoryReport validate_bound(Arch arch, const TheoryBatch& batch,
                                   const Mat& s_tilde, const Mat& w,
                                   const GoodThresholds& sched, long s,
                                   double beta, double mu_tilde,
                                   const std::vector<double>& gammas = {},
                                   double nfp_tol = 1e-12) {
  if (arch != Arch::lista_gscp && arch != Arch::alista_gs)
    throw std::invalid_argument("validate_bound: residual architectures only");
  if (batch.x.empty()) throw std::invalid_argument("validate_bound: empty batch");
  const bool stepped = arch == Arch::alista_gs;
  const int k_layers = static_cast<int>(sched.theta.size());
  if (stepped && static_cast<int>(gammas.size()) != k_layers)
    throw std::invalid_argument("validate_bound: need one gamma per layer");
  const double q = 2.0 * mu_tilde * s - mu_tilde;
  if (s < 1 || q <= 0.0 || q >= 1.0)
    throw std::invalid_argument("validate_bound: sparsity gate s <= (1+1/mu)/2 violated");
  if (stepped) {
    const double hi = 2.0 / (1.0 + q);
    for (double g : gammas)
      if (g <= 0.0 || g >= hi)
        throw std::invalid_argument("validate_bound: gamma outside (0, 2/(1+2*mu*s-mu))");
  }
  const bool noisy = !batch.z.empty();
  for (size_t i = 0; i < batch.x.size(); ++i) {
    if (group_norms(batch.x[i]).maxCoeff() > beta + 1e-12)
      throw std::invalid_argument("validate_bound: batch row norm exceeds beta");
    if (l20_norm(batch.x[i]) > s)  // s counts nonzero lifted rows
      throw std::invalid_argument("validate_bound: batch sparsity exceeds s");
    if (noisy && batch.z[i].norm() > sched.sigma + 1e-12)
      throw std::invalid_argument("validate_bound: batch noise exceeds sigma");
  }

  TheoryReport rep;
  rep.mu_tilde = mu_tilde;
  rep.s = s;
  rep.beta = beta;
  rep.sigma = sched.sigma;
  rep.c_w = sched.c_w;
  rep.thresholds = sched.theta;
  rep.c_rate = -std::log(q);
  rep.c_noise = (s + 1.0) * sched.c_w / (1.0 + mu_tilde - 2.0 * mu_tilde * s);
  rep.analytic_bounds =
      stepped ? stepped_bound_curve(s, beta, mu_tilde, gammas)
              : error_bound_curve(s, beta, mu_tilde, sched.c_w, sched.sigma, k_layers);

  const size_t b = batch.x.size();
  std::vector<Mat> y(b), cur(b);
  std::vector<IterateTrace> traces(b);
  for (size_t i = 0; i < b; ++i) {
    y[i] = s_tilde * batch.x[i];
    if (noisy) y[i] += batch.z[i];
    cur[i] = Mat::Zero(batch.x[i].rows(), batch.x[i].cols());
    traces[i].iterates.push_back(cur[i]);
  }
  for (int k = 0; k <= k_layers; ++k) {
    double e21 = 0.0, efro = 0.0;
    for (size_t i = 0; i < b; ++i) {
      e21 = std::max(e21, l21_norm(cur[i] - batch.x[i]));
      efro = std::max(efro, (cur[i] - batch.x[i]).norm());
    }
    rep.empirical_l21.push_back(e21);
    rep.empirical_fro.push_back(efro);
    if (efro > rep.analytic_bounds[static_cast<size_t>(k)])
      rep.bound_exceeded_layers.push_back(k);
    if (k == k_layers) break;
    const double gamma = stepped ? gammas[static_cast<size_t>(k)] : 1.0;
    for (size_t i = 0; i < b; ++i) {
      cur[i] = detail::theory_layer(cur[i], y[i], s_tilde, w, gamma,
                                    sched.theta[static_cast<size_t>(k)]);
      traces[i].iterates.push_back(cur[i]);
    }
  }
  for (size_t i = 0; i < b; ++i) {
    std::vector<Eigen::Index> sup;
    const Vec gn = group_norms(batch.x[i]);
    for (Eigen::Index r = 0; r < gn.size(); ++r)
      if (gn(r) > 0.0) sup.push_back(r);
    rep.nfp_violations += no_false_positive_check(traces[i], sup, nfp_tol);
  }
  return rep;
}

inline nlohmann::ordered_json theory_report_to_json(const TheoryReport& r) {
  nlohmann::ordered_json j;
  j["coupling_residuals"] = r.coupling_residuals;
  j["thresholds"] = r.thresholds;
  j["empirical_l21"] = r.empirical_l21;
  j["empirical_fro"] = r.empirical_fro;
  j["analytic_bounds"] = r.analytic_bounds;
  j["bound_exceeded_layers"] = r.bound_exceeded_layers;
  j["constants"] = nlohmann::ordered_json{
      {"mu_tilde", r.mu_tilde}, {"s", r.s},         {"beta", r.beta},
      {"sigma", r.sigma},       {"c_w", r.c_w},     {"c_rate", r.c_rate},
      {"c_noise", r.c_noise}};
  j["nfp_violations"] = r.nfp_violations;
  return j;
}

inline TheoryReport theory_report_from_json(const nlohmann::ordered_json& j) {
  TheoryReport r;
  r.coupling_residuals = j.at("coupling_residuals").get<std::vector<double>>();
  r.thresholds = j.at("thresholds").get<std::vector<double>>();
  r.empirical_l21 = j.at("empirical_l21").get<std::vector<double>>();
  r.empirical_fro = j.at("empirical_fro").get<std::vector<double>>();
  r.analytic_bounds = j.at("analytic_bounds").get<std::vector<double>>();
  r.bound_exceeded_layers = j.at("bound_exceeded_layers").get<std::vector<int>>();
  const auto& c = j.at("constants");
  r.mu_tilde = c.at("mu_tilde").get<double>();
  r.s = c.at("s").get<long>();
  r.beta = c.at("beta").get<double>();
  r.sigma = c.at("sigma").get<double>();
  r.c_w = c.at("c_w").get<double>();
  r.c_rate = c.at("c_rate").get<double>();
  r.c_noise = c.at("c_noise").get<double>();
  r.nfp_violations = j.at("nfp_violations").get<long>();
  return r;
}

}  // namespace jadce

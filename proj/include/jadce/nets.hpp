#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "jadce/blob_io.hpp"
#include "jadce/coherence_weights.hpp"
#include "jadce/operators.hpp"
#include "jadce/solvers.hpp"
#include "jadce/types.hpp"

namespace jadce {

enum class Arch { lista_gs, lista_gscp, alista_gs };

inline const char* to_string(Arch a) {
  switch (a) {
    case Arch::lista_gs: return "lista_gs";
    case Arch::lista_gscp: return "lista_gscp";
    case Arch::alista_gs: return "alista_gs";
  }
  return "?";
}

inline Arch arch_from_string(const std::string& s) {
  if (s == "lista_gs") return Arch::lista_gs;
  if (s == "lista_gscp") return Arch::lista_gscp;
  if (s == "alista_gs") return Arch::alista_gs;
  throw std::invalid_argument("unknown architecture: " + s);
}

// Trainables per layer k:
//   lista_gs:   w1[k] (2N x 2L), w2[k] (2N x 2N), theta[k]
//   lista_gscp: w[k] (2L x 2N), theta[k]
//   alista_gs:  theta[k], gamma[k]  (w_shared is fixed, not trained)
struct NetParams {
  Arch arch = Arch::lista_gscp;
  int k_layers = 0;
  std::vector<Mat> w1;
  std::vector<Mat> w2;
  std::vector<Mat> w;
  std::vector<double> theta;
  std::vector<double> gamma;
  Mat w_shared;
};

// Gradients share the parameter layout.
using NetGrads = NetParams;

inline long param_count(Arch arch, long n_lifted, long l_lifted, long k_layers) {
  if (n_lifted <= 0 || l_lifted <= 0) throw std::invalid_argument("param_count: bad dims");
  switch (arch) {
    case Arch::lista_gs:
      return k_layers * (n_lifted * n_lifted + l_lifted * n_lifted + 1);
    case Arch::lista_gscp:
      return k_layers * (l_lifted * n_lifted + 1);
    case Arch::alista_gs:
      return 2 * k_layers;
  }
  return 0;
}

inline long instantiated_scalars(const NetParams& p) {
  long count = static_cast<long>(p.theta.size() + p.gamma.size());
  for (const Mat& m : p.w1) count += m.size();
  for (const Mat& m : p.w2) count += m.size();
  for (const Mat& m : p.w) count += m.size();
  return count;
}

// Data-driven starting point: w1 = (1/C) S^T, w2 = I - (1/C) S^T S,
// gscp w = (1/C) S, theta = 0.1, gamma = 1; C = |S|_2^2. For alista_gs the
// fixed analysis matrix defaults to the coherence-minimizing weight for S
// and can be supplied precomputed.
inline NetParams init_params(Arch arch, const Mat& s_tilde, int k_layers,
                             const Mat* alista_w = nullptr,
                             double theta0 = 0.1) {
  if (k_layers < 1) throw std::invalid_argument("init_params: k_layers < 1");
  NetParams p;
  p.arch = arch;
  p.k_layers = k_layers;
  const double c = spectral_norm_sq(s_tilde);
  const size_t ku = static_cast<size_t>(k_layers);
  p.theta.assign(ku, theta0);
  switch (arch) {
    case Arch::lista_gs: {
      const Mat w1 = s_tilde.transpose() / c;
      // Written as I - w1 S so the layer-coupling residual w2 - (I - w1 S)
      // starts at exactly zero.
      const Mat w2 =
          Mat::Identity(s_tilde.cols(), s_tilde.cols()) - w1 * s_tilde;
      p.w1.assign(ku, w1);
      p.w2.assign(ku, w2);
      break;
    }
    case Arch::lista_gscp: {
      p.w.assign(ku, Mat(s_tilde / c));
      break;
    }
    case Arch::alista_gs: {
      p.gamma.assign(ku, 1.0);
      p.w_shared = alista_w ? *alista_w : pgd_weight(s_tilde).w;
      break;
    }
  }
  return p;
}

inline NetGrads zero_grads_like(const NetParams& p) {
  NetGrads g;
  g.arch = p.arch;
  g.k_layers = p.k_layers;
  g.theta.assign(p.theta.size(), 0.0);
  g.gamma.assign(p.gamma.size(), 0.0);
  auto zeros = [](const std::vector<Mat>& src) {
    std::vector<Mat> out;
    out.reserve(src.size());
    for (const Mat& m : src) out.push_back(Mat::Zero(m.rows(), m.cols()));
    return out;
  };
  g.w1 = zeros(p.w1);
  g.w2 = zeros(p.w2);
  g.w = zeros(p.w);
  if (p.w_shared.size()) g.w_shared = Mat::Zero(p.w_shared.rows(), p.w_shared.cols());
  return g;
}

namespace detail {
// Pre-shrinkage input of layer k. Shared by forward and backward so a
// recomputed value is bitwise identical to the one shrunk in the forward
// pass. For the residual-based architectures the residual y - s x is
// written to res_out when requested (it is computed anyway).
inline Mat layer_pre(const NetParams& p, int k, const Mat& x, const Mat& y,
                     const Mat& s_tilde, Mat* res_out = nullptr) {
  const size_t ku = static_cast<size_t>(k);
  switch (p.arch) {
    case Arch::lista_gs:
      return p.w1[ku] * y + p.w2[ku] * x;
    case Arch::lista_gscp: {
      Mat r = y - s_tilde * x;
      Mat v = x + p.w[ku].transpose() * r;
      if (res_out) *res_out = std::move(r);
      return v;
    }
    case Arch::alista_gs: {
      Mat r = y - s_tilde * x;
      Mat v = x + p.gamma[ku] * (p.w_shared.transpose() * r);
      if (res_out) *res_out = std::move(r);
      return v;
    }
  }
  throw std::logic_error("layer_pre: bad arch");
}
}  // namespace detail

// Everything backward needs beyond the iterates: pre-shrinkage inputs and
// (for the residual architectures) per-layer residuals.
struct ForwardCache {
  std::vector<Mat> pre;       // V_k, input to the layer-k shrinkage
  std::vector<Mat> residual;  // y - s x_k (lista_gscp / alista_gs only)
};

// Runs layers 0..upto_layer-1. `y_tilde` may be a column-stack of several
// samples; `block_cols` is then the per-sample width (M) so the row-group
// shrinkage is applied per sample. Pass a ForwardCache to retain the
// intermediates backward() would otherwise recompute.
inline IterateTrace forward(const NetParams& p, const Mat& s_tilde,
                            const Mat& y_tilde, const Mat& x0, int upto_layer,
                            Eigen::Index block_cols = -1,
                            const Mat* truth = nullptr,
                            ForwardCache* cache = nullptr) {
  if (upto_layer < 0 || upto_layer > p.k_layers)
    throw std::invalid_argument("forward: layer index out of range");
  Mat x = x0.size() ? x0 : Mat::Zero(s_tilde.cols(), y_tilde.cols());
  if (x.rows() != s_tilde.cols() || x.cols() != y_tilde.cols())
    throw std::invalid_argument("forward: x0 shape mismatch");
  IterateTrace tr;
  tr.iterates.reserve(static_cast<size_t>(upto_layer) + 1);
  tr.iterates.push_back(x);
  if (truth) tr.per_iter_nmse.push_back(nmse(x, *truth));
  if (cache) {
    cache->pre.clear();
    cache->residual.clear();
  }
  for (int k = 0; k < upto_layer; ++k) {
    Mat res;
    Mat v = detail::layer_pre(p, k, tr.iterates.back(), y_tilde, s_tilde,
                              cache ? &res : nullptr);
    if (cache) {
      cache->pre.push_back(v);  // copy of V before shrinkage
      cache->residual.push_back(std::move(res));
    }
    msto_inplace(v, p.theta[static_cast<size_t>(k)], block_cols);
    tr.iterates.push_back(std::move(v));
    if (truth) tr.per_iter_nmse.push_back(nmse(tr.iterates.back(), *truth));
  }
  return tr;
}

// Reverse-mode gradients of loss_scale * |X_K - truth|_F^2 for every
// trainable of layers k >= down_to_layer (others left zero, propagation
// stops there). The trace must come from forward() on the same inputs; a
// ForwardCache from that call skips the recomputation of the per-layer
// intermediates.
inline NetGrads backward(const NetParams& p, const IterateTrace& trace,
                         const Mat& s_tilde, const Mat& y_tilde,
                         const Mat& x_truth, int down_to_layer = 0,
                         Eigen::Index block_cols = -1, double loss_scale = 1.0,
                         const ForwardCache* cache = nullptr) {
  const int k_top = static_cast<int>(trace.iterates.size()) - 1;
  if (k_top < 1 || k_top > p.k_layers)
    throw std::invalid_argument("backward: trace does not match params");
  if (down_to_layer < 0 || down_to_layer >= k_top)
    throw std::invalid_argument("backward: bad down_to_layer");
  if (cache && static_cast<int>(cache->pre.size()) != k_top)
    throw std::invalid_argument("backward: cache does not match trace");
  NetGrads g = zero_grads_like(p);
  Mat grad_x = (2.0 * loss_scale) * (trace.iterates.back() - x_truth);
  Mat gv, v_scratch, r_scratch;
  for (int k = k_top - 1; k >= down_to_layer; --k) {
    const size_t ku = static_cast<size_t>(k);
    const Mat& xk = trace.iterates[ku];
    const bool residual_arch = p.arch != Arch::lista_gs;
    if (!cache) {
      v_scratch = detail::layer_pre(p, k, xk, y_tilde, s_tilde,
                                    residual_arch ? &r_scratch : nullptr);
    }
    const Mat& v = cache ? cache->pre[ku] : v_scratch;
    const Mat& res = cache && residual_arch ? cache->residual[ku] : r_scratch;
    g.theta[ku] = msto_vjp_inplace(v, p.theta[ku], grad_x, gv, block_cols);
    switch (p.arch) {
      case Arch::lista_gs:
        g.w1[ku] = gv * y_tilde.transpose();
        g.w2[ku] = gv * xk.transpose();
        if (k > down_to_layer) grad_x = p.w2[ku].transpose() * gv;
        break;
      case Arch::lista_gscp:
        g.w[ku] = res * gv.transpose();
        if (k > down_to_layer) grad_x = gv - s_tilde.transpose() * (p.w[ku] * gv);
        break;
      case Arch::alista_gs:
        g.gamma[ku] = gv.cwiseProduct((p.w_shared.transpose() * res).eval()).sum();
        if (k > down_to_layer)
          grad_x = gv - p.gamma[ku] * (s_tilde.transpose() * (p.w_shared * gv));
        break;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints: manifest.json + one f64 blob per parameter tensor.

inline void save_params(const NetParams& p, const std::filesystem::path& dir,
                        const json& extra = json::object()) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json man;
  man["format_version"] = 1;
  man["kind"] = "checkpoint";
  man["arch"] = to_string(p.arch);
  man["k_layers"] = p.k_layers;
  json blobs = json::object();
  auto dump_theta = [&](const std::vector<double>& v, const std::string& name) {
    if (v.empty()) return;
    Mat m(static_cast<Eigen::Index>(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    write_f64_blob(dir / (name + ".f64"), m);
    blobs[name] = json{{"file", name + ".f64"}, {"rows", v.size()}, {"cols", 1}};
  };
  auto dump_mats = [&](const std::vector<Mat>& ms, const std::string& stem) {
    for (size_t i = 0; i < ms.size(); ++i) {
      const std::string name = stem + "_" + std::to_string(i);
      write_f64_blob(dir / (name + ".f64"), ms[i]);
      blobs[name] = json{{"file", name + ".f64"},
                         {"rows", ms[i].rows()},
                         {"cols", ms[i].cols()}};
    }
  };
  dump_theta(p.theta, "theta");
  dump_theta(p.gamma, "gamma");
  dump_mats(p.w1, "w1");
  dump_mats(p.w2, "w2");
  dump_mats(p.w, "w");
  if (p.w_shared.size()) {
    write_f64_blob(dir / "w_shared.f64", p.w_shared);
    blobs["w_shared"] = json{{"file", "w_shared.f64"},
                             {"rows", p.w_shared.rows()},
                             {"cols", p.w_shared.cols()}};
  }
  man["blobs"] = blobs;
  for (auto it = extra.begin(); it != extra.end(); ++it) man[it.key()] = it.value();
  std::ofstream f(dir / "manifest.json");
  f << man.dump(2) << "\n";
  if (!f) throw std::runtime_error("failed writing checkpoint manifest");
}

inline NetParams load_params(const std::filesystem::path& dir,
                             json* manifest_out = nullptr) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("no manifest.json in " + dir.string());
  json man = json::parse(f);
  if (man.at("kind").get<std::string>() != "checkpoint")
    throw std::runtime_error("not a checkpoint: " + dir.string());
  NetParams p;
  p.arch = arch_from_string(man.at("arch").get<std::string>());
  p.k_layers = man.at("k_layers").get<int>();
  const json& blobs = man.at("blobs");
  auto read_mat = [&](const std::string& name) {
    const json& b = blobs.at(name);
    return read_f64_blob(dir / b.at("file").get<std::string>(),
                         b.at("rows").get<Eigen::Index>(),
                         b.at("cols").get<Eigen::Index>());
  };
  auto read_vec = [&](const std::string& name, std::vector<double>& out) {
    if (!blobs.contains(name)) return;
    const Mat m = read_mat(name);
    out.resize(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<size_t>(i)] = m(i, 0);
  };
  auto read_mats = [&](const std::string& stem, std::vector<Mat>& out) {
    for (int i = 0;; ++i) {
      const std::string name = stem + "_" + std::to_string(i);
      if (!blobs.contains(name)) break;
      out.push_back(read_mat(name));
    }
  };
  read_vec("theta", p.theta);
  read_vec("gamma", p.gamma);
  read_mats("w1", p.w1);
  read_mats("w2", p.w2);
  read_mats("w", p.w);
  if (blobs.contains("w_shared")) p.w_shared = read_mat("w_shared");
  if (manifest_out) *manifest_out = man;
  return p;
}

}  // namespace jadce

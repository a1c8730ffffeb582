#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jadce/blob_io.hpp"
#include "jadce/config.hpp"
#include "jadce/parallel.hpp"
#include "jadce/signal_model.hpp"
#include "jadce/types.hpp"

namespace jadce {

// P instances sharing one preamble, kept in lifted (real) form for the
// solvers and networks; the complex parts are what goes to disk.
struct Dataset {
  PreambleMatrix preamble;
  Mat s_tilde;
  long m = 0;
  double snr_db = 0.0;
  double activity_prob = 0.0;
  double condition_number = 0.0;
  uint64_t seed = 0;
  std::vector<Mat> x;   // 2N x M per sample (ground truth)
  std::vector<Mat> y;   // 2L x M per sample (observation)
  std::vector<Mat> z;   // 2L x M per sample (noise)
  std::vector<std::vector<uint8_t>> activity;

  long p() const { return static_cast<long>(x.size()); }

  // Samples concatenated column-wise (2N x M*P / 2L x M*P), the layout the
  // full-batch trainer works in.
  Mat x_stack() const { return stack(x); }
  Mat y_stack() const { return stack(y); }

 private:
  static Mat stack(const std::vector<Mat>& v) {
    if (v.empty()) return Mat();
    Mat out(v[0].rows(), v[0].cols() * static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i)
      out.middleCols(static_cast<Eigen::Index>(i) * v[0].cols(), v[0].cols()) = v[i];
    return out;
  }
};

inline PreambleMatrix preamble_from_config(const ExperimentConfig& cfg) {
  PreambleMatrix pre = gen_preamble(preamble_kind_from_string(cfg.preamble_kind),
                                    cfg.l, cfg.n, derive_seed(cfg.seed, 0));
  if (cfg.condition_number > 0.0)
    pre = set_condition_number(pre.entries, cfg.condition_number);
  return pre;
}

// Generates count instances on a fixed preamble. Sample i is a pure function
// of (seed, salt, i), so train/test splits use different salts.
inline Dataset synth_dataset(const ExperimentConfig& cfg, long count,
                             uint64_t salt = 0) {
  cfg.validate();
  Dataset ds;
  ds.preamble = preamble_from_config(cfg);
  ds.s_tilde = lift_matrix(ds.preamble.entries);
  ds.m = cfg.m;
  ds.snr_db = cfg.snr_db;
  ds.activity_prob = cfg.activity_prob;
  ds.condition_number = cfg.condition_number;
  ds.seed = cfg.seed;
  ds.x.resize(static_cast<size_t>(count));
  ds.y.resize(static_cast<size_t>(count));
  ds.z.resize(static_cast<size_t>(count));
  ds.activity.resize(static_cast<size_t>(count));
  parallel_for(count, [&](long i) {
    const uint64_t si = derive_seed(derive_seed(cfg.seed, 1000 + salt), static_cast<uint64_t>(i));
    ProblemInstance inst = make_instance(ds.preamble, cfg.m, cfg.activity_prob,
                                         cfg.snr_db, si);
    const size_t u = static_cast<size_t>(i);
    ds.x[u] = lift_stack(inst.signal.entries);
    ds.y[u] = lift_stack(inst.observation);
    ds.z[u] = lift_stack(inst.noise);
    ds.activity[u] = inst.signal.activity;
  });
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const long p = ds.p();
  const long l = static_cast<long>(ds.preamble.l());
  const long n = static_cast<long>(ds.preamble.n());
  // Complex stacks, one blob per array family.
  CMat xc(n, ds.m * p), yc(l, ds.m * p), zc(l, ds.m * p);
  Mat act(p, n);
  for (long i = 0; i < p; ++i) {
    const size_t u = static_cast<size_t>(i);
    xc.middleCols(i * ds.m, ds.m) = unlift_stack(ds.x[u]);
    yc.middleCols(i * ds.m, ds.m) = unlift_stack(ds.y[u]);
    zc.middleCols(i * ds.m, ds.m) = unlift_stack(ds.z[u]);
    for (long j = 0; j < n; ++j)
      act(i, j) = ds.activity[u][static_cast<size_t>(j)];
  }
  write_cf64_blob(dir / "preamble.cf64", ds.preamble.entries);
  write_cf64_blob(dir / "x.cf64", xc);
  write_cf64_blob(dir / "y.cf64", yc);
  write_cf64_blob(dir / "z.cf64", zc);
  write_f64_blob(dir / "activity.f64", act);

  json man;
  man["format_version"] = 1;
  man["kind"] = "dataset";
  man["l"] = l;
  man["n"] = n;
  man["m"] = ds.m;
  man["p"] = p;
  man["snr_db"] = ExperimentConfig::snr_to_json(ds.snr_db);
  man["activity_prob"] = ds.activity_prob;
  man["preamble_kind"] = to_string(ds.preamble.kind);
  man["condition_number"] = ds.condition_number;
  man["seed"] = ds.seed;
  man["blobs"] = json{
      {"preamble", {{"file", "preamble.cf64"}, {"rows", l}, {"cols", n}, {"complex", true}}},
      {"x", {{"file", "x.cf64"}, {"rows", n}, {"cols", ds.m * p}, {"complex", true}}},
      {"y", {{"file", "y.cf64"}, {"rows", l}, {"cols", ds.m * p}, {"complex", true}}},
      {"z", {{"file", "z.cf64"}, {"rows", l}, {"cols", ds.m * p}, {"complex", true}}},
      {"activity", {{"file", "activity.f64"}, {"rows", p}, {"cols", n}, {"complex", false}}},
  };
  std::ofstream f(dir / "manifest.json");
  f << man.dump(2) << "\n";
  if (!f) throw std::runtime_error("failed writing manifest in " + dir.string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("no manifest.json in " + dir.string());
  json man = json::parse(f);
  if (man.at("kind").get<std::string>() != "dataset")
    throw std::runtime_error("not a dataset container: " + dir.string());
  const long l = man.at("l").get<long>();
  const long n = man.at("n").get<long>();
  const long m = man.at("m").get<long>();
  const long p = man.at("p").get<long>();
  Dataset ds;
  ds.m = m;
  ds.snr_db = ExperimentConfig::snr_from_json(man.at("snr_db"));
  ds.activity_prob = man.at("activity_prob").get<double>();
  ds.condition_number = man.value("condition_number", 0.0);
  ds.seed = man.at("seed").get<uint64_t>();
  ds.preamble.kind = preamble_kind_from_string(man.at("preamble_kind").get<std::string>());
  ds.preamble.entries = read_cf64_blob(dir / "preamble.cf64", l, n);
  ds.s_tilde = lift_matrix(ds.preamble.entries);
  const CMat xc = read_cf64_blob(dir / "x.cf64", n, m * p);
  const CMat yc = read_cf64_blob(dir / "y.cf64", l, m * p);
  const CMat zc = read_cf64_blob(dir / "z.cf64", l, m * p);
  const Mat act = read_f64_blob(dir / "activity.f64", p, n);
  ds.x.resize(static_cast<size_t>(p));
  ds.y.resize(static_cast<size_t>(p));
  ds.z.resize(static_cast<size_t>(p));
  ds.activity.resize(static_cast<size_t>(p));
  for (long i = 0; i < p; ++i) {
    const size_t u = static_cast<size_t>(i);
    ds.x[u] = lift_stack(xc.middleCols(i * m, m));
    ds.y[u] = lift_stack(yc.middleCols(i * m, m));
    ds.z[u] = lift_stack(zc.middleCols(i * m, m));
    ds.activity[u].resize(static_cast<size_t>(n));
    for (long j = 0; j < n; ++j)
      ds.activity[u][static_cast<size_t>(j)] = act(i, j) != 0.0 ? 1 : 0;
  }
  return ds;
}

}  // namespace jadce

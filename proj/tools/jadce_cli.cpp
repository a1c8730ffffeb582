// jadce command-line tool: synth / train / eval / theory / weights.
//
// Global flags: --preset NAME, --config PATH, --seed U64, --out DIR.
// Precedence: defaults < preset < config file < explicit flags.
// Env: JADCE_THREADS caps worker threads (default: hardware concurrency).

#include <CLI11.hpp>

#include "jadce/jadce.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace jadce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 2;
constexpr int kExitDiverged = 3;

struct GlobalOpts {
  std::string preset;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
  ExperimentConfig cfg;
  if (!g.preset.empty()) cfg.apply_preset(g.preset);
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + g.config_path);
    json j = json::parse(in);
    cfg.merge_json(j);
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.out_dir = g.out_dir;
  cfg.validate();
  return cfg;
}

// Dataset salts: 0 = train, 1 = validation, 2 = test. Sweep sets shift by 16*i.
constexpr std::uint64_t kSaltTrain = 0;
constexpr std::uint64_t kSaltVal = 1;
constexpr std::uint64_t kSaltTest = 2;

const char* kCsvHeader =
    "method,layer_or_iter,nmse_db,snr_db,seed,activity_prob,miss_rate,false_alarm_rate,error_prob";

std::string fmt_db(double v) {
  std::ostringstream os;
  if (std::isinf(v)) {
    os << (v > 0 ? "inf" : "-inf");
  } else {
    os.precision(10);
    os << v;
  }
  return os.str();
}

struct DetectionTotals {
  double miss_rate = 0.0;
  double false_alarm_rate = 0.0;
  double error_prob = 0.0;
};

// Aggregate detection over a dataset given stacked final iterates (2N x M*P).
DetectionTotals batch_detection(const Mat& x_stack, const Dataset& ds) {
  const Eigen::Index n = ds.s_tilde.cols() / 2;
  std::int64_t misses = 0, false_alarms = 0, actives = 0, inactives = 0;
  for (long i = 0; i < ds.p(); ++i) {
    const Mat xi = x_stack.middleCols(static_cast<Eigen::Index>(i) * ds.m, ds.m);
    const std::vector<std::uint8_t> det = detect_activity(xi, n, ThresholdRule{});
    for (Eigen::Index d = 0; d < n; ++d) {
      const bool truth = ds.activity[i][static_cast<std::size_t>(d)] != 0;
      const bool found = det[static_cast<std::size_t>(d)] != 0;
      if (truth) {
        ++actives;
        if (!found) ++misses;
      } else {
        ++inactives;
        if (found) ++false_alarms;
      }
    }
  }
  DetectionTotals t;
  t.miss_rate = actives > 0 ? static_cast<double>(misses) / static_cast<double>(actives) : 0.0;
  t.false_alarm_rate =
      inactives > 0 ? static_cast<double>(false_alarms) / static_cast<double>(inactives) : 0.0;
  const std::int64_t total = actives + inactives;
  t.error_prob =
      total > 0 ? static_cast<double>(misses + false_alarms) / static_cast<double>(total) : 0.0;
  return t;
}

struct EvalMethod {
  std::string name;
  const NetParams* params = nullptr;  // null => classical solver
  bool fista = false;
};

// Emit per-layer rows for one method on one dataset.
void emit_method_rows(std::ofstream& csv, const EvalMethod& method, const Dataset& ds,
                      const ExperimentConfig& cfg, bool per_layer) {
  const Mat x_stack = ds.x_stack();
  const Mat y_stack = ds.y_stack();
  IterateTrace trace;
  if (method.params != nullptr) {
    trace = forward(*method.params, ds.s_tilde, y_stack, Mat::Zero(ds.s_tilde.cols(), x_stack.cols()),
                    method.params->k_layers, ds.m, &x_stack);
  } else if (method.fista) {
    trace = nesterov_gs(y_stack, ds.s_tilde, cfg.lambda, static_cast<int>(cfg.k_layers),
                        kAutoStep, Mat(), &x_stack, ds.m);
  } else {
    trace = ista_gs(y_stack, ds.s_tilde, cfg.lambda, static_cast<int>(cfg.k_layers), kAutoStep,
                    Mat(), &x_stack, ds.m);
  }
  const std::size_t k_last = trace.iterates.size() - 1;
  const std::size_t k_first = per_layer ? 1 : k_last;
  for (std::size_t k = k_first; k <= k_last; ++k) {
    csv << method.name << ',' << k << ',' << fmt_db(trace.per_iter_nmse[k]) << ','
        << fmt_db(ds.snr_db) << ',' << cfg.seed << ',' << ds.activity_prob;
    if (k == k_last) {
      const DetectionTotals det = batch_detection(trace.iterates[k], ds);
      csv << ',' << det.miss_rate << ',' << det.false_alarm_rate << ',' << det.error_prob;
    } else {
      csv << ",,,";
    }
    csv << '\n';
  }
}

int run_synth(const GlobalOpts& g, std::uint64_t count_flag, std::uint64_t salt) {
  ExperimentConfig cfg = resolve_config(g);
  const long count = count_flag > 0 ? static_cast<long>(count_flag)
                                           : static_cast<long>(cfg.p_train);
  const Dataset ds = synth_dataset(cfg, count, salt);
  const fs::path dir = fs::path(cfg.out_dir) / "dataset";
  save_dataset(ds, dir.string());
  std::cout << "wrote dataset: " << dir.string() << " (" << count << " samples, "
            << ds.preamble.l() << "x" << ds.preamble.n() << " " << to_string(ds.preamble.kind)
            << " preamble)\n";
  return kExitOk;
}

int run_train(const GlobalOpts& g, const std::string& arch_name, const std::string& data_dir,
              std::uint64_t k_flag, std::uint64_t steps_flag, std::uint64_t p_flag,
              double lr0_flag) {
  ExperimentConfig cfg = resolve_config(g);
  if (k_flag > 0) cfg.k_layers = static_cast<int>(k_flag);
  if (steps_flag > 0) cfg.steps_per_phase = static_cast<int>(steps_flag);
  if (p_flag > 0) cfg.p_train = static_cast<int>(p_flag);
  if (lr0_flag > 0) cfg.lr0 = lr0_flag;
  const Arch arch = arch_from_string(arch_name);

  Dataset train_ds = data_dir.empty()
                         ? synth_dataset(cfg, static_cast<long>(cfg.p_train), kSaltTrain)
                         : load_dataset(data_dir);
  const Dataset val_ds = synth_dataset(cfg, static_cast<long>(cfg.n_test), kSaltVal);

  const Mat* alista_w = nullptr;
  Mat w_store;
  if (arch == Arch::alista_gs) {
    const fs::path cache = fs::path(cfg.out_dir) / "weights_cache";
    const CoherenceWeight cw = pgd_weight_cached(train_ds.s_tilde, cache.string());
    w_store = cw.w;
    alista_w = &w_store;
  }

  TrainSchedule sched;
  sched.steps_per_phase = cfg.steps_per_phase;
  sched.lr1_factor = cfg.lr1_factor;
  const TrainResult result =
      train_layerwise(arch, train_ds, cfg.k_layers, cfg.lr0, sched, &val_ds, alista_w);

  const fs::path arch_dir = fs::path(cfg.out_dir) / arch_name;
  json extra;
  extra["config"] = cfg.to_json();
  extra["diverged"] = result.log.diverged;
  extra["divergence_note"] = result.log.divergence_note;
  json val_curve = json::array();
  for (const StageLog& st : result.log.stages) val_curve.push_back(st.val_nmse_db);
  extra["val_nmse_db"] = val_curve;
  save_params(result.params, (arch_dir / "checkpoint").string(), extra);

  std::ofstream csv(arch_dir / "train_log.csv");
  csv << kCsvHeader << ",phase,final_loss\n";
  for (const StageLog& st : result.log.stages) {
    csv << arch_name << ',' << st.stage << ',' << fmt_db(st.val_nmse_db) << ','
        << fmt_db(train_ds.snr_db) << ',' << cfg.seed << ',' << cfg.activity_prob << ",,,,"
        << st.phase << ',' << fmt_db(st.losses.empty() ? 0.0 : st.losses.back()) << '\n';
  }
  csv.close();

  std::cout << "wrote checkpoint: " << (arch_dir / "checkpoint").string() << "\n";
  std::cout << "wrote train log:  " << (arch_dir / "train_log.csv").string() << "\n";
  if (result.log.diverged) {
    std::cerr << "training diverged: " << result.log.divergence_note << "\n";
    return kExitDiverged;
  }
  const double final_val =
      result.log.stages.empty() ? 0.0 : result.log.stages.back().val_nmse_db;
  std::cout << arch_name << " final validation NMSE: " << fmt_db(final_val) << " dB\n";
  return kExitOk;
}

int run_eval(const GlobalOpts& g, const std::vector<std::string>& checkpoints,
             const std::string& data_dir, const std::string& sweep) {
  ExperimentConfig cfg = resolve_config(g);

  std::vector<NetParams> nets;
  std::vector<EvalMethod> methods;
  methods.push_back({"ista_gs", nullptr, false});
  methods.push_back({"fista_gs", nullptr, true});
  nets.reserve(checkpoints.size());
  for (const std::string& dir : checkpoints) {
    nets.push_back(load_params(dir));
    std::string name = to_string(nets.back().arch);
    for (const EvalMethod& m : methods)
      if (m.name == name) name += "_" + std::to_string(nets.size());
    methods.push_back({name, nullptr, false});
  }
  for (std::size_t i = 0; i < nets.size(); ++i) methods[2 + i].params = &nets[i];

  fs::create_directories(cfg.out_dir);
  const fs::path csv_path = fs::path(cfg.out_dir) / "eval.csv";
  std::ofstream csv(csv_path);
  csv << kCsvHeader << '\n';

  if (sweep == "none") {
    const Dataset ds = data_dir.empty()
                           ? synth_dataset(cfg, static_cast<long>(cfg.n_test), kSaltTest)
                           : load_dataset(data_dir);
    for (const EvalMethod& m : methods) emit_method_rows(csv, m, ds, cfg, true);
  } else if (sweep == "snr") {
    std::vector<double> grid = cfg.snr_sweep;
    if (grid.empty()) grid = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ExperimentConfig c = cfg;
      c.snr_db = grid[i];
      const Dataset ds =
          synth_dataset(c, static_cast<long>(c.n_test), kSaltTest + 16 * (i + 1));
      for (const EvalMethod& m : methods) emit_method_rows(csv, m, ds, c, false);
    }
  } else if (sweep == "activity") {
    std::vector<double> grid = cfg.activity_sweep;
    if (grid.empty()) grid = {0.05, 0.1, 0.15, 0.2};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ExperimentConfig c = cfg;
      c.activity_prob = grid[i];
      const Dataset ds =
          synth_dataset(c, static_cast<long>(c.n_test), kSaltTest + 16 * (i + 1));
      for (const EvalMethod& m : methods) emit_method_rows(csv, m, ds, c, false);
    }
  } else {
    throw std::runtime_error("unknown sweep mode: " + sweep);
  }
  csv.close();
  std::cout << "wrote " << csv_path.string() << "\n";
  return kExitOk;
}

int run_theory(const GlobalOpts& g, const std::string& mode, const std::string& checkpoint,
               std::uint64_t sparsity, double beta, std::uint64_t batch_size) {
  ExperimentConfig cfg = resolve_config(g);
  fs::create_directories(cfg.out_dir);

  if (mode == "coupling") {
    if (checkpoint.empty())
      throw std::runtime_error("theory --mode coupling requires --checkpoint");
    const NetParams params = load_params(checkpoint);
    if (params.arch != Arch::lista_gs)
      throw std::runtime_error("coupling diagnostics require a lista_gs checkpoint");
    const PreambleMatrix pre = preamble_from_config(cfg);
    const Mat s_tilde = lift_matrix(pre.entries);
    const CouplingDiag diag = coupling_diagnostics(params, s_tilde);
    json out;
    out["kind"] = "coupling";
    out["residual_fro"] = diag.residuals;
    const fs::path path = fs::path(cfg.out_dir) / "theory_coupling.json";
    std::ofstream f(path);
    f << out.dump(2) << '\n';
    std::cout << "wrote " << path.string() << "\n";
    for (std::size_t k = 0; k < diag.residuals.size(); ++k)
      std::cout << "layer " << k << " coupling residual: " << diag.residuals[k] << "\n";
    return kExitOk;
  }
  if (mode != "oracle") throw std::runtime_error("unknown theory mode: " + mode);

  if (sparsity < 2 || sparsity % 2 != 0)
    throw std::runtime_error("--sparsity counts lifted rows; must be even and >= 2");
  const PreambleMatrix pre = preamble_from_config(cfg);
  const Mat s_tilde = lift_matrix(pre.entries);

  const fs::path cache = fs::path(cfg.out_dir) / "weights_cache";
  const CoherenceWeight cw = pgd_weight_cached(s_tilde, cache.string());
  const double mu_tilde = generalized_coherence(cw.w, s_tilde);

  // Batch with exactly sparsity/2 active devices per sample, rows scaled to norm <= beta.
  const Eigen::Index n = pre.n();
  const std::size_t devices = static_cast<std::size_t>(sparsity / 2);
  TheoryBatch batch;
  Rng rng(derive_seed(cfg.seed, 7001));
  const bool noiseless = std::isinf(cfg.snr_db);
  for (std::size_t i = 0; i < batch_size; ++i) {
    CMat x = CMat::Zero(n, cfg.m);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index d = 0; d < n; ++d) order[static_cast<std::size_t>(d)] = d;
    for (std::size_t d = 0; d < devices; ++d) {
      const std::size_t j =
          d + static_cast<std::size_t>(rng.uniform() * static_cast<double>(order.size() - d));
      std::swap(order[d], order[j]);
      x.row(order[d]) = rng.cnormal_matrix(1, cfg.m);
    }
    Mat xt = lift_stack(x);
    const double max_row = group_norms(xt).maxCoeff();
    if (max_row > 0) xt *= beta / max_row;
    Mat z = Mat::Zero(s_tilde.rows(), cfg.m);
    if (!noiseless) {
      const Mat clean = s_tilde * xt;
      z = rng.normal_matrix(clean.rows(), clean.cols());
      const double target = clean.squaredNorm() / std::pow(10.0, cfg.snr_db / 10.0);
      z *= std::sqrt(target) / z.norm();
    }
    batch.x.push_back(std::move(xt));
    batch.z.push_back(std::move(z));
  }

  const Arch arch = cfg.archs.empty() ? Arch::lista_gscp : arch_from_string(cfg.archs.front());
  const Arch theory_arch = (arch == Arch::alista_gs) ? Arch::alista_gs : Arch::lista_gscp;
  std::vector<double> gammas;
  if (theory_arch == Arch::alista_gs) gammas.assign(static_cast<std::size_t>(cfg.k_layers), 1.0);

  const GoodThresholds sched =
      good_thresholds(theory_arch, batch, s_tilde, cw.w, mu_tilde, cfg.k_layers, gammas);
  const TheoryReport report =
      validate_bound(theory_arch, batch, s_tilde, cw.w, sched, static_cast<long>(sparsity), beta,
                     mu_tilde, gammas, noiseless ? 1e-12 : 1e-6);

  const fs::path path = fs::path(cfg.out_dir) / "theory_report.json";
  std::ofstream f(path);
  f << theory_report_to_json(report).dump(2) << '\n';
  std::cout << "wrote " << path.string() << "\n";
  std::cout << "mu_tilde=" << report.mu_tilde << " c_rate=" << report.c_rate
            << " bound_exceeded_layers=" << report.bound_exceeded_layers.size()
            << " false_positive_violations=" << report.nfp_violations << "\n";
  return report.bound_exceeded_layers.empty() && report.nfp_violations == 0 ? kExitOk
                                                                            : kExitRuntime;
}

int run_weights(const GlobalOpts& g, bool no_cache) {
  ExperimentConfig cfg = resolve_config(g);
  const PreambleMatrix pre = preamble_from_config(cfg);
  const Mat s_tilde = lift_matrix(pre.entries);
  const fs::path cache = fs::path(cfg.out_dir) / "weights_cache";
  const CoherenceWeight cw =
      no_cache ? pgd_weight(s_tilde) : pgd_weight_cached(s_tilde, cache.string());
  fs::create_directories(cfg.out_dir);
  const fs::path dir = fs::path(cfg.out_dir) / "weights";
  save_weight(cw, s_tilde, dir.string());
  std::cout << "wrote " << dir.string() << "\n";
  std::cout << "objective=" << cw.objective << " constraint_violation=" << cw.constraint_violation
            << " mu_tilde=" << cw.mu_tilde_estimate << " iters=" << cw.iters
            << " converged=" << (cw.converged ? "yes" : "no") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jadce: group-sparse joint activity detection and channel estimation toolkit"};
  app.require_subcommand(1);
  app.footer("Environment: JADCE_THREADS caps worker threads (default: hardware concurrency).");

  GlobalOpts g;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  app.add_option("--preset", g.preset, "configuration preset: desk, medium, large")
      ->check(CLI::IsMember({"desk", "medium", "large"}));
  app.add_option("--config", g.config_path, "JSON config file (partial keys allowed)");
  app.add_option("--out", g.out_dir, "output directory (default: out)");
  app.add_option("--seed", seed_flag, "override config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.fallthrough();

  CLI::App* synth = app.add_subcommand("synth", "generate a dataset directory");
  std::uint64_t count = 0, salt = 0;
  synth->add_option("--count", count, "number of samples (default: config p_train)");
  synth->add_option("--salt", salt, "dataset salt (0=train, 1=val, 2=test)");

  CLI::App* train = app.add_subcommand("train", "train an unrolled network layer-wise");
  std::string arch_name, train_data;
  std::uint64_t k_flag = 0, steps_flag = 0, p_flag = 0;
  double lr0_flag = 0;
  train->add_option("--arch", arch_name, "lista_gs, lista_gscp, or alista_gs")
      ->required()
      ->check(CLI::IsMember({"lista_gs", "lista_gscp", "alista_gs"}));
  train->add_option("--data", train_data, "existing dataset directory (default: synthesize)");
  train->add_option("--layers", k_flag, "override config k_layers");
  train->add_option("--steps", steps_flag, "override config steps_per_phase");
  train->add_option("--train-size", p_flag, "override config p_train");
  train->add_option("--lr0", lr0_flag, "override config lr0");

  CLI::App* eval = app.add_subcommand("eval", "evaluate solvers and checkpoints to CSV");
  std::vector<std::string> checkpoints;
  std::string eval_data, sweep = "none";
  eval->add_option("--checkpoint", checkpoints, "checkpoint directory (repeatable)");
  eval->add_option("--data", eval_data, "existing dataset directory (default: synthesize)");
  eval->add_option("--sweep", sweep, "none, snr, or activity")
      ->check(CLI::IsMember({"none", "snr", "activity"}));

  CLI::App* theory = app.add_subcommand("theory", "coupling diagnostics or oracle-threshold bound check");
  std::string mode = "oracle", theory_checkpoint;
  std::uint64_t sparsity = 2, batch_size = 64;
  double beta = 1.0;
  theory->add_option("--mode", mode, "coupling or oracle")
      ->check(CLI::IsMember({"coupling", "oracle"}));
  theory->add_option("--checkpoint", theory_checkpoint, "lista_gs checkpoint (coupling mode)");
  theory->add_option("--sparsity", sparsity, "max active lifted rows per sample (even)");
  theory->add_option("--beta", beta, "max lifted row norm");
  theory->add_option("--batch", batch_size, "number of synthetic samples");

  CLI::App* weights = app.add_subcommand("weights", "precompute coherence-minimizing weights");
  bool no_cache = false;
  weights->add_flag("--no-cache", no_cache, "skip the on-disk weight cache");

  CLI11_PARSE(app, argc, argv);
  if (seed_set) g.seed = seed_flag;

  try {
    if (*synth) return run_synth(g, count, salt);
    if (*train)
      return run_train(g, arch_name, train_data, k_flag, steps_flag, p_flag, lr0_flag);
    if (*eval) return run_eval(g, checkpoints, eval_data, sweep);
    if (*theory) return run_theory(g, mode, theory_checkpoint, sparsity, beta, batch_size);
    if (*weights) return run_weights(g, no_cache);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jadce/blob_io.hpp"

namespace jadce {

// One experiment's full description. Defaults: 0.1 activity, lambda 0.1,
// K = 12 layers, 64 training / 128 test samples, lr0 5e-4 with the fine-tune
// rate at 0.2 * lr0, desk-scale dims.
struct ExperimentConfig {
  long l = 20;
  long n = 40;
  long m = 8;
  std::string preamble_kind = "gaussian";
  double condition_number = 0.0;  // 0 = leave the preamble spectrum alone
  double snr_db = 15.0;
  std::vector<double> snr_sweep;       // optional eval sweep
  std::vector<double> activity_sweep;  // optional eval sweep
  double activity_prob = 0.1;
  double lambda = 0.1;
  long k_layers = 12;
  long p_train = 64;
  long n_test = 128;
  double lr0 = 5e-4;
  double lr1_factor = 0.2;
  long steps_per_phase = 400;
  std::vector<std::string> archs = {"lista_gs", "lista_gscp", "alista_gs"};
  uint64_t seed = 1;
  std::string out_dir = "out";

  void apply_preset(const std::string& name) {
    if (name == "desk") {
      l = 20; n = 40; m = 8; k_layers = 8;
    } else if (name == "medium") {
      l = 100; n = 200; m = 30; k_layers = 12;
    } else if (name == "large") {
      l = 90; n = 300; m = 100; k_layers = 12;
    } else {
      throw std::invalid_argument("unknown preset: " + name);
    }
  }

  static double snr_from_json(const json& v) {
    if (v.is_string()) {
      if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
      throw std::invalid_argument("snr_db string must be \"inf\"");
    }
    return v.get<double>();
  }

  static json snr_to_json(double v) {
    if (std::isinf(v) && v > 0) return json("inf");
    return json(v);
  }

  // Overrides only the keys present.
  void merge_json(const json& j) {
    if (j.contains("l")) l = j["l"].get<long>();
    if (j.contains("n")) n = j["n"].get<long>();
    if (j.contains("m")) m = j["m"].get<long>();
    if (j.contains("preamble_kind")) preamble_kind = j["preamble_kind"].get<std::string>();
    if (j.contains("condition_number")) condition_number = j["condition_number"].get<double>();
    if (j.contains("snr_db")) snr_db = snr_from_json(j["snr_db"]);
    if (j.contains("snr_sweep")) snr_sweep = j["snr_sweep"].get<std::vector<double>>();
    if (j.contains("activity_sweep")) activity_sweep = j["activity_sweep"].get<std::vector<double>>();
    if (j.contains("activity_prob")) activity_prob = j["activity_prob"].get<double>();
    if (j.contains("lambda")) lambda = j["lambda"].get<double>();
    if (j.contains("k_layers")) k_layers = j["k_layers"].get<long>();
    if (j.contains("p_train")) p_train = j["p_train"].get<long>();
    if (j.contains("n_test")) n_test = j["n_test"].get<long>();
    if (j.contains("lr0")) lr0 = j["lr0"].get<double>();
    if (j.contains("lr1_factor")) lr1_factor = j["lr1_factor"].get<double>();
    if (j.contains("steps_per_phase")) steps_per_phase = j["steps_per_phase"].get<long>();
    if (j.contains("archs")) archs = j["archs"].get<std::vector<std::string>>();
    if (j.contains("seed")) seed = j["seed"].get<uint64_t>();
    if (j.contains("out_dir")) out_dir = j["out_dir"].get<std::string>();
  }

  json to_json() const {
    json j;
    j["l"] = l;
    j["n"] = n;
    j["m"] = m;
    j["preamble_kind"] = preamble_kind;
    j["condition_number"] = condition_number;
    j["snr_db"] = snr_to_json(snr_db);
    if (!snr_sweep.empty()) j["snr_sweep"] = snr_sweep;
    if (!activity_sweep.empty()) j["activity_sweep"] = activity_sweep;
    j["activity_prob"] = activity_prob;
    j["lambda"] = lambda;
    j["k_layers"] = k_layers;
    j["p_train"] = p_train;
    j["n_test"] = n_test;
    j["lr0"] = lr0;
    j["lr1_factor"] = lr1_factor;
    j["steps_per_phase"] = steps_per_phase;
    j["archs"] = archs;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j;
  }

  static ExperimentConfig from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(f);
    ExperimentConfig c;
    c.merge_json(j);
    return c;
  }

  void validate() const {
    if (l < 2 || n < 2 || m < 1) throw std::invalid_argument("config: bad dims");
    if (lambda <= 0) throw std::invalid_argument("config: lambda must be > 0");
    if (k_layers < 1) throw std::invalid_argument("config: k_layers must be >= 1");
    if (p_train < 1 || n_test < 0) throw std::invalid_argument("config: bad sample counts");
    if (activity_prob < 0 || activity_prob > 1)
      throw std::invalid_argument("config: activity_prob outside [0,1]");
    if (lr0 <= 0 || lr1_factor <= 0) throw std::invalid_argument("config: bad learning rates");
    if (condition_number != 0.0 && condition_number < 1.0)
      throw std::invalid_argument("config: condition_number must be >= 1 (or 0 to disable)");
  }
};

}  // namespace jadce

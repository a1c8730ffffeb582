#include <catch2/catch_amalgamated.hpp>

#include "jadce/training.hpp"

using namespace jadce;

namespace {

Dataset gaussian_dataset(long count, uint64_t seed, double snr = 15.0) {
  ExperimentConfig cfg;
  cfg.l = 6;
  cfg.n = 10;
  cfg.m = 2;
  cfg.snr_db = snr;
  cfg.activity_prob = 0.25;
  cfg.seed = seed;
  return synth_dataset(cfg, count, 0);
}

// Noiseless observations through an orthonormal (lifted-unitary) system:
// the ideal layer reproduces the truth exactly, so training should push the
// thresholds to (nearly) zero and the error far down. The preamble is a pure
// function of `seed`; `salt` varies only the samples, so train/validation
// splits share the system they are solving.
Dataset unitary_dataset(long count, uint64_t seed, uint64_t salt) {
  Rng rng(seed);
  const CMat a = rng.cnormal_matrix(6, 6);
  const Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ();
  Dataset ds;
  ds.preamble.entries = q;
  ds.preamble.kind = PreambleKind::custom;
  ds.s_tilde = lift_matrix(q);
  ds.m = 2;
  ds.snr_db = std::numeric_limits<double>::infinity();
  ds.activity_prob = 0.3;
  ds.seed = seed;
  for (long i = 0; i < count; ++i) {
    const GroupSparseSignal sig =
        gen_signal(6, ds.m, ds.activity_prob,
                   derive_seed(derive_seed(seed, 5000 + salt), static_cast<uint64_t>(i)));
    const Mat xt = lift_stack(sig.entries);
    ds.x.push_back(xt);
    ds.z.push_back(Mat::Zero(ds.s_tilde.rows(), ds.m));
    ds.y.push_back(ds.s_tilde * xt);
    ds.activity.push_back(sig.activity);
  }
  return ds;
}

double final_loss(const Dataset& ds, const NetParams& p) {
  const Mat xk =
      forward(p, ds.s_tilde, ds.y_stack(), Mat(), p.k_layers, ds.m).iterates.back();
  return (xk - ds.x_stack()).squaredNorm() / static_cast<double>(ds.p());
}

}  // namespace

TEST_CASE("one layer trains in exactly two stages") {
  const Dataset ds = gaussian_dataset(4, 11);
  TrainSchedule sched;
  sched.steps_per_phase = 5;
  const TrainResult r = train_layerwise(Arch::lista_gscp, ds, 1, 5e-4, sched, &ds);
  REQUIRE(r.log.stages.size() == 2);
  REQUIRE(r.log.stages[0].stage == 1);
  REQUIRE(r.log.stages[0].phase == 'A');
  REQUIRE(r.log.stages[1].stage == 1);
  REQUIRE(r.log.stages[1].phase == 'B');
  REQUIRE(r.log.stages[0].losses.size() == 6);  // 5 pre-step + 1 final
  REQUIRE_FALSE(r.log.diverged);
  REQUIRE(std::isfinite(r.log.stages[1].val_nmse_db));
}

TEST_CASE("the fine-tune phase starts from the greedy phase's endpoint") {
  const Dataset ds = gaussian_dataset(4, 12);
  TrainSchedule sched;
  sched.steps_per_phase = 8;
  const TrainResult r = train_layerwise(Arch::lista_gscp, ds, 2, 5e-4, sched);
  // phase B's first recorded loss is phase A's final loss, bit for bit
  REQUIRE(r.log.stages[1].losses.front() == r.log.stages[0].losses.back());
  REQUIRE(r.log.stages[3].losses.front() == r.log.stages[2].losses.back());
}

TEST_CASE("training lowers the loss relative to the untrained network") {
  const Dataset ds = gaussian_dataset(8, 13);
  TrainSchedule sched;
  sched.steps_per_phase = 60;
  for (Arch arch : {Arch::lista_gs, Arch::lista_gscp, Arch::alista_gs}) {
    const Mat w_pgd = pgd_weight(ds.s_tilde).w;
    const NetParams untrained = init_params(
        arch, ds.s_tilde, 3, arch == Arch::alista_gs ? &w_pgd : nullptr);
    const TrainResult r = train_layerwise(arch, ds, 3, 5e-4, sched, nullptr,
                                          arch == Arch::alista_gs ? &w_pgd : nullptr);
    REQUIRE_FALSE(r.log.diverged);
    REQUIRE(final_loss(ds, r.params) < final_loss(ds, untrained));
  }
}

TEST_CASE("an easy noiseless system trains to a deep error floor") {
  const Dataset ds = unitary_dataset(16, 21, 0);
  const Dataset val = unitary_dataset(8, 21, 1);
  const TrainResult r = train_layerwise(Arch::lista_gscp, ds, 2, 5e-4, {}, &val);
  REQUIRE_FALSE(r.log.diverged);
  REQUIRE(r.log.stages.back().val_nmse_db <= -40.0);
  // thresholds head towards zero on a noiseless problem
  for (double th : r.params.theta) REQUIRE(th < 0.05);
}

TEST_CASE("loss blow-up is flagged instead of thrown and keeps the partial log") {
  const Dataset ds = gaussian_dataset(4, 14);
  TrainSchedule sched;
  sched.steps_per_phase = 10;
  const TrainResult r = train_layerwise(Arch::lista_gscp, ds, 2, 1e200, sched);
  REQUIRE(r.log.diverged);
  REQUIRE_FALSE(r.log.divergence_note.empty());
  REQUIRE_FALSE(r.log.stages.empty());
}

TEST_CASE("training rejects bad arguments") {
  const Dataset ds = gaussian_dataset(2, 15);
  REQUIRE_THROWS_AS(train_layerwise(Arch::lista_gscp, ds, 0, 5e-4),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(train_layerwise(Arch::lista_gscp, ds, 2, 0.0),
                    std::invalid_argument);
}

TEST_CASE("adam leaves parameters untouched under zero gradients") {
  const Dataset ds = gaussian_dataset(2, 16);
  NetParams p = init_params(Arch::lista_gscp, ds.s_tilde, 2);
  const NetParams before = p;
  AdamState st(p);
  const NetGrads zeros = zero_grads_like(p);
  for (int i = 0; i < 5; ++i) adam_step(st, zeros, p, 1e-3);
  REQUIRE(p.theta == before.theta);
  for (size_t i = 0; i < p.w.size(); ++i)
    REQUIRE((p.w[i] - before.w[i]).norm() == 0.0);
}

TEST_CASE("adam's warmed-up step magnitude approaches the learning rate") {
  const Dataset ds = gaussian_dataset(2, 17);
  NetParams p = init_params(Arch::alista_gs, ds.s_tilde, 1, nullptr, 1e6);
  // huge theta so the clamp never interferes; constant gradient of 1
  NetGrads g = zero_grads_like(p);
  g.gamma[0] = 1.0;
  AdamState st(p);
  const double lr = 1e-3;
  double prev = p.gamma[0];
  double delta = 0.0;
  for (int i = 0; i < 500; ++i) {
    adam_step(st, g, p, lr);
    delta = prev - p.gamma[0];
    prev = p.gamma[0];
  }
  REQUIRE(delta == Catch::Approx(lr).epsilon(0.01));
}

TEST_CASE("thresholds are clamped at zero") {
  const Dataset ds = gaussian_dataset(2, 18);
  NetParams p = init_params(Arch::lista_gscp, ds.s_tilde, 1, nullptr, 1e-6);
  NetGrads g = zero_grads_like(p);
  g.theta[0] = 1.0;  // pushes theta negative immediately
  AdamState st(p);
  adam_step(st, g, p, 0.1);
  REQUIRE(p.theta[0] == 0.0);
}

#include <catch2/catch_amalgamated.hpp>

#include "jadce/metrics.hpp"
#include "jadce/signal_model.hpp"

using namespace jadce;

TEST_CASE("primality helpers") {
  REQUIRE(detail::is_prime(2));
  REQUIRE(detail::is_prime(23));
  REQUIRE_FALSE(detail::is_prime(1));
  REQUIRE_FALSE(detail::is_prime(21));
  REQUIRE(detail::next_prime(2) == 2);
  REQUIRE(detail::next_prime(20) == 23);
  REQUIRE(detail::next_prime(24) == 29);
  REQUIRE(detail::next_prime(90) == 97);
}

TEST_CASE("binary preamble entries are plus or minus one over sqrt L") {
  const PreambleMatrix p = gen_preamble(PreambleKind::binary, 4, 6, 9);
  REQUIRE(p.kind == PreambleKind::binary);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      REQUIRE(p.entries(i, j).imag() == 0.0);
      REQUIRE(std::abs(std::abs(p.entries(i, j).real()) - 0.5) < 1e-15);
    }
  for (Eigen::Index j = 0; j < 6; ++j)
    REQUIRE(p.entries.col(j).norm() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("gaussian preamble is column normalized and seed deterministic") {
  const PreambleMatrix a = gen_preamble(PreambleKind::gaussian, 8, 16, 5);
  const PreambleMatrix b = gen_preamble(PreambleKind::gaussian, 8, 16, 5);
  const PreambleMatrix c = gen_preamble(PreambleKind::gaussian, 8, 16, 6);
  REQUIRE((a.entries - b.entries).norm() == 0.0);
  REQUIRE((a.entries - c.entries).norm() > 0.0);
  for (Eigen::Index j = 0; j < 16; ++j)
    REQUIRE(a.entries.col(j).norm() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("zadoff-chu bank has constant modulus columns and strict coherence") {
  const PreambleMatrix p = gen_preamble(PreambleKind::zadoff_chu, 16, 24, 0);
  for (Eigen::Index j = 0; j < 24; ++j) {
    REQUIRE(p.entries.col(j).norm() == Catch::Approx(1.0).margin(1e-12));
    for (Eigen::Index i = 0; i < 16; ++i)
      REQUIRE(std::abs(p.entries(i, j)) == Catch::Approx(0.25).margin(1e-12));
  }
  REQUIRE(mutual_coherence(p.entries) < 1.0 - 1e-6);
}

TEST_CASE("zadoff-chu first column is the unshifted root-one sequence") {
  // L = 5 -> N_zc = 5; entry k of the first (root 1, shift 0) column is
  // exp(-i pi k (k+1) / 5) / sqrt(5).
  const PreambleMatrix p = gen_preamble(PreambleKind::zadoff_chu, 5, 4, 0);
  const double inv = 1.0 / std::sqrt(5.0);
  for (Eigen::Index k = 0; k < 5; ++k) {
    const double phase = -M_PI * static_cast<double>(k * (k + 1)) / 5.0;
    const cplx expect = inv * cplx(std::cos(phase), std::sin(phase));
    REQUIRE(std::abs(p.entries(k, 0) - expect) < 1e-12);
  }
}

TEST_CASE("zadoff-chu bank refuses to exceed its root-shift budget") {
  // L = 4 -> N_zc = 5 -> at most (5-1)*5 = 20 columns
  REQUIRE_NOTHROW(gen_preamble(PreambleKind::zadoff_chu, 4, 20, 0));
  REQUIRE_THROWS_AS(gen_preamble(PreambleKind::zadoff_chu, 4, 21, 0),
                    std::invalid_argument);
}

TEST_CASE("preamble generation rejects degenerate shapes and custom kind") {
  REQUIRE_THROWS_AS(gen_preamble(PreambleKind::gaussian, 1, 4, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(gen_preamble(PreambleKind::custom, 4, 8, 0),
                    std::invalid_argument);
}

TEST_CASE("signal activity frequency matches the Bernoulli rate") {
  const GroupSparseSignal sig = gen_signal(10000, 2, 0.1, 31);
  long active = 0;
  for (uint8_t a : sig.activity) active += a;
  REQUIRE(std::abs(static_cast<double>(active) / 10000.0 - 0.1) < 0.02);
  // inactive rows are exactly zero; active rows are not
  for (Eigen::Index i = 0; i < 200; ++i) {
    if (sig.activity[static_cast<size_t>(i)])
      REQUIRE(sig.entries.row(i).norm() > 0.0);
    else
      REQUIRE(sig.entries.row(i).norm() == 0.0);
  }
}

TEST_CASE("noise calibration hits the requested SNR exactly") {
  Rng rng(8);
  const CMat clean = rng.cnormal_matrix(12, 6);
  for (double snr : {0.0, 7.5, 15.0, 30.0}) {
    const CMat z = gen_noise_for_snr(clean, snr, 99);
    REQUIRE(snr_empirical(clean, z) == Catch::Approx(snr).margin(1e-9));
  }
  const CMat z_inf =
      gen_noise_for_snr(clean, std::numeric_limits<double>::infinity(), 99);
  REQUIRE(z_inf.norm() == 0.0);
  REQUIRE_THROWS_AS(gen_noise_for_snr(CMat::Zero(3, 3), 10.0, 1),
                    std::invalid_argument);
}

TEST_CASE("instances are deterministic in the seed and differ across seeds") {
  const PreambleMatrix p = gen_preamble(PreambleKind::gaussian, 8, 16, 5);
  const ProblemInstance a = make_instance(p, 4, 0.2, 12.0, 100);
  const ProblemInstance b = make_instance(p, 4, 0.2, 12.0, 100);
  const ProblemInstance c = make_instance(p, 4, 0.2, 12.0, 101);
  REQUIRE((a.observation - b.observation).norm() == 0.0);
  REQUIRE((a.observation - c.observation).norm() > 0.0);
}

TEST_CASE("the observation equation holds in complex and lifted form") {
  const PreambleMatrix p = gen_preamble(PreambleKind::zadoff_chu, 8, 12, 0);
  const ProblemInstance inst = make_instance(p, 3, 0.3, 10.0, 7);
  REQUIRE((inst.observation - p.entries * inst.signal.entries - inst.noise)
              .norm() < 1e-12);
  const RealLiftedSystem sys = lift_to_real(inst);
  REQUIRE((sys.y_tilde - sys.s_tilde * sys.x_tilde - sys.z_tilde).norm() < 1e-12);
}

TEST_CASE("lifting produces the two-by-two real block structure") {
  Rng rng(61);
  const CMat s = rng.cnormal_matrix(3, 5);
  const Mat st = lift_matrix(s);
  REQUIRE(st.rows() == 6);
  REQUIRE(st.cols() == 10);
  REQUIRE((st.topLeftCorner(3, 5) - s.real()).norm() == 0.0);
  REQUIRE((st.topRightCorner(3, 5) + s.imag()).norm() == 0.0);
  REQUIRE((st.bottomLeftCorner(3, 5) - s.imag()).norm() == 0.0);
  REQUIRE((st.bottomRightCorner(3, 5) - s.real()).norm() == 0.0);
}

TEST_CASE("lifted products reproduce complex products") {
  Rng rng(62);
  const CMat s = rng.cnormal_matrix(4, 7);
  const CMat x = rng.cnormal_matrix(7, 3);
  const Mat prod = lift_matrix(s) * lift_stack(x);
  const CMat back = unlift_stack(prod);
  REQUIRE((back - s * x).norm() < 1e-13);
}

TEST_CASE("stack lifting round-trips exactly") {
  Rng rng(63);
  const CMat x = rng.cnormal_matrix(9, 4);
  REQUIRE((unlift_stack(lift_stack(x)) - x).norm() == 0.0);
}

TEST_CASE("lifted preamble column pairs are orthogonal") {
  const PreambleMatrix p = gen_preamble(PreambleKind::gaussian, 6, 10, 3);
  const Mat st = lift_matrix(p.entries);
  for (Eigen::Index j = 0; j < 10; ++j) {
    REQUIRE(std::abs(st.col(j).dot(st.col(10 + j))) < 1e-14);
    REQUIRE(st.col(j).norm() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(st.col(10 + j).norm() == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("device activity couples lifted row pairs") {
  const GroupSparseSignal sig = gen_signal(50, 3, 0.3, 77);
  const Mat xt = lift_stack(sig.entries);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const bool act = sig.activity[static_cast<size_t>(i)] != 0;
    const double pair_norm =
        std::sqrt(xt.row(i).squaredNorm() + xt.row(50 + i).squaredNorm());
    if (act)
      REQUIRE(pair_norm > 0.0);
    else
      REQUIRE(pair_norm == 0.0);
  }
}

TEST_CASE("an all-idle signal degenerates to pure noise") {
  const PreambleMatrix p = gen_preamble(PreambleKind::gaussian, 6, 10, 3);
  const ProblemInstance inst = make_instance(p, 2, 0.0, 10.0, 5);
  REQUIRE(inst.signal.entries.norm() == 0.0);
  REQUIRE((inst.observation - inst.noise).norm() == 0.0);
  REQUIRE(inst.noise.norm() > 0.0);
}

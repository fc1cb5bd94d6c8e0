#include <doctest.h>

#include <cmath>

#include "dmin_oracle.hpp"
#include "mcp/error.hpp"
#include "mcp/precoder.hpp"
#include "support.hpp"
#include "waterfilling.hpp"

using namespace mcp;

namespace {

const CMatrix kEye = CMatrix::Identity(2, 2);

JointAlphabet bpsk2() { return enumerate_joint(testing::bpsk(2)); }

bool is_diagonal(const CMatrix& p, double tol) {
  return std::abs(p(0, 1)) <= tol && std::abs(p(1, 0)) <= tol;
}

oracle::Mat2 to_mat2(const CMatrix& m) {
  oracle::Mat2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = m(i, j);
  return r;
}

}  // namespace

TEST_CASE("trace normalization") {
  auto rng = make_substream(1, 0);
  const CMatrix p = testing::random_complex(rng, 3);
  CHECK(normalize_trace(p, 2.5).squaredNorm() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK_THROWS_AS(normalize_trace(CMatrix::Zero(2, 2), 1.0), Error);
}

TEST_CASE("minimum distance of the reference matrices") {
  const VirtualChannel vc(testing::section7_channel(), 1.0);
  const JointAlphabet a = bpsk2();
  CHECK(std::abs(d_min(vc, testing::p_tpc(), a) - std::sqrt(6.0)) < 1e-12);
  CHECK(std::abs(d_min(vc, testing::p_star(), a) - std::sqrt(8.0)) < 1e-12);
  CHECK(std::abs(d_min(vc, testing::p_utpc(), a) - 2.0) < 1e-12);
  CHECK(std::abs(d_min(VirtualChannel(kEye, 1.0), kEye, a) - 2.0) < 1e-12);

  // against the brute-force loops
  auto rng = make_substream(2, 0);
  for (int k = 0; k < 20; ++k) {
    const CMatrix h = testing::random_complex(rng, 2);
    const CMatrix p = testing::random_complex(rng, 2);
    const double o = oracle::dmin_2x2(to_mat2(h * p), oracle::bpsk_pairs());
    CHECK(d_min(VirtualChannel(h, 3.0), p, a) == doctest::Approx(o).epsilon(1e-12));
  }
}

TEST_CASE("high-snr bound") {
  const VirtualChannel vc(testing::section7_channel(), 10.0);
  const JointAlphabet a = bpsk2();
  CHECK(highsnr_bound(vc, testing::p_star(), a, 1e6) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(highsnr_bound(vc, testing::p_star(), a, 10.0) > highsnr_bound(vc, testing::p_tpc(), a, 10.0));
  // monotone in d_min once d^2 snr is past the knee
  double prev = -1e300;
  for (double s = 0.8; s <= 3.0; s += 0.1) {
    const double b = highsnr_bound(VirtualChannel(kEye, 10.0), (s / 2.0) * kEye, a, 10.0);
    CHECK(b > prev);
    prev = b;
  }
  CHECK_THROWS_AS(highsnr_bound(vc, CMatrix::Zero(2, 2), a, 10.0), Error);
}

TEST_CASE("fixed-point step") {
  const VirtualChannel vc(kEye, 2.0);
  PrecoderMatrix p{CMatrix::Zero(2, 2), 1.0};
  p.p(0, 0) = 0.9;
  p.p(1, 1) = 0.4;
  p.p = normalize_trace(p.p, 1.0);
  PrecoderMatrix cur = p;
  for (int k = 0; k < 400; ++k) {
    const PrecoderMatrix next = fixed_point_step(vc, cur, mmse_gaussian(vc, cur.p).e);
    CHECK(is_diagonal(next.p, 1e-15));
    CHECK(next.power() == doctest::Approx(1.0).epsilon(1e-12));
    cur = next;
  }
  const PrecoderMatrix again = fixed_point_step(vc, cur, mmse_gaussian(vc, cur.p).e);
  CHECK((again.p - cur.p).norm() / cur.p.norm() <= 1e-6);

  const VirtualChannel zero(CMatrix::Zero(2, 2), 1.0);
  CHECK_THROWS_AS(fixed_point_step(zero, p, kEye), Error);
}

TEST_CASE("decomposition") {
  SUBCASE("diagonal positive P on the identity channel") {
    CMatrix p = CMatrix::Zero(2, 2);
    p(0, 0) = 0.8;
    p(1, 1) = 0.3;
    const VirtualChannel vc(kEye, 1.0);
    const PrecoderDecomposition d = decompose({p, 1.0}, vc, mmse_gaussian(vc, p).e);
    CHECK(d.reconstruction_error < 1e-12);
    CHECK(d.u_mismatch < 1e-12);
    CHECK((d.r - kEye).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.d(0) == doctest::Approx(0.8));
    CHECK(d.d(1) == doctest::Approx(0.3));
  }
  SUBCASE("the rotation precoder is a scaled rotation") {
    const VirtualChannel vc(testing::section7_channel(), 10.0);
    const CMatrix p = testing::p_star();
    const PrecoderDecomposition d = decompose({p, 2.0}, vc, mmse_gaussian(vc, p).e);
    CHECK(d.reconstruction_error < 1e-12);
    CHECK(d.d(0) == doctest::Approx(1.0));
    CHECK(d.d(1) == doctest::Approx(1.0));
    // R^H equals P for U = V_H = I: a 45 degree rotation
    CHECK(std::abs(std::abs(d.r(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(std::abs(d.r(0, 1)) - 1.0 / std::sqrt(2.0)) < 1e-12);
  }
  SUBCASE("random precoders reconstruct") {
    auto rng = make_substream(3, 0);
    for (int k = 0; k < 100; ++k) {
      const VirtualChannel vc(testing::random_complex(rng, 2), 1.0);
      const CMatrix p = testing::random_complex(rng, 2);
      const PrecoderDecomposition d = decompose({p, p.squaredNorm()}, vc, mmse_gaussian(vc, p).e);
      CHECK(d.reconstruction_error <= 1e-9);
    }
  }
}

TEST_CASE("high-snr optimizer on the reference channel") {
  const VirtualChannel vc(testing::section7_channel(), 10.0);
  HighSnrParams hp;
  hp.trace_budget = 2.0;
  hp.restarts = 4;
  const HighSnrResult r = optimize_precoder_highsnr(vc, bpsk2(), hp);
  CHECK(r.dmin >= std::sqrt(8.0) - 1e-3);
  CHECK_FALSE(is_diagonal(r.p.p, 1e-6));
  CHECK(r.max_trace_deviation <= 1e-9);
  for (double t : r.trace_history) CHECK(std::abs(t - 2.0) <= 1e-9);
  CHECK(r.dmin == doctest::Approx(d_min(vc, r.p.p, bpsk2())).epsilon(1e-12));

  const oracle::RandomSearchResult rs = oracle::random_search_dmin(to_mat2(vc.h()), 2.0, 200000, 99);
  CHECK(r.dmin >= rs.dmin - 1e-2);

  // thread count does not change the answer
  HighSnrParams threaded = hp;
  threaded.threads = 3;
  const HighSnrResult r3 = optimize_precoder_highsnr(vc, bpsk2(), threaded);
  CHECK((r3.p.p - r.p.p).norm() == 0.0);
}

TEST_CASE("high-snr optimizer on the identity channel") {
  HighSnrParams hp;
  hp.restarts = 4;
  const VirtualChannel vc(kEye, 10.0);
  const HighSnrResult r = optimize_precoder_highsnr(vc, bpsk2(), hp);
  CHECK(r.dmin >= std::sqrt(2.0) - 1e-12);
  const oracle::RandomSearchResult rs = oracle::random_search_dmin(to_mat2(kEye), 1.0, 200000, 7);
  CHECK(r.dmin >= rs.dmin - 1e-2);
}

TEST_CASE("low-snr optimal precoder") {
  const VirtualChannel vc(testing::section7_channel(), 0.01);
  const PrecoderMatrix p = lowsnr_optimal_precoder(vc, 0.01);
  CHECK(std::abs(std::abs(p.p(0, 0)) - 1.0) < 1e-12);
  CHECK(p.p.col(1).norm() < 1e-12);
  CHECK(p.p.row(1).norm() < 1e-12);
  const LowSnrMiExpansion ex = lowsnr_mi_expansion(vc, p.p);
  CHECK(ex.first == doctest::Approx(3.0));
  CHECK(ex.first == doctest::Approx((vc.h() * p.p * (vc.h() * p.p).adjoint()).trace().real()).epsilon(1e-15));

  const PrecoderMatrix tie = lowsnr_optimal_precoder(VirtualChannel(kEye, 0.01), 0.01);
  CHECK(tie.power() == doctest::Approx(1.0));
  CHECK(std::abs(tie.p(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(tie.p(1, 1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("algorithm 2 with gaussian inputs waterfills") {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = std::sqrt(3.0);
  h(1, 1) = 1.0;
  const double snr = 1.0;
  const VirtualChannel vc(h, snr);
  const PrecoderMatrix init{svd_initial_precoder(vc, RVector::Constant(2, 0.5)), 1.0};
  Algorithm2Params ap;
  ap.tol = 1e-9;
  const Algorithm2Result r = algorithm2_solve(vc, init, testing::gaussian(2), ap);
  CHECK(r.converged);
  CHECK(is_diagonal(r.p.p, 1e-12));
  const std::vector<double> wf = oracle::waterfill({3.0, 1.0}, snr, 1.0);
  CHECK(std::norm(r.p.p(0, 0)) == doctest::Approx(wf[0]).epsilon(1e-4));
  CHECK(std::norm(r.p.p(1, 1)) == doctest::Approx(wf[1]).epsilon(1e-4));
  CHECK(r.mi_nats == doctest::Approx(oracle::parallel_gaussian_mi({3.0, 1.0}, wf, snr)).epsilon(1e-8));
  for (const PrecoderIterate& it : r.trace) CHECK(it.trace == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("algorithm 2 with bpsk beats the power-only precoder") {
  const VirtualChannel vc(testing::section7_channel(), 10.0);
  const PrecoderMatrix init{svd_initial_precoder(vc, RVector::Constant(2, 1.0)), 2.0};
  Algorithm2Params ap;
  ap.integrator = Integrator::gauss_hermite(32);
  const Algorithm2Result r = algorithm2_solve(vc, init, testing::bpsk(2), ap);
  const double tpc = mi_discrete(vc, testing::p_tpc(), bpsk2(), ap.integrator).nats;
  CHECK(r.converged);
  CHECK(r.mi_nats >= tpc);
  CHECK(r.p.power() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("algorithm 2 with a vanishing step stays at the start") {
  auto rng = make_substream(4, 0);
  const VirtualChannel vc(testing::random_real(rng, 2), 1.0);
  const PrecoderMatrix init{normalize_trace(testing::random_real(rng, 2), 1.0), 1.0};
  Algorithm2Params ap;
  ap.step = 1e-9;
  ap.integrator = Integrator::gauss_hermite(16);
  const Algorithm2Result r = algorithm2_solve(vc, init, testing::bpsk(2), ap);
  CHECK((r.p.p - init.p).norm() < 1e-8);
}

TEST_CASE("transmit weights superpose to H P x") {
  auto rng = make_substream(5, 0);
  const VirtualChannel vc(testing::random_complex(rng, 2), 1.0);
  const CMatrix p = testing::random_complex(rng, 2);
  const TransmitWeights w = transmit_weights(vc, p);
  const JointAlphabet a = bpsk2();
  for (const CVector& x : a.vectors) CHECK((w.superpose(vc.h(), x) - vc.h() * p * x).norm() < 1e-9);
  CHECK((w.printed - vc.h() * p).norm() < 1e-15);
  CHECK(std::abs(w.cross_x1_to_bs2 - (vc.h() * p)(1, 0)) < 1e-15);
  CHECK(std::abs(w.cross_x2_to_bs1 - (vc.h() * p)(0, 1)) < 1e-15);

  // identity channel, V_H = I: each BS sends its own symbol
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = std::sqrt(0.5);
  d(1, 1) = std::sqrt(0.5);
  const TransmitWeights wi = transmit_weights(VirtualChannel(kEye, 1.0), d);
  CHECK(std::abs(wi.radiated(0, 1)) == 0.0);
  CHECK(std::abs(wi.radiated(1, 0)) == 0.0);
  CHECK(wi.radiated(0, 0).real() == doctest::Approx(std::sqrt(0.5)));
  CHECK((wi.nu - kEye).norm() < 1e-15);
}

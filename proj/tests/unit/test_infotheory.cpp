#include <doctest.h>

#include <cmath>

#include "bpsk_oracle.hpp"
#include "finite_difference.hpp"
#include "mcp/error.hpp"
#include "mcp/infotheory.hpp"
#include "support.hpp"

using namespace mcp;

namespace {

const CMatrix kEye = CMatrix::Identity(2, 2);

JointAlphabet bpsk2() { return enumerate_joint(testing::bpsk(2)); }

}  // namespace

TEST_CASE("gaussian mutual information") {
  CHECK(mi_gaussian(VirtualChannel(kEye, 1.0), kEye).nats == doctest::Approx(std::log(4.0)));
  CHECK(mi_gaussian(VirtualChannel(kEye, 1.0), kEye).bits == doctest::Approx(2.0));
  CHECK(mi_gaussian(VirtualChannel(kEye, 0.0), kEye).nats == 0.0);
  CHECK(mi_gaussian(VirtualChannel(testing::ones(2), 1.0), kEye).nats == doctest::Approx(std::log(5.0)));
}

TEST_CASE("conditional mean") {
  const JointAlphabet one = enumerate_joint(testing::bpsk(1));
  CVector y(1);
  y << cd(0.3, -0.7);

  SUBCASE("zero channel returns the prior mean") {
    CHECK(std::abs(conditional_mean(y, CMatrix::Zero(1, 1), one)(0)) < 1e-15);
    const CVector y2 = CVector::Constant(2, cd(0.4, 0.1));
    CHECK(conditional_mean(y2, CMatrix::Zero(2, 2), bpsk2()).norm() < 1e-15);
  }
  SUBCASE("siso bpsk is tanh(2 sqrt(snr) Re y)") {
    for (double snr : {0.1, 1.0, 3.0}) {
      const CMatrix g = CMatrix::Constant(1, 1, cd(std::sqrt(snr), 0));
      const cd xh = conditional_mean(y, g, one)(0);
      CHECK(xh.real() == doctest::Approx(std::tanh(2.0 * std::sqrt(snr) * y(0).real())));
      CHECK(std::abs(xh.imag()) < 1e-15);
    }
  }
  SUBCASE("strong channel recovers the symbol") {
    const JointAlphabet a = bpsk2();
    const CMatrix g = 50.0 * testing::ones(2) + 30.0 * kEye;
    auto rng = make_substream(3, 0);
    for (const CVector& x : a.vectors) {
      const CVector yy = g * x + 0.01 * sample_noise(2, rng);
      CHECK((conditional_mean(yy, g, a) - x).norm() < 1e-6);
    }
  }
}

TEST_CASE("mmse matrix identities") {
  const Integrator gh = Integrator::gauss_hermite(32);
  const MmseReport r0 = mmse_matrix(VirtualChannel(testing::ones(2), 0.0), kEye, bpsk2(), gh);
  CHECK((r0.e - kEye).norm() < 1e-10);
  CHECK(r0.method == EstimateMethod::Quadrature);

  // siso against the direct Boost.Math integral
  const JointAlphabet one = enumerate_joint(testing::bpsk(1));
  const CMatrix p1 = CMatrix::Identity(1, 1);
  for (double snr : {0.1, 1.0, 10.0}) {
    const VirtualChannel vc(CMatrix::Identity(1, 1), snr);
    const InfoMmse q = mi_and_mmse(effective(vc, p1), one, Integrator::gauss_hermite(128));
    CHECK(std::abs(q.mmse.e(0, 0).real() - oracle::bpsk_mmse(snr)) < 1e-6);
    CHECK(std::abs(q.mi.nats - oracle::bpsk_mi(snr)) < 1e-6);
  }
}

TEST_CASE("error floor of the all-unity channel") {
  const Integrator gh = Integrator::gauss_hermite(32);
  const double snr = db_to_linear(30.0);
  const MmseReport diag = mmse_matrix(VirtualChannel(kEye, snr), kEye, bpsk2(), gh);
  CHECK(diag.trace() < 0.02);
  // each user is unresolvable whenever x1 = -x2, half the time
  const MmseReport inter = mmse_matrix(VirtualChannel(testing::ones(2), snr), kEye, bpsk2(), gh);
  CHECK(inter.per_user_mmse(0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(inter.per_user_mmse(1) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(inter.trace() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("discrete mutual information values") {
  const Integrator gh = Integrator::gauss_hermite(32);
  CHECK(std::abs(mi_discrete(VirtualChannel(kEye, 0.0), kEye, bpsk2(), gh).bits) < 1e-10);
  const double snr = db_to_linear(20.0);
  CHECK(mi_discrete(VirtualChannel(kEye, snr), kEye, bpsk2(), gh).bits == doctest::Approx(2.0).epsilon(0.01));
  CHECK(mi_discrete(VirtualChannel(testing::ones(2), snr), kEye, bpsk2(), gh).bits ==
        doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("monte carlo agrees with quadrature and ignores thread count") {
  const VirtualChannel vc(testing::ones(2), 2.0);
  const double q = mi_discrete(vc, kEye, bpsk2(), Integrator::gauss_hermite(32)).nats;
  const MiEstimate m1 = mi_discrete(vc, kEye, bpsk2(), Integrator::monte_carlo(50000, 9, 1));
  const MiEstimate m3 = mi_discrete(vc, kEye, bpsk2(), Integrator::monte_carlo(50000, 9, 3));
  CHECK(m1.nats == m3.nats);
  CHECK(m1.std_error > 0);
  CHECK(std::abs(m1.nats - q) < 4.0 * m1.std_error);
  CHECK_THROWS_AS(Integrator::monte_carlo(10, 1).validate(), Error);
  CHECK_THROWS_AS(Integrator::gauss_hermite(2).validate(), Error);
}

TEST_CASE("gradient convention") {
  // SISO Gaussian, h = p = snr = 1: E = 1/2, d/dp ln(1 + p^2) = 1
  const CMatrix one = CMatrix::Identity(1, 1);
  const VirtualChannel vc(one, 1.0);
  const MmseReport e = mmse_gaussian(vc, one);
  CHECK(e.e(0, 0).real() == doctest::Approx(0.5));
  const CMatrix g = mi_gradient(vc, one, e);
  CHECK(g(0, 0).real() == doctest::Approx(0.5));
  const double fd = oracle::central_difference(
      [&](double p) { return mi_gaussian(vc, CMatrix::Constant(1, 1, cd(p, 0))).nats; }, 1.0, 1e-6);
  CHECK(fd == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fd / g(0, 0).real() == doctest::Approx(kRealParameterGradientFactor));

  CHECK(mi_gradient(VirtualChannel(kEye, 0.0), kEye, mmse_gaussian(VirtualChannel(kEye, 0.0), kEye)).norm() == 0.0);
}

TEST_CASE("bpsk gradient matches finite differences") {
  const Integrator gh = Integrator::gauss_hermite(24);
  auto rng = make_substream(17, 0);
  const CMatrix h = testing::random_real(rng, 2);
  const CMatrix p = 0.8 * testing::random_real(rng, 2);
  const VirtualChannel vc(h, 1.0);
  const JointAlphabet a = bpsk2();
  const CMatrix g = mi_gradient(vc, p, mmse_matrix(vc, p, a, gh));
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double fd = oracle::central_difference(
          [&](double t) {
            CMatrix q = p;
            q(i, j) = t;
            return mi_discrete(vc, q, a, gh).nats;
          },
          p(i, j).real(), 1e-5);
      CHECK(std::abs(fd - kRealParameterGradientFactor * g(i, j).real()) < 1e-3);
    }
  }
}

TEST_CASE("lmmse estimator") {
  CVector y(1);
  y << cd(2.0, 0);
  CHECK(lmmse_estimate(y, VirtualChannel(CMatrix::Identity(1, 1), 1.0), CMatrix::Identity(1, 1))(0).real() ==
        doctest::Approx(1.0));
  const CVector y2 = CVector::Constant(2, cd(1.0, 2.0));
  CHECK(lmmse_estimate(y2, VirtualChannel(kEye, 0.0), kEye).norm() == 0.0);

  // error covariance of the linear filter equals (I + G^H G)^{-1}
  auto rng = make_substream(4, 0);
  const VirtualChannel vc(testing::random_complex(rng, 2), 1.7);
  const CMatrix p = testing::random_complex(rng, 2);
  const CMatrix g = effective(vc, p);
  CMatrix w(2, 2);
  for (Eigen::Index k = 0; k < 2; ++k) w.col(k) = lmmse_estimate(CVector::Unit(2, k), vc, p);
  const CMatrix a = kEye - w * g;
  const CMatrix cov = a * a.adjoint() + w * w.adjoint();
  CHECK((cov - (kEye + g.adjoint() * g).inverse()).norm() < 1e-10);
  CHECK((mmse_gaussian(vc, p).e - cov).norm() < 1e-10);
}

TEST_CASE("bpsk siso closed forms") {
  CHECK(bpsk_siso_mmse(0.0) == 1.0);
  CHECK(bpsk_siso_mi(0.0) == 0.0);
  CHECK(bpsk_siso_mmse(4.0) >= oracle::bpsk_error_probability(4.0));
  CHECK(oracle::bpsk_error_probability(4.0) == doctest::Approx(2.339e-3).epsilon(1e-3));
  CHECK(nats_to_bits(bpsk_siso_mi(db_to_linear(30.0))) == doctest::Approx(1.0).epsilon(1e-9));
  for (double snr : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    CHECK(std::abs(bpsk_siso_mmse(snr) - oracle::bpsk_mmse(snr)) < 1e-7);
    CHECK(std::abs(bpsk_siso_mi(snr) - oracle::bpsk_mi(snr)) < 1e-7);
  }
  for (double snr : {0.5, 1.0, 2.0}) {
    const double d = oracle::central_difference([](double s) { return bpsk_siso_mi(s); }, snr, 1e-4);
    CHECK(std::abs(d - bpsk_siso_mmse(snr)) < 1e-5);
  }
  CHECK(qpsk_siso_mi(1.0) == doctest::Approx(2.0 * bpsk_siso_mi(1.0)));
  CHECK_THROWS_AS(bpsk_siso_mi(-1.0), Error);
}

TEST_CASE("low-snr expansions") {
  const LowSnrMmseExpansion id = lowsnr_mmse_expansion(VirtualChannel(kEye, 0.1), kEye);
  CHECK(id.trace_zeroth == doctest::Approx(2.0));
  CHECK(id.trace_first == doctest::Approx(2.0));
  const LowSnrMmseExpansion s7 = lowsnr_mmse_expansion(VirtualChannel(testing::section7_channel(), 0.1), kEye);
  CHECK(s7.trace_zeroth == doctest::Approx(4.0));
  CHECK(s7.trace_first == doctest::Approx(10.0));

  const LowSnrMiExpansion mi = lowsnr_mi_expansion(VirtualChannel(kEye, 0.1), kEye);
  CHECK(mi.first == doctest::Approx(2.0));
  CHECK(mi.second == doctest::Approx(2.0));
  CHECK(mi.evaluate(0.0) == 0.0);
  // Taylor of 2 ln(1 + snr)
  const double snr = 1e-3;
  CHECK(std::abs(mi.evaluate(snr) - 2.0 * std::log1p(snr)) < 1e-9);

  // second-order error, unit-energy proper input
  auto rng = make_substream(8, 0);
  const CMatrix h = testing::random_complex(rng, 2);
  const JointAlphabet q = enumerate_joint(std::vector<Constellation>(2, Constellation::qpsk(true)));
  double err[2];
  int k = 0;
  for (double s : {1e-2, 1e-3}) {
    const VirtualChannel vc(h, s);
    const LowSnrMmseExpansion ex = lowsnr_mmse_expansion(vc, kEye);
    err[k++] = (mmse_matrix(vc, kEye, q, Integrator::gauss_hermite(16)).e - (ex.zeroth + s * ex.first)).norm();
  }
  CHECK(err[0] / err[1] > 100.0 / 3.0);
  CHECK(err[0] / err[1] < 300.0);

  // first coefficient does not depend on the input
  const VirtualChannel vc(h, 1e-3);
  const double g = mi_gaussian(vc, kEye).nats / 1e-3;
  const double b = mi_discrete(vc, kEye, bpsk2(), Integrator::gauss_hermite(16)).nats / 1e-3;
  CHECK(std::abs(b - g) / g < 1e-2);
}

TEST_CASE("rate region bounds") {
  const Integrator gh = Integrator::gauss_hermite(32);
  const std::vector<Constellation> in = testing::bpsk(2);
  const RateRegionBounds z = rate_region_bounds(VirtualChannel(kEye, 0.0), kEye, in, gh);
  CHECK(std::abs(z.joint.nats) < 1e-10);
  for (const auto& m : z.per_user) CHECK(std::abs(m.nats) < 1e-10);

  CMatrix d = kEye;
  d(0, 0) = 1.5;
  const RateRegionBounds r = rate_region_bounds(VirtualChannel(d, 2.0), kEye, in, gh);
  CHECK(r.joint.nats == doctest::Approx(r.per_user[0].nats + r.per_user[1].nats).epsilon(1e-9));

  const RateRegionBounds u = rate_region_bounds(VirtualChannel(testing::ones(2), 10.0), kEye, in, gh);
  CHECK(u.chain_holds);
  CHECK(u.sum_min.nats < u.joint.nats);
}

TEST_CASE("input dispatch") {
  const Integrator gh = Integrator::gauss_hermite(16);
  const VirtualChannel vc(kEye, 1.0);
  const InfoMmse g = evaluate_inputs(vc, kEye, testing::gaussian(2), gh);
  CHECK(g.mi.nats == doctest::Approx(std::log(4.0)));
  CHECK(g.mmse.method == EstimateMethod::ClosedFormGaussian);
  const std::vector<Constellation> mixed{Constellation::gaussian(), Constellation::bpsk()};
  CHECK_THROWS_AS(evaluate_inputs(vc, kEye, mixed, gh), Error);
  CHECK_THROWS_AS(evaluate_inputs(vc, kEye, testing::bpsk(3), gh), Error);
}

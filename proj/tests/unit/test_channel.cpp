#include <doctest.h>

#include <cmath>

#include "mcp/channel.hpp"
#include "mcp/error.hpp"
#include "support.hpp"

using namespace mcp;

TEST_CASE("effective channel") {
  const CMatrix eye = CMatrix::Identity(2, 2);
  CHECK((effective(VirtualChannel(eye, 4.0), eye) - 2.0 * eye).norm() < 1e-15);
  CHECK(effective(VirtualChannel(eye, 0.0), eye).norm() == 0.0);

  const CMatrix g = effective(VirtualChannel(testing::section7_channel(), 1.0), testing::p_tpc());
  CHECK(g(0, 0).real() == doctest::Approx(std::sqrt(1.5)));
  CHECK(g(1, 1).real() == doctest::Approx(std::sqrt(1.5)));
  CHECK(std::abs(g(0, 1)) < 1e-15);
  CHECK(std::abs(g(1, 0)) < 1e-15);
}

TEST_CASE("row-major construction and validation") {
  const std::vector<cd> e{cd(1), cd(2), cd(3), cd(4)};
  const VirtualChannel vc = VirtualChannel::from_row_major(e, 2.0);
  CHECK(vc.h()(0, 1) == cd(2));
  CHECK(vc.h()(1, 0) == cd(3));
  CHECK(vc.snr() == 2.0);
  CHECK_THROWS_AS(VirtualChannel::from_row_major(std::vector<cd>{cd(1), cd(2), cd(3)}, 1.0), Error);
  CHECK_THROWS_AS(VirtualChannel(CMatrix::Identity(2, 2), -1.0), Error);
  CHECK_THROWS_AS(VirtualChannel(CMatrix::Zero(2, 3), 1.0), Error);
  CHECK_THROWS_AS(effective(vc, CMatrix::Identity(3, 3)), Error);
}

TEST_CASE("power allocation feasibility") {
  RVector caps(2);
  caps << 1.0, 0.5;
  RVector ok(2);
  ok << 1.0, 0.25;
  const PowerAllocation a(ok, caps);
  CHECK(a.amplitudes()(1, 1).real() == doctest::Approx(0.5));
  RVector bad(2);
  bad << 1.0, 0.6;
  CHECK_THROWS_AS(PowerAllocation(bad, caps), Error);
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
  CHECK(linear_to_db(100.0) == doctest::Approx(20.0));
}

TEST_CASE("zero channel gives pure noise and seeds reproduce") {
  const CMatrix g0 = CMatrix::Zero(2, 2);
  CVector x(2);
  x << 1.0, 1.0;
  auto r1 = make_substream(5, 0);
  auto r2 = make_substream(5, 0);
  const CVector y = sample_output(g0, x, r1);
  const CVector n = sample_noise(2, r2);
  CHECK((y - n).norm() == 0.0);

  auto a = make_substream(11, 3);
  auto b = make_substream(11, 3);
  const CMatrix eye = CMatrix::Identity(2, 2);
  CHECK((sample_output(eye, x, a) - sample_output(eye, x, b)).norm() == 0.0);

  auto c = make_substream(11, 4);
  auto d = make_substream(11, 3);
  CHECK((sample_noise(2, c) - sample_noise(2, d)).norm() > 0.0);
}

TEST_CASE("noise covariance is the identity") {
  auto rng = make_substream(2024, 0);
  const CMatrix eye = CMatrix::Identity(2, 2);
  CVector x(2);
  x << 1.0, 1.0;
  CMatrix cov = CMatrix::Zero(2, 2);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const CVector z = sample_output(eye, x, rng) - x;
    cov += z * z.adjoint();
  }
  cov /= n;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(cov(i, j) - eye(i, j)) < 0.02);
}

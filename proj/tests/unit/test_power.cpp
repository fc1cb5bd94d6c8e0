#include <doctest.h>

#include <cmath>

#include "mcp/error.hpp"
#include "mcp/power.hpp"
#include "power_grid.hpp"
#include "support.hpp"

using namespace mcp;

namespace {

RVector vec2(double a, double b) {
  RVector v(2);
  v << a, b;
  return v;
}

PowerSolveParams quad_params(std::size_t nodes = 16) {
  PowerSolveParams p;
  p.integrator = Integrator::gauss_hermite(nodes);
  return p;
}

}  // namespace

TEST_CASE("gaussian closed case returns the caps") {
  auto rng = make_substream(1, 0);
  const VirtualChannel vc(testing::random_complex(rng, 2), 3.0);
  for (const RVector& q : {vec2(1, 1), vec2(2, 0.5)}) {
    const PowerSolution s = solve_power_gaussian(vc, q);
    CHECK((s.powers - q).norm() == 0.0);
    CHECK(s.active_caps == std::vector<bool>{true, true});
    CHECK(s.converged);
  }
  const PowerSolution z = solve_power_gaussian(VirtualChannel(CMatrix::Zero(2, 2), 1.0), vec2(1, 1));
  CHECK((z.powers - vec2(1, 1)).norm() == 0.0);
  CHECK_THROWS_AS(solve_power_gaussian(vc, vec2(-1, 1)), Error);
}

TEST_CASE("kkt residual") {
  auto rng = make_substream(2, 0);
  const VirtualChannel vc(testing::random_complex(rng, 2), 2.0);
  const RVector q = vec2(1.0, 0.7);
  const CMatrix p = amplitude_matrix(q);
  const CMatrix e = (CMatrix::Identity(2, 2) + vc.snr() * p.adjoint() * vc.h().adjoint() * vc.h() * p).inverse();
  const KktReport k = kkt_report(vc, q, q, e);
  CHECK(k.multipliers.minCoeff() > 0.0);
  CHECK(std::abs(kkt_residual(vc, p, e, k.multipliers).real().norm()) < 1e-10);
  CHECK(k.residual < 1e-10);

  SUBCASE("zero channel leaves lambda sqrt(P)") {
    const VirtualChannel z(CMatrix::Zero(2, 2), 1.0);
    const CVector r = kkt_residual(z, p, e, vec2(0.3, 2.0));
    CHECK(r(0).real() == doctest::Approx(0.3 * 1.0));
    CHECK(r(1).real() == doctest::Approx(2.0 * std::sqrt(0.7)));
  }
  SUBCASE("silent user 1: user 2 sits at its cap") {
    const RVector tdm = vec2(0.0, q(1));
    const CMatrix pt = amplitude_matrix(tdm);
    const CMatrix et = (CMatrix::Identity(2, 2) + vc.snr() * pt.adjoint() * vc.h().adjoint() * vc.h() * pt).inverse();
    const KktReport kt = kkt_report(vc, tdm, q, et);
    CHECK(kt.active_caps[1]);
    CHECK(kt.multipliers(1) > 0.0);
    CHECK(std::abs(kkt_residual(vc, pt, et, kt.multipliers)(1).real()) < 1e-10);
  }
  CHECK_THROWS_AS(kkt_residual(vc, p, e, RVector::Ones(3)), Error);
}

TEST_CASE("algorithm 1 with gaussian inputs reaches the caps") {
  auto rng = make_substream(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const VirtualChannel vc(testing::random_complex(rng, 2), 1.0 + trial);
    const PowerSolution s = algorithm1_solve(vc, vec2(1, 1), testing::gaussian(2), PowerSolveParams{});
    CHECK(s.converged);
    CHECK((s.powers - vec2(1, 1)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(s.residual < 1e-6);
    // closed-form objective never drops
    for (std::size_t k = 1; k < s.trace.size(); ++k) CHECK(s.trace[k].mi_nats >= s.trace[k - 1].mi_nats);
  }
}

TEST_CASE("algorithm 1 degenerate and silent caps") {
  const VirtualChannel vc(testing::ones(2) + CMatrix::Identity(2, 2), 2.0);
  const PowerSolution s = algorithm1_solve(vc, vec2(0, 1), testing::bpsk(2), quad_params());
  CHECK(s.powers(0) == 0.0);
  CHECK(s.powers(1) == doctest::Approx(1.0).epsilon(1e-9));
  const PowerSolution g = algorithm1_solve(vc, vec2(0, 1), testing::gaussian(2), PowerSolveParams{});
  CHECK(g.powers(0) == 0.0);
  CHECK(g.powers(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("algorithm 1 stays feasible") {
  auto rng = make_substream(4, 0);
  const VirtualChannel vc(testing::random_real(rng, 2), 4.0);
  const RVector q = vec2(0.8, 1.3);
  for (UpdateRule rule : {UpdateRule::ProjectedGradient, UpdateRule::AsPrinted}) {
    PowerSolveParams p = quad_params();
    p.update = rule;
    p.max_iters = 60;
    const PowerSolution s = algorithm1_solve(vc, q, testing::bpsk(2), p);
    for (const PowerIterate& it : s.trace) {
      CHECK(it.powers.minCoeff() >= 0.0);
      CHECK((q - it.powers).minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("algorithm 1 bpsk on the identity channel: caps bind") {
  const VirtualChannel vc(CMatrix::Identity(2, 2), db_to_linear(5.0));
  const PowerSolution s = algorithm1_solve(vc, vec2(1, 1), testing::bpsk(2), quad_params());
  CHECK(s.converged);
  CHECK((s.powers - vec2(1, 1)).norm() < 1e-6);
  CHECK(s.active_caps == std::vector<bool>{true, true});
}

TEST_CASE("algorithm 1 symmetric channel gives equal powers") {
  const VirtualChannel vc(0.7 * testing::ones(2), 3.0);
  const PowerSolution s = algorithm1_solve(vc, vec2(1, 1), testing::bpsk(2), quad_params());
  CHECK(s.powers(0) == doctest::Approx(s.powers(1)).epsilon(1e-6));
}

TEST_CASE("algorithm 1 agrees with a 50x50 grid search") {
  auto rng = make_substream(5, 0);
  const Integrator gh = Integrator::gauss_hermite(16);
  const JointAlphabet a = enumerate_joint(testing::bpsk(2));
  const RVector q = vec2(1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const VirtualChannel vc(testing::random_real(rng, 2), 2.0);
    const PowerSolution s = algorithm1_solve(vc, q, testing::bpsk(2), quad_params());
    const auto grid = oracle::power_grid_search(q(0), q(1), 50, [&](double p1, double p2) {
      return mi_discrete(vc, amplitude_matrix(vec2(p1, p2)), a, gh).bits;
    });
    CHECK(nats_to_bits(s.mi_nats) >= grid.value - 1e-2);
  }
}

TEST_CASE("mercury waterfilling form") {
  auto rng = make_substream(6, 0);
  const VirtualChannel vc(testing::random_complex(rng, 2), 1.5);
  const RVector q = vec2(1.0, 0.6);
  const MmseReport e = mmse_gaussian(vc, amplitude_matrix(q));
  const KktReport k = kkt_report(vc, q, q, e.e);
  const MercuryTerms t = mercury_waterfilling_form(vc, q, e, k.multipliers);
  CHECK(((t.mmse_terms + t.cov_terms) - q).norm() < 1e-10);

  // independent users: no cross-covariance
  CMatrix d = CMatrix::Identity(2, 2);
  d(1, 1) = 0.5;
  const VirtualChannel dv(d, db_to_linear(20.0));
  const MmseReport ed = mmse_matrix(dv, amplitude_matrix(q), enumerate_joint(testing::bpsk(2)), Integrator::gauss_hermite(16));
  const MercuryTerms td = mercury_waterfilling_form(dv, q, ed, vec2(1, 1));
  CHECK(td.cov_terms.norm() < 1e-12);

  CHECK_THROWS_AS(mercury_waterfilling_form(vc, vec2(0, 1), e, vec2(1, 1)), Error);
  try {
    mercury_waterfilling_form(vc, vec2(0, 1), e, vec2(1, 1));
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::ZeroPowerCase);
  }
}

TEST_CASE("parameter validation") {
  PowerSolveParams p;
  p.tol = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = PowerSolveParams{};
  p.max_iters = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  const VirtualChannel vc(CMatrix::Identity(2, 2), 1.0);
  CHECK_THROWS_AS(algorithm1_solve(vc, vec2(1, 1), testing::bpsk(3), PowerSolveParams{}), Error);
}

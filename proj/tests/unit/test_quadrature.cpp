#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcp/quadrature.hpp"

using namespace mcp;

TEST_CASE("gauss-hermite weights, symmetry and moments") {
  for (std::size_t n : {8u, 20u, 32u, 128u, 200u, 400u}) {
    const GaussHermiteRule r = gauss_hermite(n);
    REQUIRE(r.nodes.size() == n);
    double sum = 0;
    for (double w : r.weights) sum += w;
    CHECK(sum == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(r.nodes[i] < r.nodes[i + 1]);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.nodes[i] + r.nodes[n - 1 - i]) < 1e-10);
  }
  // exact for polynomials of degree < 2n: int t^(2k) e^(-t^2) = Gamma(k + 1/2)
  const GaussHermiteRule r = gauss_hermite(10);
  for (int k = 0; k < 10; ++k) {
    double acc = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::pow(r.nodes[i], 2 * k);
    CHECK(acc == doctest::Approx(std::tgamma(k + 0.5)).epsilon(1e-11));
  }
}

TEST_CASE("tensor grid is normalized to N(0, I/2)") {
  const TensorGrid g = tensor_grid(12, 2);
  CHECK(g.dims == 2);
  double w = 0, m2x = 0, m2y = 0, mxy = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double* p = g.point(k);
    w += g.weights[k];
    m2x += g.weights[k] * p[0] * p[0];
    m2y += g.weights[k] * p[1] * p[1];
    mxy += g.weights[k] * p[0] * p[1];
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m2x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m2y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(mxy) < 1e-14);
}

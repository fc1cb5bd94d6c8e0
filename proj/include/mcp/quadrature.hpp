#pragma once

#include <cstddef>
#include <vector>

namespace mcp {

/// Gauss-Hermite rule for the weight exp(-t^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes in ascending order, from the eigen-decomposition of the Jacobi
/// matrix of the Hermite recurrence. Weights sum to sqrt(pi).
GaussHermiteRule gauss_hermite(std::size_t n);

/// Tensor product of one rule over `dims` dimensions, normalized so that
/// sum(w) approximates E[f(t)] for t ~ N(0, I/2) (the real and imaginary parts
/// of CN(0, I) noise). Points whose normalized weight falls below
/// `prune_below` are dropped.
struct TensorGrid {
  std::size_t dims = 0;
  std::vector<double> points;  // row-major, dims per point
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t k) const { return points.data() + k * dims; }
};

TensorGrid tensor_grid(std::size_t nodes_per_dim, std::size_t dims, double prune_below = 1e-16);

}  // namespace mcp

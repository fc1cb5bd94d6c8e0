#include "mcp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mcp/error.hpp"

namespace mcp {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix
// of the Hermite recurrence, weights sqrt(pi) times the squared first
// components of the normalized eigenvectors.
GaussHermiteRule compute_rule(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 0; k + 1 < m; ++k) sub(k) = std::sqrt(0.5 * static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite eigen solve failed");
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (Eigen::Index i = 0; i < m; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);  // ascending
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = sqrt_pi * v0 * v0;
  }
  // symmetrize away rounding
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite rule needs at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, GaussHermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

TensorGrid tensor_grid(std::size_t nodes_per_dim, std::size_t dims, double prune_below) {
  if (dims == 0) throw Error(ErrorCode::InvalidArgument, "tensor grid needs at least one dimension");
  const GaussHermiteRule rule = gauss_hermite(nodes_per_dim);
  const double norm = 1.0 / std::sqrt(std::numbers::pi);
  std::vector<double> w1(rule.weights.size());
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] = rule.weights[i] * norm;

  TensorGrid grid;
  grid.dims = dims;
  std::vector<std::size_t> idx(dims, 0);
  const std::size_t n = nodes_per_dim;
  bool done = false;
  while (!done) {
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) w *= w1[idx[d]];
    if (w >= prune_below) {
      grid.weights.push_back(w);
      for (std::size_t d = 0; d < dims; ++d) grid.points.push_back(rule.nodes[idx[d]]);
    }
    std::size_t d = dims;
    while (true) {
      if (d == 0) {
        done = true;
        break;
      }
      --d;
      if (++idx[d] < n) break;
      idx[d] = 0;
    }
  }
  return grid;
}

}  // namespace mcp

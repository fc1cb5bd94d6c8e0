#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mcp/channel.hpp"
#include "mcp/constellation.hpp"
#include "mcp/types.hpp"

namespace testing {

inline mcp::CMatrix random_complex(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01(0.0, std::sqrt(0.5));
  mcp::CMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = mcp::cd(n01(rng), n01(rng));
  return h;
}

inline mcp::CMatrix random_real(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  mcp::CMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = n01(rng);
  return h;
}

inline mcp::CMatrix section7_channel() {
  mcp::CMatrix h = mcp::CMatrix::Zero(2, 2);
  h(0, 0) = std::sqrt(3.0);
  h(1, 1) = 1.0;
  return h;
}

inline mcp::CMatrix p_star() {
  const double s = 1.0 / std::sqrt(2.0);
  mcp::CMatrix p(2, 2);
  p << s, s, -s, s;
  return p;
}

inline mcp::CMatrix p_tpc() {
  mcp::CMatrix p = mcp::CMatrix::Zero(2, 2);
  p(0, 0) = 1.0 / std::sqrt(2.0);
  p(1, 1) = std::sqrt(1.5);
  return p;
}

inline mcp::CMatrix p_utpc() { return mcp::CMatrix::Identity(2, 2); }

inline mcp::CMatrix ones(Eigen::Index n) { return mcp::CMatrix::Constant(n, n, mcp::cd(1.0, 0.0)); }

inline std::vector<mcp::Constellation> bpsk(std::size_t users) {
  return std::vector<mcp::Constellation>(users, mcp::Constellation::bpsk());
}

inline std::vector<mcp::Constellation> gaussian(std::size_t users) {
  return std::vector<mcp::Constellation>(users, mcp::Constellation::gaussian());
}

}  // namespace testing

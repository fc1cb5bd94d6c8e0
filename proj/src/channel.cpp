#include "mcp/channel.hpp"

#include <cmath>

#include "mcp/error.hpp"

namespace mcp {

VirtualChannel::VirtualChannel(CMatrix h, double snr) : h_(std::move(h)), snr_(snr) {
  if (h_.rows() < 1 || h_.rows() != h_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "channel matrix must be square with n >= 1");
  }
  if (!h_.allFinite()) throw Error(ErrorCode::InvalidArgument, "channel entries must be finite");
  if (!(snr_ >= 0.0) || !std::isfinite(snr_)) {
    throw Error(ErrorCode::InvalidArgument, "snr must be finite and non-negative");
  }
}

VirtualChannel VirtualChannel::from_row_major(std::span<const cd> entries, double snr) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
  if (n < 1 || static_cast<std::size_t>(n * n) != entries.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row-major channel needs n*n entries");
  }
  CMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = entries[static_cast<std::size_t>(i * n + j)];
  return {std::move(h), snr};
}

PowerAllocation::PowerAllocation(RVector powers, RVector caps)
    : powers_(std::move(powers)), caps_(std::move(caps)) {
  if (powers_.size() != caps_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "powers and caps differ in length");
  }
  for (Eigen::Index i = 0; i < powers_.size(); ++i) {
    if (!(caps_(i) >= 0.0)) throw Error(ErrorCode::InvalidArgument, "caps must be non-negative");
    if (!(powers_(i) >= 0.0) || powers_(i) > caps_(i)) {
      throw Error(ErrorCode::InvalidArgument, "powers must satisfy 0 <= P_i <= Q_i");
    }
  }
}

CMatrix PowerAllocation::amplitudes() const { return amplitude_matrix(powers_); }

CMatrix amplitude_matrix(const RVector& powers) {
  CMatrix a = CMatrix::Zero(powers.size(), powers.size());
  for (Eigen::Index i = 0; i < powers.size(); ++i) a(i, i) = std::sqrt(std::max(0.0, powers(i)));
  return a;
}

CMatrix effective(const VirtualChannel& vc, const CMatrix& p) {
  if (p.rows() != vc.h().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "precoder rows must match channel columns");
  }
  return std::sqrt(vc.snr()) * (vc.h() * p);
}

std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6d63u};
  return std::mt19937_64(seq);
}

CVector sample_noise(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    z(i) = cd(re, im);
  }
  return z;
}

CVector sample_output(const CMatrix& g, const CVector& x, std::mt19937_64& rng) {
  if (x.size() != g.cols()) throw Error(ErrorCode::DimensionMismatch, "input length must match G columns");
  return g * x + sample_noise(g.rows(), rng);
}

}  // namespace mcp

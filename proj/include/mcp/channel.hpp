#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "mcp/types.hpp"

namespace mcp {

/// Square gain matrix plus received snr. Row i collects what receiver (BS) i
/// hears: y = sqrt(snr) H P x + n, with H(i, j) = h_ij and vec(H) read
/// row-major as [h11, h12, h21, h22].
class VirtualChannel {
 public:
  VirtualChannel(CMatrix h, double snr);

  /// Entries in row-major order; `entries.size()` must be a perfect square.
  static VirtualChannel from_row_major(std::span<const cd> entries, double snr);

  const CMatrix& h() const { return h_; }
  double snr() const { return snr_; }
  Eigen::Index size() const { return h_.rows(); }
  VirtualChannel with_snr(double snr) const { return {h_, snr}; }

 private:
  CMatrix h_;
  double snr_;
};

/// Per-user transmit powers for the uplink. The precoder view is the diagonal
/// amplitude matrix diag(sqrt(P_i)).
class PowerAllocation {
 public:
  PowerAllocation(RVector powers, RVector caps);

  const RVector& powers() const { return powers_; }
  const RVector& caps() const { return caps_; }
  RVector amplitude_vector() const { return powers_.cwiseSqrt(); }
  CMatrix amplitudes() const;

 private:
  RVector powers_;
  RVector caps_;
};

/// Diagonal amplitude matrix for a vector of powers.
CMatrix amplitude_matrix(const RVector& powers);

/// G = sqrt(snr) H P.
CMatrix effective(const VirtualChannel& vc, const CMatrix& p);

/// Independent RNG stream derived from (seed, index). Used to split Monte
/// Carlo work into blocks whose results do not depend on how blocks are
/// scheduled.
std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t index);

/// CN(0, I) vector: each real and imaginary part has variance 1/2.
CVector sample_noise(Eigen::Index n, std::mt19937_64& rng);

/// y = G x + n.
CVector sample_output(const CMatrix& g, const CVector& x, std::mt19937_64& rng);

}  // namespace mcp

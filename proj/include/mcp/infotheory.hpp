#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mcp/channel.hpp"
#include "mcp/constellation.hpp"
#include "mcp/types.hpp"

namespace mcp {

enum class EstimateMethod { ClosedFormGaussian, Quadrature, MonteCarlo };

std::string_view to_string(EstimateMethod method);

/// How expectations over the channel noise are evaluated.
///
/// GaussHermite tensorizes a rule over the real and imaginary parts of the
/// noise and is exact up to quadrature error; it is meant for at most two
/// receive dimensions. MonteCarlo draws (x, n) pairs in fixed-size blocks, each
/// block from its own stream derived from `seed`, so the estimate does not
/// depend on `threads`. Auto picks quadrature for n_r <= 2 and Monte Carlo
/// otherwise.
struct Integrator {
  enum class Kind { GaussHermite, MonteCarlo, Auto };

  Kind kind = Kind::Auto;
  std::size_t nodes = 32;
  std::size_t samples = 200000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  static constexpr std::size_t kMinNodes = 8;
  static constexpr std::size_t kMinSamples = 1000;
  static constexpr std::size_t kMaxQuadratureReceiveDims = 2;
  static constexpr std::size_t kBlockSize = 4096;

  static Integrator gauss_hermite(std::size_t nodes = 32);
  static Integrator monte_carlo(std::size_t samples, std::uint64_t seed, std::size_t threads = 1);
  static Integrator automatic(std::uint64_t seed = 1);

  /// Throws IntegratorBudgetTooSmall when below the node/sample floor.
  void validate() const;
  /// Concrete kind for a given number of receive dimensions.
  Kind resolve(Eigen::Index receive_dims) const;
};

struct MiEstimate {
  double nats = 0.0;
  double bits = 0.0;
  double std_error = 0.0;  // nats; 0 for deterministic methods

  static MiEstimate from_nats(double nats, double std_error = 0.0);
  double std_error_bits() const { return nats_to_bits(std_error); }
};

/// MMSE matrix E = E[(x - E[x|y])(x - E[x|y])^H] and its pieces.
struct MmseReport {
  CMatrix e;
  RVector per_user_mmse;
  std::vector<cd> cross_cov;  // off-diagonal entries, row-major (E12, E21 for two users)
  RVector diag_std_error;     // zero for deterministic methods
  EstimateMethod method = EstimateMethod::ClosedFormGaussian;
  std::size_t samples_or_nodes = 0;

  double trace() const { return per_user_mmse.sum(); }
};

struct InfoMmse {
  MiEstimate mi;
  MmseReport mmse;
};

/// ln det(I + G G^H) with G = sqrt(snr) H P.
MiEstimate mi_gaussian(const VirtualChannel& vc, const CMatrix& p);
/// (I + G^H G)^{-1}, the MMSE matrix for unit-power complex Gaussian inputs.
MmseReport mmse_gaussian(const VirtualChannel& vc, const CMatrix& p);

/// Posterior mean of x given y for y = G x + CN(0, I).
CVector conditional_mean(const CVector& y, const CMatrix& g, const JointAlphabet& alphabet);

/// One integration pass yielding both the mutual information and the MMSE
/// matrix for a finite alphabet through an arbitrary effective channel G
/// (n_r x n_t).
InfoMmse mi_and_mmse(const CMatrix& g, const JointAlphabet& alphabet, const Integrator& integ);

MmseReport mmse_matrix(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet,
                       const Integrator& integ);
MiEstimate mi_discrete(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet,
                       const Integrator& integ);

/// Dispatch on the input model: closed forms when every user is Gaussian,
/// the finite-alphabet integrator otherwise. Mixed inputs are rejected.
InfoMmse evaluate_inputs(const VirtualChannel& vc, const CMatrix& p,
                         std::span<const Constellation> inputs, const Integrator& integ);

/// Complex gradient dI/dP^* = snr H^H H P E. The derivative with respect to
/// the real (imaginary) part of P_ij is kRealParameterGradientFactor times the
/// real (imaginary) part of the returned entry.
CMatrix mi_gradient(const VirtualChannel& vc, const CMatrix& p, const MmseReport& mmse);
constexpr double kRealParameterGradientFactor = 2.0;

/// Wiener filter x_hat = G^H (I + G G^H)^{-1} y.
CVector lmmse_estimate(const CVector& y, const VirtualChannel& vc, const CMatrix& p);

/// BPSK over a scalar complex AWGN channel (noise variance 1/2 per real
/// dimension), by Gauss-Hermite quadrature over the real output.
double bpsk_siso_mmse(double snr, std::size_t nodes = 128);
/// Nats. Saturates at ln 2.
double bpsk_siso_mi(double snr, std::size_t nodes = 128);
/// QPSK with points +-1 +-j: two independent BPSK components at the same snr.
double qpsk_siso_mi(double snr, std::size_t nodes = 128);

/// E ~ zeroth + first * snr and MMSE(snr) ~ trace_zeroth - trace_first * snr
/// for unit-energy proper inputs.
struct LowSnrMmseExpansion {
  CMatrix zeroth;
  CMatrix first;
  double trace_zeroth = 0.0;  // Tr{HP (HP)^H}
  double trace_first = 0.0;   // Tr{(HP (HP)^H)^2}
};
LowSnrMmseExpansion lowsnr_mmse_expansion(const VirtualChannel& vc, const CMatrix& p);

/// I(snr) ~ first * snr - second * snr^2 / 2.
struct LowSnrMiExpansion {
  double first = 0.0;
  double second = 0.0;

  double evaluate(double snr) const { return first * snr - 0.5 * second * snr * snr; }
};
LowSnrMiExpansion lowsnr_mi_expansion(const VirtualChannel& vc, const CMatrix& p);

/// Achievable-rate bounds of the cooperative uplink.
struct RateRegionBounds {
  std::vector<MiEstimate> per_user;      // I(x_i; y_i | x_others)
  std::vector<MiEstimate> per_receiver;  // I(x; y_j)
  MiEstimate sum_min;                    // min_j I(x; y_j)
  MiEstimate joint;                      // I(x; y)
  bool chain_holds = true;               // sum_min <= joint up to 3 std errors
};
RateRegionBounds rate_region_bounds(const VirtualChannel& vc, const CMatrix& p,
                                    std::span<const Constellation> inputs, const Integrator& integ);

}  // namespace mcp

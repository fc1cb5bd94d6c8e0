#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mcp/channel.hpp"
#include "mcp/constellation.hpp"
#include "mcp/infotheory.hpp"
#include "mcp/power.hpp"
#include "mcp/types.hpp"

namespace mcp {

struct PrecoderMatrix {
  CMatrix p;
  double trace_budget = 1.0;

  /// Tr{P P^H}
  double power() const { return p.squaredNorm(); }
};

/// Rescale so that Tr{P P^H} = budget. ZeroUpdate for the zero matrix.
CMatrix normalize_trace(const CMatrix& p, double budget);

/// Right singular vectors of H, columns ordered by decreasing singular value
/// and phase-normalized so each column's largest entry is real positive.
CMatrix channel_right_singular_vectors(const CMatrix& h);

/// V_H diag(sqrt(powers)).
CMatrix svd_initial_precoder(const VirtualChannel& vc, const RVector& powers);

/// H^H H P E normalized and rescaled to the trace budget.
PrecoderMatrix fixed_point_step(const VirtualChannel& vc, const PrecoderMatrix& p, const CMatrix& e);

/// P = U diag(d) R^H with U aligned to V_H and R compared against the
/// eigenvectors of E.
struct PrecoderDecomposition {
  CMatrix u;
  RVector d;
  CMatrix r;
  /// Column k of R is matched to eigenvector permutation[k] of E.
  std::vector<std::size_t> permutation;
  double reconstruction_error = 0.0;  // ||U D R^H - P||_F
  double u_mismatch = 0.0;            // ||U - V_H||_F
  double r_mismatch = 0.0;            // ||R - U_E Pi Phi||_F, best phases Phi
};
PrecoderDecomposition decompose(const PrecoderMatrix& p, const VirtualChannel& vc, const CMatrix& e);

/// min over distinct joint symbols of ||H P (x_i - x_j)||, without snr.
double d_min(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet);

/// ln M - exp(-d^2 snr / 4) / (M d snr) * (sqrt(pi) - (4.37 + 2 sqrt(pi)) / (d^2 snr)), nats.
double highsnr_bound(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet, double snr);

enum class PrecoderField { Real, Complex };

struct HighSnrParams {
  double snr = 10.0;
  std::size_t restarts = 8;
  double step = 0.1;  // initial trial step on the unit-norm direction
  std::size_t max_iters = 2000;
  double tol = 1e-13;
  /// 0 uses the exact near-active pair set; > 0 weights pairs by a soft-min.
  double beta = 0.0;
  double trace_budget = 1.0;
  PrecoderField field = PrecoderField::Real;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

struct HighSnrResult {
  PrecoderMatrix p;
  double dmin = 0.0;
  double bound = 0.0;  // nats at params.snr
  std::size_t best_restart = 0;
  std::size_t iterations = 0;  // of the best restart
  /// Tr{P P^H} and d_min after each iterate of the best restart.
  std::vector<double> trace_history;
  std::vector<double> dmin_history;
  /// Largest trace deviation seen over all restarts and iterates.
  double max_trace_deviation = 0.0;
  bool improved = true;  // false when no restart beat its own start
};

/// Ascent on the minimum pair distance over {Tr P P^H = budget}. Restart 0
/// starts at V_H sqrt(budget / n); the others at seeded random matrices.
HighSnrResult optimize_precoder_highsnr(const VirtualChannel& vc, const JointAlphabet& alphabet,
                                        const HighSnrParams& params);

/// All budget on the principal eigenvector(s) of H^H H, split equally over
/// ties.
PrecoderMatrix lowsnr_optimal_precoder(const VirtualChannel& vc, double snr, double budget = 1.0);

struct Algorithm2Params {
  double step = 0.5;
  StepRule step_rule = StepRule::Diminishing;
  UpdateRule update = UpdateRule::ProjectedGradient;
  double printed_lambda = 1.0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  bool backtracking = true;
  Integrator integrator = Integrator::automatic();

  void validate() const;
};

/// Per-BS scalar weights. BS i radiates sum_j radiated(i, j) x_j. The
/// expressions listed per BS in the protocol are printed(i, j) = (H P)(i, j),
/// and the cross terms forwarded between BSs are (H P)(1, 0) for x_1 (BS1 to
/// BS2) and (H P)(0, 1) for x_2 (BS2 to BS1).
struct TransmitWeights {
  CMatrix radiated;
  CMatrix printed;
  cd cross_x1_to_bs2;
  cd cross_x2_to_bs1;
  CMatrix nu;  // V_H used at initialization

  /// Noise-free received vector when the BS transmissions superpose.
  CVector superpose(const CMatrix& h, const CVector& x) const { return h * (radiated * x); }
};

TransmitWeights transmit_weights(const VirtualChannel& vc, const CMatrix& p);

struct PrecoderIterate {
  std::size_t k = 0;
  double mi_nats = 0.0;
  double trace = 0.0;
};

struct Algorithm2Result {
  PrecoderMatrix p;
  TransmitWeights weights;
  std::size_t iterations = 0;
  bool converged = false;
  double mi_nats = 0.0;
  double mi_std_error = 0.0;
  std::vector<PrecoderIterate> trace;
};

/// Gradient ascent on I(x; y) over {Tr P P^H = budget} starting at P_init
/// (budget = Tr of P_init), renormalizing after every step.
Algorithm2Result algorithm2_solve(const VirtualChannel& vc, const PrecoderMatrix& p_init,
                                  std::span<const Constellation> inputs, const Algorithm2Params& params);

}  // namespace mcp

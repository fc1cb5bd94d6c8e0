#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcp/channel.hpp"
#include "mcp/constellation.hpp"
#include "mcp/infotheory.hpp"
#include "mcp/types.hpp"

namespace mcp {

enum class StepRule { Constant, Diminishing };

/// ProjectedGradient: a <- clip(a + t d), d the unit projected gradient of I in
/// amplitude coordinates, t starting at alpha_k.
/// AsPrinted:         a <- clip(alpha_k a + alpha_k lambda [snr H^H H P E]_ii),
/// the literal iteration with a fixed scalar lambda.
enum class UpdateRule { ProjectedGradient, AsPrinted };

struct PowerSolveParams {
  double step = 0.5;  // alpha_0
  StepRule step_rule = StepRule::Diminishing;
  UpdateRule update = UpdateRule::ProjectedGradient;
  double printed_lambda = 1.0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  /// Halve a projected-gradient step until the objective strictly increases;
  /// no improving step above tol counts as convergence.
  bool backtracking = true;
  Integrator integrator = Integrator::automatic();
  /// Starting powers; empty means half of each cap.
  RVector initial_powers;

  void validate() const;
};

struct PowerIterate {
  std::size_t k = 0;
  RVector powers;
  double mi_nats = 0.0;
};

struct PowerSolution {
  RVector powers;
  RVector multipliers;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<bool> active_caps;
  bool converged = false;
  double mi_nats = 0.0;
  std::vector<PowerIterate> trace;
};

/// Gaussian inputs: every user transmits at its cap. Multipliers are taken
/// from the gradient at the caps.
PowerSolution solve_power_gaussian(const VirtualChannel& vc, const RVector& caps);

/// lambda_i sqrt(P_i) - [snr H^H H P E]_ii for the diagonal amplitude matrix
/// P. Zero at a stationary point; the real part is the amplitude-coordinate
/// stationarity defect.
CVector kkt_residual(const VirtualChannel& vc, const CMatrix& p, const CMatrix& e, const RVector& lambda);

/// Fixed-point form for strictly positive powers: P_i = mmse_i + cov_i, where
/// mmse_i = snr (H^H H)_ii P_i E_ii / lambda_i collects the user's own MMSE and
/// cov_i = snr sum_{j != i} (H^H H)_ij sqrt(P_i P_j) E_ji / lambda_i the error
/// cross-covariances.
struct MercuryTerms {
  RVector mmse_terms;
  RVector cov_terms;
};
MercuryTerms mercury_waterfilling_form(const VirtualChannel& vc, const RVector& powers, const MmseReport& mmse,
                                       const RVector& lambda);

/// Iterative uplink allocation. E (and the objective) is re-evaluated every
/// iteration with the same integrator seed, so Monte Carlo runs see common
/// random numbers.
PowerSolution algorithm1_solve(const VirtualChannel& vc, const RVector& caps,
                               std::span<const Constellation> inputs, const PowerSolveParams& params);

/// Multipliers and stationarity residual at a given allocation.
struct KktReport {
  RVector multipliers;
  double residual = 0.0;
  std::vector<bool> active_caps;
};
KktReport kkt_report(const VirtualChannel& vc, const RVector& powers, const RVector& caps, const CMatrix& e);

}  // namespace mcp

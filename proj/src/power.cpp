#include "mcp/power.hpp"

#include <algorithm>
#include <cmath>

#include "mcp/error.hpp"

namespace mcp {

namespace {

constexpr double kCapSlack = 1e-12;

void check_caps(const VirtualChannel& vc, const RVector& caps) {
  if (caps.size() != vc.size()) throw Error(ErrorCode::DimensionMismatch, "one cap per user required");
  for (Eigen::Index i = 0; i < caps.size(); ++i) {
    if (!(caps(i) >= 0.0) || !std::isfinite(caps(i))) {
      throw Error(ErrorCode::InvalidArgument, "caps must be finite and non-negative");
    }
  }
}

// Re [snr H^H H P E]_ii: half the derivative of I with respect to amplitude i.
RVector half_gradient(const VirtualChannel& vc, const RVector& amplitudes, const CMatrix& e) {
  const CMatrix g = vc.snr() * (vc.h().adjoint() * vc.h() * amplitude_matrix(amplitudes.cwiseAbs2()) * e);
  return g.diagonal().real();
}

RVector clip(const RVector& a, const RVector& upper) {
  return a.cwiseMax(0.0).cwiseMin(upper);
}

}  // namespace

void PowerSolveParams::validate() const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  integrator.validate();
}

KktReport kkt_report(const VirtualChannel& vc, const RVector& powers, const RVector& caps, const CMatrix& e) {
  const RVector a = powers.cwiseMax(0.0).cwiseSqrt();
  const RVector g = half_gradient(vc, a, e);
  KktReport r;
  r.multipliers = RVector::Zero(a.size());
  r.active_caps.assign(static_cast<std::size_t>(a.size()), false);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool at_cap = caps(i) > 0.0 && powers(i) >= caps(i) * (1.0 - kCapSlack);
    r.active_caps[static_cast<std::size_t>(i)] = at_cap;
    if (at_cap && a(i) > 0.0) r.multipliers(i) = std::max(0.0, g(i) / a(i));
  }
  const CVector res = kkt_residual(vc, amplitude_matrix(powers), e, r.multipliers);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double defect = std::abs(res(i).real());
    // At zero power the multiplier of P_i >= 0 absorbs a non-positive gradient.
    if (a(i) == 0.0) defect = std::max(0.0, g(i));
    sq += defect * defect;
  }
  r.residual = std::sqrt(sq);
  return r;
}

PowerSolution solve_power_gaussian(const VirtualChannel& vc, const RVector& caps) {
  check_caps(vc, caps);
  PowerSolution s;
  s.powers = caps;
  const CMatrix p = amplitude_matrix(caps);
  const MmseReport e = mmse_gaussian(vc, p);
  const KktReport k = kkt_report(vc, caps, caps, e.e);
  s.multipliers = k.multipliers;
  s.residual = 0.0;
  s.active_caps.assign(static_cast<std::size_t>(caps.size()), true);
  s.converged = true;
  s.mi_nats = mi_gaussian(vc, p).nats;
  return s;
}

CVector kkt_residual(const VirtualChannel& vc, const CMatrix& p, const CMatrix& e, const RVector& lambda) {
  const Eigen::Index n = vc.size();
  if (p.rows() != n || p.cols() != n || e.rows() != n || e.cols() != n || lambda.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "KKT operands disagree in size");
  }
  const CMatrix rhs = vc.snr() * (vc.h().adjoint() * vc.h() * p * e);
  CVector r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = lambda(i) * p(i, i) - rhs(i, i);
  return r;
}

MercuryTerms mercury_waterfilling_form(const VirtualChannel& vc, const RVector& powers, const MmseReport& mmse,
                                       const RVector& lambda) {
  const Eigen::Index n = vc.size();
  if (powers.size() != n || lambda.size() != n || mmse.e.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "mercury/waterfilling operands disagree in size");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(powers(i) > 0.0)) {
      throw Error(ErrorCode::ZeroPowerCase, "a zero power falls under the single-user KKT cases");
    }
    if (!(lambda(i) > 0.0)) throw Error(ErrorCode::InvalidArgument, "multipliers must be positive");
  }
  const CMatrix gram = vc.h().adjoint() * vc.h();
  MercuryTerms t;
  t.mmse_terms = RVector::Zero(n);
  t.cov_terms = RVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.mmse_terms(i) = vc.snr() * gram(i, i).real() * powers(i) * mmse.e(i, i).real() / lambda(i);
    cd cov(0.0, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) cov += gram(i, j) * std::sqrt(powers(i) * powers(j)) * mmse.e(j, i);
    }
    t.cov_terms(i) = vc.snr() * cov.real() / lambda(i);
  }
  return t;
}

PowerSolution algorithm1_solve(const VirtualChannel& vc, const RVector& caps,
                               std::span<const Constellation> inputs, const PowerSolveParams& params) {
  check_caps(vc, caps);
  params.validate();
  if (static_cast<Eigen::Index>(inputs.size()) != vc.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one constellation per user required");
  }
  const RVector upper = caps.cwiseSqrt();
  RVector a;
  if (params.initial_powers.size() == 0) {
    a = (0.5 * caps).cwiseSqrt();
  } else {
    if (params.initial_powers.size() != caps.size()) {
      throw Error(ErrorCode::DimensionMismatch, "initial powers must match caps");
    }
    a = clip(params.initial_powers.cwiseMax(0.0).cwiseSqrt(), upper);
  }

  const auto evaluate = [&](const RVector& amp) {
    return evaluate_inputs(vc, amplitude_matrix(amp.cwiseAbs2()), inputs, params.integrator);
  };

  PowerSolution s;
  InfoMmse current = evaluate(a);
  s.trace.push_back({0, a.cwiseAbs2(), current.mi.nats});
  RVector best_a = a;
  InfoMmse best = current;
  std::size_t k = 1;
  for (; k <= params.max_iters; ++k) {
    const double alpha =
        params.step_rule == StepRule::Diminishing ? params.step / static_cast<double>(k) : params.step;
    const RVector g = half_gradient(vc, a, current.mmse.e);

    RVector next;
    InfoMmse next_eval;
    if (params.update == UpdateRule::AsPrinted) {
      next = clip(alpha * a + alpha * params.printed_lambda * g, upper);
      next_eval = evaluate(next);
    } else {
      // Ascent along the unit projected gradient. Coordinates pinned at a
      // bound with the gradient pointing outward drop out of the direction;
      // near saturation the raw gradient is tiny and unnormalized steps crawl.
      RVector dir = g;
      for (Eigen::Index i = 0; i < dir.size(); ++i) {
        if ((a(i) >= upper(i) && dir(i) > 0.0) || (a(i) <= 0.0 && dir(i) < 0.0)) dir(i) = 0.0;
      }
      const double dn = dir.norm();
      if (dn == 0.0) {
        s.converged = true;
        break;
      }
      dir /= dn;
      double trial = alpha;
      bool stalled = false;
      for (;;) {
        next = clip(a + trial * dir, upper);
        next_eval = evaluate(next);
        if (!params.backtracking || next_eval.mi.nats > current.mi.nats) break;
        trial *= 0.5;
        if (trial < params.tol) {
          stalled = true;
          break;
        }
      }
      if (stalled) {
        s.converged = true;
        break;
      }
    }
    const double moved = (next - a).norm();
    a = next;
    current = std::move(next_eval);
    s.trace.push_back({k, a.cwiseAbs2(), current.mi.nats});
    if (current.mi.nats >= best.mi.nats) {
      best_a = a;
      best = current;
    }
    if (moved <= params.tol) {
      s.converged = true;
      break;
    }
  }
  s.iterations = std::min(k, params.max_iters);
  if (!s.converged) {
    // best iterate so far
    a = best_a;
    current = std::move(best);
  }
  s.powers = a.cwiseAbs2();
  // Clipping at sqrt(Q) can round Q up by an ulp.
  s.powers = s.powers.cwiseMin(caps);
  const KktReport kkt = kkt_report(vc, s.powers, caps, current.mmse.e);
  s.multipliers = kkt.multipliers;
  s.residual = kkt.residual;
  s.active_caps = kkt.active_caps;
  s.mi_nats = current.mi.nats;
  return s;
}

}  // namespace mcp

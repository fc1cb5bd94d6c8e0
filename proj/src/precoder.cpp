#include "mcp/precoder.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "mcp/error.hpp"

namespace mcp {

namespace {

// Re tr(A^H B): the inner product of the real parameter space.
double real_inner(const CMatrix& a, const CMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

// Permutation maximizing sum_k score(k, perm[k]). Exhaustive for small n,
// greedy otherwise; first maximum in lexicographic order wins.
std::vector<std::size_t> best_assignment(const RMatrix& score) {
  const auto n = static_cast<std::size_t>(score.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n <= 8) {
    std::vector<std::size_t> best = perm;
    double best_val = -std::numeric_limits<double>::infinity();
    do {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += score(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(perm[k]));
      if (v > best_val + 1e-12) {
        best_val = v;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> used(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pick = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c]) continue;
      if (pick == n || score(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) >
                           score(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(pick)) + 1e-12) {
        pick = c;
      }
    }
    used[pick] = true;
    perm[k] = pick;
  }
  return perm;
}

RMatrix overlap_scores(const CMatrix& a, const CMatrix& b) {
  return (a.adjoint() * b).cwiseAbs2();
}

void phase_normalize_columns(CMatrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index arg = 0;
    m.col(c).cwiseAbs().maxCoeff(&arg);
    const cd pivot = m(arg, c);
    if (std::abs(pivot) > 0.0) m.col(c) *= std::conj(pivot) / std::abs(pivot);
  }
}

// Minimum-norm point of the convex hull of `gs`, by enumerating supports.
// Only used on a handful of vectors.
CMatrix min_norm_combination(const std::vector<CMatrix>& gs) {
  const auto n = static_cast<Eigen::Index>(gs.size());
  RMatrix k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) k(a, b) = k(b, a) = real_inner(gs[a], gs[b]);
  }
  RVector best_w;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (mask >> a & 1u) idx.push_back(a);
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    RMatrix sys = RMatrix::Zero(m + 1, m + 1);
    RVector rhs = RVector::Zero(m + 1);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) sys(a, b) = k(idx[a], idx[b]);
      sys(a, m) = sys(m, a) = 1.0;
    }
    rhs(m) = 1.0;
    Eigen::FullPivLU<RMatrix> lu(sys);
    if (!lu.isInvertible()) continue;
    const RVector sol = lu.solve(rhs);
    if ((sol.head(m).array() < -1e-12).any()) continue;
    RVector w = RVector::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) w(idx[a]) = std::max(0.0, sol(a));
    const double val = w.dot(k * w);
    if (val < best_val - 1e-18) {
      best_val = val;
      best_w = w;
    }
  }
  CMatrix out = CMatrix::Zero(gs[0].rows(), gs[0].cols());
  if (best_w.size() == 0) return out;
  for (Eigen::Index a = 0; a < n; ++a) out += best_w(a) * gs[a];
  return out;
}

struct PairGeometry {
  std::vector<CVector> deltas;  // x_i - x_j, i < j

  explicit PairGeometry(const JointAlphabet& alphabet) {
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      for (std::size_t j = i + 1; j < alphabet.size(); ++j) deltas.push_back(alphabet.vectors[i] - alphabet.vectors[j]);
    }
  }

  RVector squared(const CMatrix& a) const {
    RVector d2(static_cast<Eigen::Index>(deltas.size()));
    for (std::size_t k = 0; k < deltas.size(); ++k) d2(static_cast<Eigen::Index>(k)) = (a * deltas[k]).squaredNorm();
    return d2;
  }
};

struct RestartOutcome {
  CMatrix p;
  double start_dmin = 0.0;
  double dmin = 0.0;
  std::size_t iterations = 0;
  std::vector<double> trace_history;
  std::vector<double> dmin_history;
  double max_trace_deviation = 0.0;
};

constexpr Eigen::Index kMaxActivePairs = 10;

RestartOutcome ascend(const VirtualChannel& vc, const PairGeometry& geo, CMatrix p, const HighSnrParams& prm) {
  const CMatrix& h = vc.h();
  const CMatrix gram = h.adjoint() * h;
  const bool real_field = prm.field == PrecoderField::Real;
  const auto project = [&](const CMatrix& m) {
    CMatrix out = real_field ? CMatrix(m.real().cast<cd>()) : m;
    return normalize_trace(out, prm.trace_budget);
  };

  RestartOutcome out;
  p = project(p);
  RVector d2 = geo.squared(h * p);
  double m = d2.minCoeff();
  out.start_dmin = std::sqrt(m);
  const auto record = [&] {
    const double tr = p.squaredNorm();
    out.trace_history.push_back(tr);
    out.dmin_history.push_back(std::sqrt(m));
    out.max_trace_deviation = std::max(out.max_trace_deviation, std::abs(tr - prm.trace_budget));
  };
  record();

  // eps: relative width of the near-active pair set (or 1/beta sharpness).
  double eps = prm.beta > 0.0 ? 1.0 / prm.beta : 0.1;
  double t = prm.step;
  std::size_t k = 0;
  for (; k < prm.max_iters; ++k) {
    const auto pair_gradient = [&](std::size_t idx) {
      const CVector& dl = geo.deltas[idx];
      CMatrix g = 2.0 * gram * p * dl * dl.adjoint();
      if (real_field) g = g.real().cast<cd>();
      // tangent to the trace sphere
      return CMatrix(g - (real_inner(g, p) / p.squaredNorm()) * p);
    };

    CMatrix dir;
    if (prm.beta > 0.0) {
      dir = CMatrix::Zero(p.rows(), p.cols());
      const double sharp = 1.0 / eps;
      double wsum = 0.0;
      for (Eigen::Index q = 0; q < d2.size(); ++q) {
        const double w = std::exp(-sharp * (d2(q) - m) / std::max(m, 1e-300));
        if (w < 1e-300) continue;
        dir += w * pair_gradient(static_cast<std::size_t>(q));
        wsum += w;
      }
      dir /= wsum;
    } else {
      std::vector<Eigen::Index> order(static_cast<std::size_t>(d2.size()));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d2(a) < d2(b); });
      std::vector<CMatrix> gs;
      for (const Eigen::Index q : order) {
        if (d2(q) > m + eps * m || static_cast<Eigen::Index>(gs.size()) >= kMaxActivePairs) break;
        gs.push_back(pair_gradient(static_cast<std::size_t>(q)));
      }
      dir = min_norm_combination(gs);
    }

    const double dn = std::sqrt(real_inner(dir, dir));
    bool accepted = false;
    if (dn > 1e-14) {
      t = std::min(4.0 * t, 1.0);
      for (; t > 1e-15; t *= 0.5) {
        const CMatrix trial = project(p + (t / dn) * dir);
        const RVector td2 = geo.squared(h * trial);
        if (td2.minCoeff() > m) {
          p = trial;
          d2 = td2;
          m = td2.minCoeff();
          accepted = true;
          break;
        }
      }
    }
    if (accepted) {
      record();
      continue;
    }
    eps *= 0.25;
    if (eps < prm.tol) break;
  }
  out.iterations = k;
  out.p = p;
  out.dmin = std::sqrt(m);
  return out;
}

}  // namespace

CMatrix normalize_trace(const CMatrix& p, double budget) {
  const double tr = p.squaredNorm();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw Error(ErrorCode::ZeroUpdate, "cannot rescale a zero precoder");
  return p * std::sqrt(budget / tr);
}

CMatrix channel_right_singular_vectors(const CMatrix& h) {
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CMatrix v = svd.matrixV();
  phase_normalize_columns(v);
  return v;
}

CMatrix svd_initial_precoder(const VirtualChannel& vc, const RVector& powers) {
  if (powers.size() != vc.size()) throw Error(ErrorCode::DimensionMismatch, "one power per user required");
  return channel_right_singular_vectors(vc.h()) * amplitude_matrix(powers);
}

PrecoderMatrix fixed_point_step(const VirtualChannel& vc, const PrecoderMatrix& p, const CMatrix& e) {
  if (p.p.rows() != vc.size() || e.rows() != vc.size()) {
    throw Error(ErrorCode::DimensionMismatch, "precoder and MMSE sizes must match the channel");
  }
  const CMatrix m = vc.h().adjoint() * vc.h() * p.p * e;
  if (m.squaredNorm() == 0.0) throw Error(ErrorCode::ZeroUpdate, "H^H H P E vanishes");
  return {normalize_trace(m, p.trace_budget), p.trace_budget};
}

PrecoderDecomposition decompose(const PrecoderMatrix& p, const VirtualChannel& vc, const CMatrix& e) {
  const Eigen::Index n = p.p.rows();
  if (p.p.cols() != n || vc.size() != n || e.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "decompose expects square operands of the channel size");
  }
  Eigen::JacobiSVD<CMatrix> svd(p.p, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix vh = channel_right_singular_vectors(vc.h());

  // Order singular triplets so U lines up with V_H.
  const std::vector<std::size_t> to_vh = best_assignment(overlap_scores(svd.matrixU(), vh));
  CMatrix u(n, n), r(n, n);
  RVector d(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto c = static_cast<Eigen::Index>(to_vh[static_cast<std::size_t>(k)]);
    u.col(c) = svd.matrixU().col(k);
    r.col(c) = svd.matrixV().col(k);
    d(c) = svd.singularValues()(k);
  }
  // Within each cluster of equal singular values U and R share a free
  // unitary; pick the one closest to V_H.
  const double tie = 1e-9 * std::max(1.0, d.maxCoeff());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Eigen::Index a = 0; a < n; ++a) {
    if (seen[static_cast<std::size_t>(a)]) continue;
    std::vector<Eigen::Index> cl;
    for (Eigen::Index b = a; b < n; ++b) {
      if (!seen[static_cast<std::size_t>(b)] && std::abs(d(b) - d(a)) <= tie) {
        cl.push_back(b);
        seen[static_cast<std::size_t>(b)] = true;
      }
    }
    const auto m = static_cast<Eigen::Index>(cl.size());
    CMatrix uc(n, m), rc(n, m), vc_(n, m);
    for (Eigen::Index q = 0; q < m; ++q) {
      uc.col(q) = u.col(cl[q]);
      rc.col(q) = r.col(cl[q]);
      vc_.col(q) = vh.col(cl[q]);
    }
    Eigen::JacobiSVD<CMatrix> pro(uc.adjoint() * vc_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const CMatrix rot = pro.matrixU() * pro.matrixV().adjoint();
    uc = uc * rot;
    rc = rc * rot;
    for (Eigen::Index q = 0; q < m; ++q) {
      u.col(cl[q]) = uc.col(q);
      r.col(cl[q]) = rc.col(q);
    }
  }

  PrecoderDecomposition out;
  out.u = u;
  out.d = d;
  out.r = r;
  out.reconstruction_error = (u * d.cast<cd>().asDiagonal() * r.adjoint() - p.p).norm();
  out.u_mismatch = (u - vh).norm();

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (e + e.adjoint()));
  const CMatrix ue = eig.eigenvectors();
  out.permutation = best_assignment(overlap_scores(r, ue));
  CMatrix matched(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const CVector col = ue.col(static_cast<Eigen::Index>(out.permutation[static_cast<std::size_t>(k)]));
    const cd ov = col.dot(r.col(k));
    const cd phase = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cd(1.0, 0.0);
    matched.col(k) = col * phase;
  }
  out.r_mismatch = (r - matched).norm();
  return out;
}

double d_min(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet) {
  if (alphabet.size() < 2) throw Error(ErrorCode::InvalidArgument, "d_min needs at least two joint symbols");
  if (p.rows() != vc.size() || static_cast<std::size_t>(p.cols()) != alphabet.users) {
    throw Error(ErrorCode::DimensionMismatch, "precoder does not match channel/alphabet");
  }
  const CMatrix a = vc.h() * p;
  std::vector<CVector> img;
  img.reserve(alphabet.size());
  for (const auto& x : alphabet.vectors) img.push_back(a * x);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (std::size_t j = i + 1; j < img.size(); ++j) best = std::min(best, (img[i] - img[j]).squaredNorm());
  }
  return std::sqrt(best);
}

double highsnr_bound(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet, double snr) {
  if (!(snr > 0.0)) throw Error(ErrorCode::InvalidArgument, "high-snr bound needs snr > 0");
  const double d = d_min(vc, p, alphabet);
  if (!(d > 1e-12)) throw Error(ErrorCode::ZeroDmin, "precoder maps two symbols onto the same point");
  const double m = static_cast<double>(alphabet.size());
  const double x = d * d * snr;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  return std::log(m) - std::exp(-x / 4.0) / (m * d * snr) * (sqrt_pi - (4.37 + 2.0 * sqrt_pi) / x);
}

void HighSnrParams::validate() const {
  if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
  if (!(snr > 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be positive");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be non-negative");
  if (!(trace_budget > 0.0)) throw Error(ErrorCode::InvalidArgument, "trace budget must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
}

HighSnrResult optimize_precoder_highsnr(const VirtualChannel& vc, const JointAlphabet& alphabet,
                                        const HighSnrParams& params) {
  params.validate();
  if (alphabet.size() < 2) throw Error(ErrorCode::InvalidArgument, "finite alphabet with M >= 2 required");
  const Eigen::Index n = vc.size();
  if (static_cast<Eigen::Index>(alphabet.users) != n) {
    throw Error(ErrorCode::DimensionMismatch, "alphabet users must match channel size");
  }
  const PairGeometry geo(alphabet);

  std::vector<CMatrix> starts;
  starts.push_back(channel_right_singular_vectors(vc.h()) * std::sqrt(params.trace_budget / static_cast<double>(n)));
  for (std::size_t r = 1; r < params.restarts; ++r) {
    auto rng = make_substream(params.seed, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    CMatrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double re = normal(rng);
        const double im = params.field == PrecoderField::Complex ? normal(rng) : 0.0;
        s(i, j) = cd(re, im);
      }
    }
    starts.push_back(s);
  }

  std::vector<RestartOutcome> outcomes(starts.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t r = next++; r < starts.size(); r = next++) outcomes[r] = ascend(vc, geo, starts[r], params);
  };
  const std::size_t nthreads = std::clamp<std::size_t>(params.threads, 1, starts.size());
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }

  std::size_t best = 0;
  HighSnrResult res;
  res.improved = false;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (outcomes[r].dmin > outcomes[best].dmin) best = r;
    res.max_trace_deviation = std::max(res.max_trace_deviation, outcomes[r].max_trace_deviation);
    if (outcomes[r].dmin > outcomes[r].start_dmin) res.improved = true;
  }
  const RestartOutcome& b = outcomes[best];
  res.p = {b.p, params.trace_budget};
  res.dmin = b.dmin;
  res.bound = b.dmin > 1e-12 ? highsnr_bound(vc, b.p, alphabet, params.snr) : -std::numeric_limits<double>::infinity();
  res.best_restart = best;
  res.iterations = b.iterations;
  res.trace_history = b.trace_history;
  res.dmin_history = b.dmin_history;
  return res;
}

PrecoderMatrix lowsnr_optimal_precoder(const VirtualChannel& vc, double snr, double budget) {
  if (!(snr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be non-negative");
  if (!(budget > 0.0)) throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  const CMatrix gram = vc.h().adjoint() * vc.h();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (gram + gram.adjoint()));
  CMatrix u = eig.eigenvectors();
  phase_normalize_columns(u);
  const RVector w = eig.eigenvalues();
  const double top = w.maxCoeff();
  const double tie = 1e-9 * std::max(1.0, std::abs(top));
  std::vector<Eigen::Index> principal;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) >= top - tie) principal.push_back(i);
  }
  // Tied modes keep their eigensolver order so the identity maps to a
  // diagonal split.
  const Eigen::Index n = vc.size();
  CMatrix p = CMatrix::Zero(n, n);
  const double share = std::sqrt(budget / static_cast<double>(principal.size()));
  for (std::size_t k = 0; k < principal.size(); ++k) {
    p.col(static_cast<Eigen::Index>(k)) = u.col(principal[k]) * share;
  }
  return {p, budget};
}

void Algorithm2Params::validate() const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  integrator.validate();
}

TransmitWeights transmit_weights(const VirtualChannel& vc, const CMatrix& p) {
  if (p.rows() != vc.size() || p.cols() != vc.size()) {
    throw Error(ErrorCode::DimensionMismatch, "precoder must match the channel");
  }
  TransmitWeights w;
  w.radiated = p;
  w.printed = vc.h() * p;
  w.nu = channel_right_singular_vectors(vc.h());
  if (vc.size() >= 2) {
    w.cross_x1_to_bs2 = w.printed(1, 0);
    w.cross_x2_to_bs1 = w.printed(0, 1);
  }
  return w;
}

Algorithm2Result algorithm2_solve(const VirtualChannel& vc, const PrecoderMatrix& p_init,
                                  std::span<const Constellation> inputs, const Algorithm2Params& params) {
  params.validate();
  if (p_init.p.rows() != vc.size() || p_init.p.cols() != vc.size()) {
    throw Error(ErrorCode::DimensionMismatch, "initial precoder must match the channel");
  }
  if (static_cast<Eigen::Index>(inputs.size()) != vc.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one constellation per user required");
  }
  const double budget = p_init.trace_budget;
  CMatrix p = normalize_trace(p_init.p, budget);
  const auto evaluate = [&](const CMatrix& m) { return evaluate_inputs(vc, m, inputs, params.integrator); };

  Algorithm2Result res;
  InfoMmse current = evaluate(p);
  res.trace.push_back({0, current.mi.nats, p.squaredNorm()});
  CMatrix best_p = p;
  InfoMmse best = current;
  std::size_t k = 1;
  for (; k <= params.max_iters; ++k) {
    const double alpha =
        params.step_rule == StepRule::Diminishing ? params.step / static_cast<double>(k) : params.step;
    const CMatrix g = mi_gradient(vc, p, current.mmse);
    CMatrix next;
    InfoMmse next_eval;
    if (params.update == UpdateRule::AsPrinted) {
      next = normalize_trace(alpha * p + alpha * params.printed_lambda * g, budget);
      next_eval = evaluate(next);
    } else {
      // Unit-length ascent direction along the trace sphere. The radial part
      // of the gradient is undone by the renormalization, and near saturation
      // the gradient is exponentially small so raw steps stall.
      const CMatrix tangent = g - (p.cwiseProduct(g.conjugate()).sum().real() / p.squaredNorm()) * p;
      const double gn = tangent.norm();
      if (gn == 0.0) {
        res.converged = true;
        break;
      }
      double trial = alpha;
      bool stalled = false;
      for (;;) {
        next = normalize_trace(p + (trial / gn) * tangent, budget);
        next_eval = evaluate(next);
        if (!params.backtracking || next_eval.mi.nats > current.mi.nats) break;
        trial *= 0.5;
        if (trial < params.tol) {
          stalled = true;
          break;
        }
      }
      if (stalled) {
        res.converged = true;
        break;
      }
    }
    const double moved = (next - p).norm();
    p = next;
    current = std::move(next_eval);
    res.trace.push_back({k, current.mi.nats, p.squaredNorm()});
    if (current.mi.nats >= best.mi.nats) {
      best_p = p;
      best = current;
    }
    if (moved <= params.tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(k, params.max_iters);
  if (!res.converged) {
    p = best_p;
    current = std::move(best);
  }
  res.p = {p, budget};
  res.mi_nats = current.mi.nats;
  res.mi_std_error = current.mi.std_error;
  res.weights = transmit_weights(vc, p);
  return res;
}

}  // namespace mcp

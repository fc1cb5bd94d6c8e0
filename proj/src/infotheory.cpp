#include "mcp/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "mcp/error.hpp"
#include "mcp/quadrature.hpp"

namespace mcp {

std::string_view to_string(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::ClosedFormGaussian: return "closed_form_gaussian";
    case EstimateMethod::Quadrature: return "quadrature";
    case EstimateMethod::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

Integrator Integrator::gauss_hermite(std::size_t nodes) {
  Integrator i;
  i.kind = Kind::GaussHermite;
  i.nodes = nodes;
  return i;
}

Integrator Integrator::monte_carlo(std::size_t samples, std::uint64_t seed, std::size_t threads) {
  Integrator i;
  i.kind = Kind::MonteCarlo;
  i.samples = samples;
  i.seed = seed;
  i.threads = threads;
  return i;
}

Integrator Integrator::automatic(std::uint64_t seed) {
  Integrator i;
  i.kind = Kind::Auto;
  i.seed = seed;
  return i;
}

void Integrator::validate() const {
  if ((kind == Kind::GaussHermite || kind == Kind::Auto) && nodes < kMinNodes) {
    throw Error(ErrorCode::IntegratorBudgetTooSmall,
                "quadrature needs at least " + std::to_string(kMinNodes) + " nodes per dimension");
  }
  if ((kind == Kind::MonteCarlo || kind == Kind::Auto) && samples < kMinSamples) {
    throw Error(ErrorCode::IntegratorBudgetTooSmall,
                "Monte Carlo needs at least " + std::to_string(kMinSamples) + " samples");
  }
}

Integrator::Kind Integrator::resolve(Eigen::Index receive_dims) const {
  if (kind != Kind::Auto) return kind;
  return receive_dims <= static_cast<Eigen::Index>(kMaxQuadratureReceiveDims) ? Kind::GaussHermite
                                                                              : Kind::MonteCarlo;
}

MiEstimate MiEstimate::from_nats(double nats, double std_error) {
  return {nats, nats_to_bits(nats), std_error};
}

namespace {

MmseReport make_report(CMatrix e, EstimateMethod method, std::size_t count, RVector diag_se) {
  const Eigen::Index n = e.rows();
  e = 0.5 * (e + e.adjoint().eval());
  MmseReport r;
  r.per_user_mmse = e.diagonal().real();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) r.cross_cov.push_back(e(i, j));
  r.e = std::move(e);
  r.method = method;
  r.samples_or_nodes = count;
  r.diag_std_error = diag_se.size() == n ? std::move(diag_se) : RVector::Zero(n);
  return r;
}

// Precomputed view of a finite-alphabet channel: G x for every joint symbol,
// the symbols themselves and log-priors, laid out contiguously.
class PosteriorKernel {
 public:
  PosteriorKernel(const CMatrix& g, const JointAlphabet& alphabet)
      : nr_(static_cast<std::size_t>(g.rows())),
        nt_(static_cast<std::size_t>(g.cols())),
        m_(alphabet.size()) {
    if (alphabet.users != nt_) {
      throw Error(ErrorCode::DimensionMismatch, "alphabet users must match G columns");
    }
    gx_.resize(m_ * nr_);
    xs_.resize(m_ * nt_);
    log_prior_.resize(m_);
    prior_.resize(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      const CVector y = g * alphabet.vectors[k];
      for (std::size_t r = 0; r < nr_; ++r) gx_[k * nr_ + r] = y(static_cast<Eigen::Index>(r));
      for (std::size_t t = 0; t < nt_; ++t) xs_[k * nt_ + t] = alphabet.vectors[k](static_cast<Eigen::Index>(t));
      prior_[k] = alphabet.priors[k];
      log_prior_[k] = alphabet.priors[k] > 0.0 ? std::log(alphabet.priors[k])
                                               : -std::numeric_limits<double>::infinity();
    }
  }

  std::size_t receive_dims() const { return nr_; }
  std::size_t users() const { return nt_; }
  std::size_t size() const { return m_; }
  double prior(std::size_t k) const { return prior_[k]; }

  // For transmitted symbol k and noise n, returns
  //   -log sum_j p_j exp(-|G x_k + n - G x_j|^2 + |n|^2)
  // and writes x_k - E[x | y] into err. `scratch` must hold size() doubles.
  double evaluate(std::size_t k, const cd* noise, double* scratch, cd* err) const {
    double noise_norm = 0.0;
    for (std::size_t r = 0; r < nr_; ++r) noise_norm += std::norm(noise[r]);
    const cd* gk = &gx_[k * nr_];
    double max_exp = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m_; ++j) {
      if (prior_[j] <= 0.0) {
        scratch[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const cd* gj = &gx_[j * nr_];
      double dist = 0.0;
      for (std::size_t r = 0; r < nr_; ++r) dist += std::norm(gk[r] - gj[r] + noise[r]);
      scratch[j] = log_prior_[j] - dist + noise_norm;
      max_exp = std::max(max_exp, scratch[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      scratch[j] = std::exp(scratch[j] - max_exp);
      sum += scratch[j];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw Error(ErrorCode::DegeneratePosterior, "posterior normalization failed");
    }
    const double inv = 1.0 / sum;
    for (std::size_t t = 0; t < nt_; ++t) {
      cd acc(0.0, 0.0);
      for (std::size_t j = 0; j < m_; ++j) acc += scratch[j] * xs_[j * nt_ + t];
      err[t] = xs_[k * nt_ + t] - acc * inv;
    }
    return -(max_exp + std::log(sum));
  }

  bool real_model() const {
    const auto real = [](const cd& z) { return z.imag() == 0.0; };
    return std::all_of(gx_.begin(), gx_.end(), real) && std::all_of(xs_.begin(), xs_.end(), real);
  }

 private:
  std::size_t nr_;
  std::size_t nt_;
  std::size_t m_;
  std::vector<cd> gx_;
  std::vector<cd> xs_;
  std::vector<double> log_prior_;
  std::vector<double> prior_;
};

InfoMmse integrate_quadrature(const PosteriorKernel& kernel, std::size_t nodes) {
  const std::size_t nr = kernel.receive_dims();
  const std::size_t nt = kernel.users();
  if (nr > Integrator::kMaxQuadratureReceiveDims) {
    throw Error(ErrorCode::InvalidArgument,
                "tensor quadrature supports at most 2 receive dimensions; use Monte Carlo");
  }
  // With a real channel and real alphabet the posterior ignores the
  // imaginary noise components, so only the real parts are integrated.
  const bool real_only = kernel.real_model();
  const TensorGrid grid = tensor_grid(nodes, real_only ? nr : 2 * nr);

  std::vector<double> scratch(kernel.size());
  std::vector<cd> noise(nr);
  std::vector<cd> err(nt);
  double mi = 0.0;
  CMatrix e = CMatrix::Zero(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nt));
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    const double pk = kernel.prior(k);
    if (pk <= 0.0) continue;
    double mi_k = 0.0;
    CMatrix e_k = CMatrix::Zero(e.rows(), e.cols());
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double* pt = grid.point(q);
      for (std::size_t r = 0; r < nr; ++r) {
        noise[r] = real_only ? cd(pt[r], 0.0) : cd(pt[2 * r], pt[2 * r + 1]);
      }
      const double w = grid.weights[q];
      mi_k += w * kernel.evaluate(k, noise.data(), scratch.data(), err.data());
      for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = 0; b < nt; ++b)
          e_k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += w * err[a] * std::conj(err[b]);
    }
    mi += pk * mi_k;
    e += pk * e_k;
  }
  InfoMmse out;
  out.mi = MiEstimate::from_nats(mi);
  out.mmse = make_report(std::move(e), EstimateMethod::Quadrature, grid.size(), {});
  return out;
}

struct BlockSums {
  double v = 0.0;
  double v2 = 0.0;
  CMatrix e;
  RVector d;
  RVector d2;
  std::size_t count = 0;
};

BlockSums run_block(const PosteriorKernel& kernel, std::uint64_t seed, std::size_t block,
                    std::size_t count, const std::vector<double>& cdf) {
  const std::size_t nr = kernel.receive_dims();
  const std::size_t nt = kernel.users();
  const auto ntt = static_cast<Eigen::Index>(nt);
  BlockSums s;
  s.e = CMatrix::Zero(ntt, ntt);
  s.d = RVector::Zero(ntt);
  s.d2 = RVector::Zero(ntt);
  s.count = count;

  std::mt19937_64 rng = make_substream(seed, block);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> scratch(kernel.size());
  std::vector<cd> noise(nr);
  std::vector<cd> err(nt);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    if (k >= kernel.size()) k = kernel.size() - 1;
    while (kernel.prior(k) <= 0.0 && k > 0) --k;
    for (std::size_t r = 0; r < nr; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      noise[r] = cd(re, im);
    }
    const double v = kernel.evaluate(k, noise.data(), scratch.data(), err.data());
    s.v += v;
    s.v2 += v * v;
    for (std::size_t a = 0; a < nt; ++a) {
      const double sq = std::norm(err[a]);
      s.d(static_cast<Eigen::Index>(a)) += sq;
      s.d2(static_cast<Eigen::Index>(a)) += sq * sq;
      for (std::size_t b = 0; b < nt; ++b)
        s.e(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += err[a] * std::conj(err[b]);
    }
  }
  return s;
}

InfoMmse integrate_monte_carlo(const PosteriorKernel& kernel, const Integrator& integ) {
  const std::size_t total = integ.samples;
  const std::size_t block = Integrator::kBlockSize;
  const std::size_t blocks = (total + block - 1) / block;
  std::vector<double> cdf(kernel.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    acc += kernel.prior(k);
    cdf[k] = acc;
  }

  std::vector<BlockSums> sums(blocks);
  const auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t b = worker; b < blocks; b += stride) {
      const std::size_t count = std::min(block, total - b * block);
      sums[b] = run_block(kernel, integ.seed, b, count, cdf);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(integ.threads, 1, std::max<std::size_t>(blocks, 1));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  const auto nt = static_cast<Eigen::Index>(kernel.users());
  double v = 0.0;
  double v2 = 0.0;
  CMatrix e = CMatrix::Zero(nt, nt);
  RVector d = RVector::Zero(nt);
  RVector d2 = RVector::Zero(nt);
  for (const auto& s : sums) {
    v += s.v;
    v2 += s.v2;
    e += s.e;
    d += s.d;
    d2 += s.d2;
  }
  const double n = static_cast<double>(total);
  const double mean = v / n;
  const double var = std::max(0.0, (v2 / n - mean * mean) * n / std::max(1.0, n - 1.0));
  RVector diag_se(nt);
  for (Eigen::Index a = 0; a < nt; ++a) {
    const double m = d(a) / n;
    const double dv = std::max(0.0, (d2(a) / n - m * m) * n / std::max(1.0, n - 1.0));
    diag_se(a) = std::sqrt(dv / n);
  }
  InfoMmse out;
  out.mi = MiEstimate::from_nats(mean, std::sqrt(var / n));
  out.mmse = make_report(e / n, EstimateMethod::MonteCarlo, total, std::move(diag_se));
  return out;
}

Eigen::LLT<CMatrix> positive_definite_factor(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "matrix is not numerically positive definite");
  }
  return llt;
}

}  // namespace

MiEstimate mi_gaussian(const VirtualChannel& vc, const CMatrix& p) {
  const CMatrix g = effective(vc, p);
  const CMatrix a = CMatrix::Identity(g.rows(), g.rows()) + g * g.adjoint();
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NonFiniteDeterminant, "I + G G^H is not positive definite");
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
  if (!std::isfinite(logdet)) throw Error(ErrorCode::NonFiniteDeterminant, "log-determinant is not finite");
  return MiEstimate::from_nats(logdet);
}

MmseReport mmse_gaussian(const VirtualChannel& vc, const CMatrix& p) {
  const CMatrix g = effective(vc, p);
  const auto n = g.cols();
  const CMatrix a = CMatrix::Identity(n, n) + g.adjoint() * g;
  CMatrix e = positive_definite_factor(a).solve(CMatrix::Identity(n, n));
  return make_report(std::move(e), EstimateMethod::ClosedFormGaussian, 0, {});
}

CVector conditional_mean(const CVector& y, const CMatrix& g, const JointAlphabet& alphabet) {
  if (y.size() != g.rows()) throw Error(ErrorCode::DimensionMismatch, "y length must match G rows");
  if (alphabet.users != static_cast<std::size_t>(g.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "alphabet users must match G columns");
  }
  std::vector<double> logw(alphabet.size());
  double max_exp = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    if (alphabet.priors[k] <= 0.0) {
      logw[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    logw[k] = std::log(alphabet.priors[k]) - (y - g * alphabet.vectors[k]).squaredNorm();
    max_exp = std::max(max_exp, logw[k]);
  }
  double sum = 0.0;
  CVector mean = CVector::Zero(g.cols());
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    const double w = std::exp(logw[k] - max_exp);
    sum += w;
    mean += w * alphabet.vectors[k];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw Error(ErrorCode::DegeneratePosterior, "posterior normalization failed");
  }
  return mean / sum;
}

InfoMmse mi_and_mmse(const CMatrix& g, const JointAlphabet& alphabet, const Integrator& integ) {
  integ.validate();
  if (alphabet.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty alphabet");
  const PosteriorKernel kernel(g, alphabet);
  switch (integ.resolve(g.rows())) {
    case Integrator::Kind::GaussHermite: return integrate_quadrature(kernel, integ.nodes);
    case Integrator::Kind::MonteCarlo: return integrate_monte_carlo(kernel, integ);
    case Integrator::Kind::Auto: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unresolved integrator");
}

MmseReport mmse_matrix(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet,
                       const Integrator& integ) {
  return mi_and_mmse(effective(vc, p), alphabet, integ).mmse;
}

MiEstimate mi_discrete(const VirtualChannel& vc, const CMatrix& p, const JointAlphabet& alphabet,
                       const Integrator& integ) {
  return mi_and_mmse(effective(vc, p), alphabet, integ).mi;
}

InfoMmse evaluate_inputs(const VirtualChannel& vc, const CMatrix& p,
                         std::span<const Constellation> inputs, const Integrator& integ) {
  if (static_cast<Eigen::Index>(inputs.size()) != p.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "one constellation per user (precoder column) required");
  }
  if (all_gaussian(inputs)) return {mi_gaussian(vc, p), mmse_gaussian(vc, p)};
  for (const auto& c : inputs) {
    if (!c.is_finite()) {
      throw Error(ErrorCode::InvalidArgument, "mixing Gaussian and finite inputs is not supported");
    }
  }
  return mi_and_mmse(effective(vc, p), enumerate_joint(inputs), integ);
}

CMatrix mi_gradient(const VirtualChannel& vc, const CMatrix& p, const MmseReport& mmse) {
  if (mmse.e.rows() != p.cols() || mmse.e.cols() != p.cols() || p.rows() != vc.h().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient operands disagree in size");
  }
  return vc.snr() * (vc.h().adjoint() * vc.h() * p * mmse.e);
}

CVector lmmse_estimate(const CVector& y, const VirtualChannel& vc, const CMatrix& p) {
  const CMatrix g = effective(vc, p);
  if (y.size() != g.rows()) throw Error(ErrorCode::DimensionMismatch, "y length must match G rows");
  const CMatrix a = CMatrix::Identity(g.rows(), g.rows()) + g * g.adjoint();
  return g.adjoint() * positive_definite_factor(a).solve(y);
}

namespace {

double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - kLn2;
}

}  // namespace

double bpsk_siso_mmse(double snr, std::size_t nodes) {
  if (!(snr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be non-negative");
  if (snr == 0.0) return 1.0;
  const GaussHermiteRule rule = gauss_hermite(nodes);
  const double s = std::sqrt(snr);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double zeta = s + rule.nodes[i];
    acc += rule.weights[i] * std::tanh(2.0 * s * zeta);
  }
  return std::clamp(1.0 - acc / std::sqrt(std::numbers::pi), 0.0, 1.0);
}

double bpsk_siso_mi(double snr, std::size_t nodes) {
  if (!(snr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be non-negative");
  if (snr == 0.0) return 0.0;
  const GaussHermiteRule rule = gauss_hermite(nodes);
  const double s = std::sqrt(snr);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double zeta = s + rule.nodes[i];
    acc += rule.weights[i] * log_cosh(2.0 * s * zeta);
  }
  // The linear term is 2 snr: E[2 sqrt(snr) zeta] with zeta ~ N(sqrt(snr), 1/2).
  return std::clamp(2.0 * snr - acc / std::sqrt(std::numbers::pi), 0.0, kLn2);
}

double qpsk_siso_mi(double snr, std::size_t nodes) { return 2.0 * bpsk_siso_mi(snr, nodes); }

LowSnrMmseExpansion lowsnr_mmse_expansion(const VirtualChannel& vc, const CMatrix& p) {
  const CMatrix hp = vc.h() * p;
  const CMatrix gram = hp.adjoint() * hp;
  const CMatrix outer = hp * hp.adjoint();
  LowSnrMmseExpansion out;
  out.zeroth = CMatrix::Identity(p.cols(), p.cols());
  out.first = -gram;
  out.trace_zeroth = outer.trace().real();
  out.trace_first = (outer * outer).trace().real();
  return out;
}

LowSnrMiExpansion lowsnr_mi_expansion(const VirtualChannel& vc, const CMatrix& p) {
  const LowSnrMmseExpansion m = lowsnr_mmse_expansion(vc, p);
  return {m.trace_zeroth, m.trace_first};
}

RateRegionBounds rate_region_bounds(const VirtualChannel& vc, const CMatrix& p,
                                    std::span<const Constellation> inputs, const Integrator& integ) {
  const CMatrix g = effective(vc, p);
  const Eigen::Index n = g.cols();
  if (static_cast<Eigen::Index>(inputs.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "one constellation per user required");
  }
  const bool gaussian = all_gaussian(inputs);
  RateRegionBounds out;

  // Knowing the other users' symbols, receiver i sees x_i through g_ii alone.
  for (Eigen::Index i = 0; i < n; ++i) {
    const CMatrix gi = g.block(i, i, 1, 1);
    if (gaussian) {
      out.per_user.push_back(MiEstimate::from_nats(std::log1p(std::norm(gi(0, 0)))));
    } else {
      const std::vector<Constellation> single{inputs[static_cast<std::size_t>(i)]};
      out.per_user.push_back(mi_and_mmse(gi, enumerate_joint(single), integ).mi);
    }
  }
  const JointAlphabet joint = gaussian ? JointAlphabet{} : enumerate_joint(inputs);
  for (Eigen::Index j = 0; j < g.rows(); ++j) {
    const CMatrix row = g.row(j);
    if (gaussian) {
      out.per_receiver.push_back(MiEstimate::from_nats(std::log1p(row.squaredNorm())));
    } else {
      out.per_receiver.push_back(mi_and_mmse(row, joint, integ).mi);
    }
  }
  out.sum_min = *std::min_element(out.per_receiver.begin(), out.per_receiver.end(),
                                  [](const MiEstimate& a, const MiEstimate& b) { return a.nats < b.nats; });
  out.joint = gaussian ? mi_gaussian(vc, p) : mi_and_mmse(g, joint, integ).mi;
  out.chain_holds = out.sum_min.nats <= out.joint.nats + 3.0 * (out.sum_min.std_error + out.joint.std_error);
  return out;
}

}  // namespace mcp

#include "mcp/constellation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "mcp/error.hpp"

namespace mcp {

std::string_view to_string(ConstellationKind kind) {
  switch (kind) {
    case ConstellationKind::Gaussian: return "gaussian";
    case ConstellationKind::Bpsk: return "bpsk";
    case ConstellationKind::Qpsk: return "qpsk";
    case ConstellationKind::CustomFinite: return "custom";
  }
  return "unknown";
}

Constellation::Constellation(ConstellationKind kind, std::vector<cd> points,
                             std::vector<double> priors)
    : kind_(kind), points_(std::move(points)), priors_(std::move(priors)) {
  if (kind_ == ConstellationKind::Gaussian) {
    energy_ = 1.0;
    return;
  }
  if (points_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "finite constellation needs at least one point");
  }
  if (priors_.empty()) priors_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
  if (priors_.size() != points_.size()) {
    throw Error(ErrorCode::InvalidArgument, "priors and points differ in length");
  }
  double total = 0.0;
  for (double p : priors_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::InvalidArgument, "priors must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "priors must sum to 1");
  }
  for (const cd& z : points_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw Error(ErrorCode::InvalidArgument, "constellation points must be finite");
    }
  }
  energy_ = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) energy_ += priors_[i] * std::norm(points_[i]);
}

Constellation Constellation::gaussian() { return {ConstellationKind::Gaussian, {}, {}}; }

Constellation Constellation::bpsk() {
  return {ConstellationKind::Bpsk, {cd(1.0, 0.0), cd(-1.0, 0.0)}, {0.5, 0.5}};
}

Constellation Constellation::qpsk(bool normalize_energy) {
  Constellation c(ConstellationKind::Qpsk,
                  {cd(1.0, 1.0), cd(1.0, -1.0), cd(-1.0, -1.0), cd(-1.0, 1.0)},
                  {0.25, 0.25, 0.25, 0.25});
  return normalize_energy ? c.normalized() : c;
}

Constellation Constellation::custom(std::vector<cd> points, std::vector<double> priors,
                                    bool normalize_energy) {
  Constellation c(ConstellationKind::CustomFinite, std::move(points), std::move(priors));
  return normalize_energy ? c.normalized() : c;
}

Constellation Constellation::from_name(std::string_view name, bool normalize_energy) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "bpsk") return normalize_energy ? bpsk().normalized() : bpsk();
  if (lower == "qpsk") return qpsk(normalize_energy);
  if (lower == "gaussian") return gaussian();
  throw Error(ErrorCode::InvalidArgument, "unknown constellation name '" + std::string(name) + "'");
}

bool Constellation::is_real() const {
  return is_finite() &&
         std::all_of(points_.begin(), points_.end(), [](const cd& z) { return z.imag() == 0.0; });
}

cd Constellation::mean() const {
  cd m(0.0, 0.0);
  for (std::size_t i = 0; i < points_.size(); ++i) m += priors_[i] * points_[i];
  return m;
}

Constellation Constellation::normalized() const {
  if (!is_finite()) return *this;
  if (energy_ <= 0.0) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero-energy alphabet");
  const double g = 1.0 / std::sqrt(energy_);
  std::vector<cd> scaled = points_;
  for (cd& z : scaled) z *= g;
  Constellation out(kind_, std::move(scaled), priors_);
  return out;
}

bool JointAlphabet::is_real() const {
  return std::all_of(vectors.begin(), vectors.end(),
                     [](const CVector& v) { return v.imag().isZero(0.0); });
}

bool JointAlphabet::is_uniform() const {
  if (priors.empty()) return true;
  const double p0 = priors.front();
  return std::all_of(priors.begin(), priors.end(),
                     [p0](double p) { return std::abs(p - p0) <= 1e-15; });
}

CMatrix JointAlphabet::second_moment() const {
  CMatrix r = CMatrix::Zero(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(users));
  for (std::size_t k = 0; k < vectors.size(); ++k) r += priors[k] * vectors[k] * vectors[k].adjoint();
  return r;
}

JointAlphabet enumerate_joint(std::span<const Constellation> per_user) {
  if (per_user.empty()) throw Error(ErrorCode::InvalidArgument, "no users");
  for (const auto& c : per_user) {
    if (!c.is_finite()) {
      throw Error(ErrorCode::GaussianNotEnumerable, "the Gaussian marker has no finite alphabet");
    }
  }
  JointAlphabet out;
  out.users = per_user.size();
  std::size_t total = 1;
  for (const auto& c : per_user) total *= c.size();
  out.vectors.reserve(total);
  out.priors.reserve(total);

  std::vector<std::size_t> digit(per_user.size(), 0);
  const auto n = static_cast<Eigen::Index>(per_user.size());
  for (std::size_t k = 0; k < total; ++k) {
    CVector v(n);
    double p = 1.0;
    for (std::size_t u = 0; u < per_user.size(); ++u) {
      v(static_cast<Eigen::Index>(u)) = per_user[u].points()[digit[u]];
      p *= per_user[u].priors()[digit[u]];
    }
    out.vectors.push_back(std::move(v));
    out.priors.push_back(p);
    for (std::size_t u = per_user.size(); u-- > 0;) {
      if (++digit[u] < per_user[u].size()) break;
      digit[u] = 0;
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(const JointAlphabet& alphabet) {
  const std::size_t m = alphabet.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (m < 2) return pairs;
  pairs.reserve(m * (m - 1));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

bool all_gaussian(std::span<const Constellation> per_user) {
  return !per_user.empty() && std::all_of(per_user.begin(), per_user.end(),
                                          [](const Constellation& c) { return !c.is_finite(); });
}

}  // namespace mcp

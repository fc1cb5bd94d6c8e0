#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mcp/types.hpp"

namespace mcp {

enum class ConstellationKind { Gaussian, Bpsk, Qpsk, CustomFinite };

std::string_view to_string(ConstellationKind kind);

/// Input alphabet of one user. The Gaussian kind is a marker with no points
/// and unit energy; every other kind is a finite set with priors.
class Constellation {
 public:
  static Constellation gaussian();
  /// {+1, -1}, energy 1.
  static Constellation bpsk();
  /// {1+j, 1-j, -1-j, -1+j}, natural energy 2 unless normalize_energy.
  static Constellation qpsk(bool normalize_energy = false);
  /// Uniform priors when `priors` is empty.
  static Constellation custom(std::vector<cd> points, std::vector<double> priors = {},
                              bool normalize_energy = false);
  /// "bpsk", "qpsk", "gaussian" (case-insensitive).
  static Constellation from_name(std::string_view name, bool normalize_energy = false);

  ConstellationKind kind() const { return kind_; }
  bool is_finite() const { return kind_ != ConstellationKind::Gaussian; }
  bool is_real() const;
  std::size_t size() const { return points_.size(); }
  const std::vector<cd>& points() const { return points_; }
  const std::vector<double>& priors() const { return priors_; }
  double energy() const { return energy_; }
  cd mean() const;

  /// Copy scaled to unit per-symbol energy.
  Constellation normalized() const;

 private:
  Constellation(ConstellationKind kind, std::vector<cd> points, std::vector<double> priors);

  ConstellationKind kind_;
  std::vector<cd> points_;
  std::vector<double> priors_;
  double energy_ = 1.0;
};

/// All joint input vectors of a set of users. Vector k corresponds to point
/// indices (i_0, ..., i_{n-1}) in odometer order: user 0 is the most
/// significant digit, the last user varies fastest.
struct JointAlphabet {
  std::size_t users = 0;
  std::vector<CVector> vectors;
  std::vector<double> priors;

  std::size_t size() const { return vectors.size(); }
  /// M^2, the count including i == j.
  std::size_t permutation_count() const { return size() * size(); }
  bool is_real() const;
  bool is_uniform() const;
  /// E[x x^H]
  CMatrix second_moment() const;
};

JointAlphabet enumerate_joint(std::span<const Constellation> per_user);

/// All (i, j) with i != j, row-major in (i, j). M(M-1) entries.
std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(const JointAlphabet& alphabet);

/// True when every user has the Gaussian marker.
bool all_gaussian(std::span<const Constellation> per_user);

}  // namespace mcp

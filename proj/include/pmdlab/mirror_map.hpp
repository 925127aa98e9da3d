#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pmdlab/types.hpp"

namespace pmdlab {

enum class MirrorMapKind {
  NegativeEntropy,   ///< h(p) = sum p log p; Bregman divergence is the KL
  SquaredEuclidean,  ///< h(p) = 0.5 ||p||^2
  Null,              ///< h == 0; zero divergence, update is the greedy step
  SeparableGeneric,  ///< h(p) = sum_a phi(p_a) for a scalar Legendre phi
};

/// Scalar generator for separable mirror maps: phi, its derivative and the
/// inverse of the derivative. phi must be strictly convex on (0,1] with
/// phi'(x) -> -inf as x -> 0+ (Legendre type on the simplex interior).
struct ScalarLegendre {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  std::function<double(double)> inv_dphi;
};

/// Mirror map on the action simplex. Selects the Bregman geometry of the
/// proximal policy update. Identifiers: "kl" | "euclid" | "pi" | "generic:<name>".
class MirrorMap {
 public:
  static MirrorMap negative_entropy();
  static MirrorMap squared_euclidean();
  static MirrorMap null_map();
  static MirrorMap separable(ScalarLegendre generator);
  /// "generic" alone resolves to the x log x generator (numeric-solver path).
  static MirrorMap from_id(const std::string& id);

  MirrorMapKind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  /// Legendre maps require strictly positive distributions as prox centers
  /// and keep iterates in the relative interior.
  bool requires_interior() const {
    return kind_ == MirrorMapKind::NegativeEntropy ||
           kind_ == MirrorMapKind::SeparableGeneric;
  }
  const ScalarLegendre& generator() const { return generator_; }

 private:
  MirrorMap(MirrorMapKind kind, std::string id, ScalarLegendre generator)
      : kind_(kind), id_(std::move(id)), generator_(std::move(generator)) {}

  MirrorMapKind kind_;
  std::string id_;
  ScalarLegendre generator_;  // populated for SeparableGeneric only
};

/// D_h(p, q) = h(p) - h(q) - <grad h(q), p - q>. Nonnegative, zero iff p = q
/// for strictly convex h; identically zero for the null map. A zero entry of
/// q where p is positive is a domain error under the negative entropy unless
/// allow_infinite is set (then returns +infinity).
double bregman_divergence(const MirrorMap& map, const Vec& p, const Vec& q,
                          bool allow_infinite = false);

/// Single-state proximal update:
///   argmin_{p in simplex} { -eta <q_s, p> + D_h(p, pi_s) }.
/// For the negative entropy this is the multiplicative update computed in
/// log space; for the squared Euclidean map a simplex projection; for the
/// null map a greedy one-hot; for separable generators a bisection on the
/// simplex Lagrange multiplier. Entries of Legendre-map outputs that
/// underflow below 1e-300 are floored and the row renormalised; *floored is
/// set when that happens.
Vec pmd_update_state(const MirrorMap& map, const Vec& pi_s, const Vec& q_s,
                     double eta, bool* floored = nullptr);

/// Actions within tol of the row maximum: {a : q_s(a) >= max q_s - tol}.
std::vector<int> greedy_set(const Vec& q_s, double tol = 1e-9);

/// min over greedy policies of D_h(greedy, pi_s). Exact for the negative
/// entropy (-log of the greedy mass of pi_s); for other maps the minimum over
/// one-hot greedy policies, an upper bound that still satisfies the adaptive
/// step-size condition.
double min_greedy_divergence(const MirrorMap& map, const Vec& pi_s,
                             const std::vector<int>& greedy);

/// Euclidean projection onto the probability simplex.
Vec project_to_simplex(const Vec& x);

}  // namespace pmdlab

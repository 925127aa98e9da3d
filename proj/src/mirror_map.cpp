#include "pmdlab/mirror_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmdlab {

namespace {

constexpr double kInteriorFloor = 1e-300;

void check_distribution(const Vec& x, const std::string& what) {
  if (x.size() == 0 || !x.allFinite() || x.minCoeff() < 0.0 ||
      std::abs(x.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(what + " is not a probability distribution");
  }
}

void check_interior(const Vec& x, const std::string& what) {
  if (x.minCoeff() <= 0.0) {
    throw std::domain_error(what + " must be strictly positive for this mirror map");
  }
}

ScalarLegendre xlogx_generator() {
  ScalarLegendre g;
  g.name = "xlogx";
  g.phi = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  g.dphi = [](double x) { return 1.0 + std::log(x); };
  // Clamped so bracket expansion never overflows to inf.
  g.inv_dphi = [](double y) { return std::exp(std::min(y - 1.0, 700.0)); };
  return g;
}

Vec entropy_update(const Vec& pi_s, const Vec& q_s, double eta) {
  // Multiplicative update in log space with max subtraction, so eta * Q far
  // beyond exp range and pi entries near 1e-300 both stay finite.
  Vec logits = pi_s.array().log() + eta * q_s.array();
  logits.array() -= logits.maxCoeff();
  Vec p = logits.array().exp();
  return p / p.sum();
}

Vec greedy_one_hot(const Vec& q_s) {
  int best = 0;
  for (int a = 1; a < q_s.size(); ++a) {
    if (q_s(a) > q_s(best)) best = a;
  }
  Vec p = Vec::Zero(q_s.size());
  p(best) = 1.0;
  return p;
}

/// Solve sum_a inv_dphi(dphi(pi_a) + eta q_a - lambda) = 1 by bisection.
/// The sum is strictly decreasing in lambda; tolerance 1e-12 on the sum,
/// cap 200 iterations. Targets are shifted by their maximum so the
/// multiplier stays O(1) and bisection is not ulp-limited at large eta * Q.
Vec separable_update(const ScalarLegendre& gen, const Vec& pi_s, const Vec& q_s,
                     double eta) {
  const int n = static_cast<int>(pi_s.size());
  Vec target(n);
  for (int a = 0; a < n; ++a) {
    target(a) = gen.dphi(pi_s(a)) + eta * q_s(a);
  }
  target.array() -= target.maxCoeff();

  const auto mass = [&](double lambda) {
    double sum = 0.0;
    for (int a = 0; a < n; ++a) sum += gen.inv_dphi(target(a) - lambda);
    return sum;
  };

  // Bracket the root by doubling away from the largest (shifted) target.
  double lo = 0.0;
  double hi = lo;
  double step = 1.0;
  if (mass(lo) >= 1.0) {
    while (mass(hi) > 1.0) {
      hi += step;
      step *= 2.0;
      if (!std::isfinite(hi)) {
        throw std::runtime_error("separable update: failed to bracket multiplier");
      }
    }
  } else {
    while (mass(lo) < 1.0) {
      lo -= step;
      step *= 2.0;
      if (!std::isfinite(lo)) {
        throw std::runtime_error("separable update: failed to bracket multiplier");
      }
    }
  }

  const double tol = 1e-12;
  double lambda = 0.5 * (lo + hi);
  double residual = mass(lambda) - 1.0;
  for (int it = 0; it < 200 && std::abs(residual) > tol; ++it) {
    if (residual > 0.0) {
      lo = lambda;
    } else {
      hi = lambda;
    }
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // bracket exhausted in doubles
    lambda = mid;
    residual = mass(lambda) - 1.0;
  }
  if (std::abs(residual) > 1e-9) {
    throw std::runtime_error("separable update: bisection residual " +
                             std::to_string(residual) + " exceeds tolerance");
  }

  Vec p(n);
  for (int a = 0; a < n; ++a) p(a) = gen.inv_dphi(target(a) - lambda);
  return p / p.sum();
}

}  // namespace

MirrorMap MirrorMap::negative_entropy() {
  return MirrorMap(MirrorMapKind::NegativeEntropy, "kl", {});
}

MirrorMap MirrorMap::squared_euclidean() {
  return MirrorMap(MirrorMapKind::SquaredEuclidean, "euclid", {});
}

MirrorMap MirrorMap::null_map() {
  return MirrorMap(MirrorMapKind::Null, "pi", {});
}

MirrorMap MirrorMap::separable(ScalarLegendre generator) {
  if (!generator.phi || !generator.dphi || !generator.inv_dphi) {
    throw std::invalid_argument("MirrorMap::separable: generator incomplete");
  }
  std::string id = "generic:" + generator.name;
  return MirrorMap(MirrorMapKind::SeparableGeneric, std::move(id),
                   std::move(generator));
}

MirrorMap MirrorMap::from_id(const std::string& id) {
  if (id == "kl") return negative_entropy();
  if (id == "euclid") return squared_euclidean();
  if (id == "pi") return null_map();
  if (id == "generic" || id == "generic:xlogx") {
    return separable(xlogx_generator());
  }
  throw std::invalid_argument("unknown mirror map id '" + id +
                              "' (expected kl | euclid | pi | generic:<name>)");
}

double bregman_divergence(const MirrorMap& map, const Vec& p, const Vec& q,
                          bool allow_infinite) {
  check_distribution(p, "bregman_divergence: p");
  check_distribution(q, "bregman_divergence: q");
  if (p.size() != q.size()) {
    throw std::invalid_argument("bregman_divergence: size mismatch");
  }
  switch (map.kind()) {
    case MirrorMapKind::Null:
      return 0.0;
    case MirrorMapKind::SquaredEuclidean:
      return 0.5 * (p - q).squaredNorm();
    case MirrorMapKind::NegativeEntropy: {
      double kl = 0.0;
      for (int a = 0; a < p.size(); ++a) {
        if (p(a) == 0.0) continue;  // 0 log 0 = 0
        if (q(a) == 0.0) {
          if (allow_infinite) return std::numeric_limits<double>::infinity();
          throw std::domain_error(
              "bregman_divergence: q has zero mass where p is positive");
        }
        kl += p(a) * (std::log(p(a)) - std::log(q(a)));
      }
      return std::max(kl, 0.0);
    }
    case MirrorMapKind::SeparableGeneric: {
      const ScalarLegendre& gen = map.generator();
      double d = 0.0;
      for (int a = 0; a < p.size(); ++a) {
        if (q(a) == 0.0) {
          if (p(a) == 0.0) continue;
          if (allow_infinite) return std::numeric_limits<double>::infinity();
          throw std::domain_error(
              "bregman_divergence: q has zero mass where p is positive");
        }
        d += gen.phi(p(a)) - gen.phi(q(a)) - gen.dphi(q(a)) * (p(a) - q(a));
      }
      return std::max(d, 0.0);
    }
  }
  throw std::logic_error("bregman_divergence: unreachable");
}

Vec pmd_update_state(const MirrorMap& map, const Vec& pi_s, const Vec& q_s,
                     double eta, bool* floored) {
  if (!(eta > 0.0)) {
    throw std::invalid_argument("pmd_update_state: eta must be positive");
  }
  if (pi_s.size() != q_s.size()) {
    throw std::invalid_argument("pmd_update_state: size mismatch");
  }
  if (!q_s.allFinite()) {
    throw std::invalid_argument("pmd_update_state: non-finite q");
  }
  check_distribution(pi_s, "pmd_update_state: pi_s");
  if (map.requires_interior()) {
    check_interior(pi_s, "pmd_update_state: pi_s");
  }
  if (floored) *floored = false;

  Vec p;
  switch (map.kind()) {
    case MirrorMapKind::NegativeEntropy:
      p = entropy_update(pi_s, q_s, eta);
      break;
    case MirrorMapKind::SquaredEuclidean:
      p = project_to_simplex(pi_s + eta * q_s);
      break;
    case MirrorMapKind::Null:
      p = greedy_one_hot(q_s);
      break;
    case MirrorMapKind::SeparableGeneric:
      p = separable_update(map.generator(), pi_s, q_s, eta);
      break;
  }

  if (map.requires_interior() && p.minCoeff() < kInteriorFloor) {
    // Finite precision can push iterates out of the relative interior even
    // though Legendre theory keeps them inside; floor and renormalise.
    for (int a = 0; a < p.size(); ++a) p(a) = std::max(p(a), kInteriorFloor);
    p /= p.sum();
    if (floored) *floored = true;
  }
  return p;
}

std::vector<int> greedy_set(const Vec& q_s, double tol) {
  if (q_s.size() == 0 || !q_s.allFinite()) {
    throw std::invalid_argument("greedy_set: q must be finite and nonempty");
  }
  const double best = q_s.maxCoeff();
  std::vector<int> out;
  for (int a = 0; a < q_s.size(); ++a) {
    if (q_s(a) >= best - tol) out.push_back(a);
  }
  return out;
}

double min_greedy_divergence(const MirrorMap& map, const Vec& pi_s,
                             const std::vector<int>& greedy) {
  if (greedy.empty()) {
    throw std::invalid_argument("min_greedy_divergence: empty greedy set");
  }
  check_distribution(pi_s, "min_greedy_divergence: pi_s");
  switch (map.kind()) {
    case MirrorMapKind::Null:
      return 0.0;
    case MirrorMapKind::NegativeEntropy: {
      check_interior(pi_s, "min_greedy_divergence: pi_s");
      // Exact minimiser restricts pi_s to the greedy set; the divergence is
      // -log of the greedy mass. Computed from the complement mass when that
      // is the smaller quantity.
      std::vector<bool> in_greedy(pi_s.size(), false);
      for (int a : greedy) in_greedy[a] = true;
      double greedy_mass = 0.0, complement_mass = 0.0;
      for (int a = 0; a < pi_s.size(); ++a) {
        (in_greedy[a] ? greedy_mass : complement_mass) += pi_s(a);
      }
      const double d = complement_mass < 0.5 ? -std::log1p(-complement_mass)
                                             : -std::log(greedy_mass);
      return std::max(d, 0.0);
    }
    case MirrorMapKind::SquaredEuclidean:
    case MirrorMapKind::SeparableGeneric: {
      if (map.requires_interior()) {
        check_interior(pi_s, "min_greedy_divergence: pi_s");
      }
      double best = std::numeric_limits<double>::infinity();
      for (int a : greedy) {
        Vec one_hot = Vec::Zero(pi_s.size());
        one_hot(a) = 1.0;
        best = std::min(best, bregman_divergence(map, one_hot, pi_s));
      }
      return best;
    }
  }
  throw std::logic_error("min_greedy_divergence: unreachable");
}

Vec project_to_simplex(const Vec& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (int j = 0; j < n; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / (j + 1);
    if (u[j] - candidate > 0.0) {
      threshold = candidate;
    }
  }
  Vec p = (x.array() - threshold).cwiseMax(0.0);
  return p;
}

}  // namespace pmdlab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmdlab/types.hpp"

namespace pmdlab {

/// Finite discounted MDP: states S, actions A, transition tensor p(s'|s,a),
/// reward table r(s,a) and discount gamma in [0,1). Immutable after
/// construction; the constructor validates row-stochasticity (1e-12), the
/// reward range and the discount.
class TabularMdp {
 public:
  /// transition[a] is an S x S matrix whose row s is the distribution
  /// p(.|s,a). reward is S x A.
  TabularMdp(std::vector<Mat> transition, Mat reward, double gamma,
             RewardRange range = RewardRange::UnitInterval);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  const Mat& reward() const { return reward_; }
  const Mat& transition(int a) const { return transition_[a]; }
  RewardRange reward_range() const { return range_; }

  /// Transition matrix of the Markov chain induced by a policy:
  /// P_pi(s,s') = sum_a pi(a|s) p(s'|s,a).
  Mat policy_transition(const class Policy& policy) const;
  /// Expected one-step reward under a policy: r_pi(s) = sum_a pi(a|s) r(s,a).
  Vec policy_reward(const class Policy& policy) const;

  /// Interchange format:
  /// {"n_states", "n_actions", "gamma", "reward": [[..]], "transition": [[[..]]]},
  /// row-major, validated against the type invariants on load.
  static TabularMdp from_json(const nlohmann::json& doc,
                              RewardRange range = RewardRange::UnitInterval);
  nlohmann::json to_json() const;

 private:
  int n_states_;
  int n_actions_;
  std::vector<Mat> transition_;
  Mat reward_;
  double gamma_;
  RewardRange range_;
};

/// Row-stochastic policy table pi(a|s), S x A. Rows are validated to be
/// distributions within 1e-12.
class Policy {
 public:
  explicit Policy(Mat probs);

  static Policy uniform(int n_states, int n_actions);
  /// Deterministic policy from an action index per state.
  static Policy deterministic(int n_states, int n_actions,
                              const std::vector<int>& actions);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  const Mat& probs() const { return probs_; }

  /// True if every entry is strictly positive (relative interior of the
  /// policy polytope), as required for Legendre-type mirror maps.
  bool strictly_positive() const;

 private:
  Mat probs_;
};

/// Exact policy evaluation: unique fixed point of V = r_pi + gamma P_pi V.
/// Dense solve for |S| <= 2000, Richardson sweeps above. The result satisfies
/// ||(I - gamma P_pi) V - r_pi||_inf <= 1e-10 or an exception is thrown.
ValueFunction evaluate_policy(const TabularMdp& mdp, const Policy& policy);

/// Q(s,a) = r(s,a) + gamma sum_s' p(s'|s,a) V(s').
QFunction q_from_v(const TabularMdp& mdp, const ValueFunction& v);

/// Discounted visitation distribution
/// d_rho(s) = (1-gamma) sum_t gamma^t P(s_t = s), as a probability vector.
Vec visitation_distribution(const TabularMdp& mdp, const Policy& policy,
                            const Vec& rho);

/// Bellman optimality backup (TV)(s) = max_a r(s,a) + gamma sum p(s'|s,a)V(s').
Vec bellman_optimality_backup(const TabularMdp& mdp, const Vec& v);

struct OptimalSolution {
  ValueFunction value;  ///< exact evaluation of the greedy policy
  Policy policy;        ///< deterministic greedy policy
};

/// Value iteration to tolerance, greedy extraction, then one exact evaluation
/// of the greedy policy. The VI iterate is within tol of V* in sup norm.
OptimalSolution optimal_values(const TabularMdp& mdp, double tol = 1e-12);

/// Distribution mismatch coefficient theta_rho = ||d*_rho / rho||_inf /(1-gamma),
/// with d*_rho the visitation distribution of an optimal policy. Returns
/// +infinity if rho(s) = 0 for a state with d*_rho(s) > 0.
double mismatch_coefficient(const TabularMdp& mdp, const Vec& rho);

/// Gradient of V(rho) under the direct parameterisation:
/// g(s,a) = d_rho(s) Q(s,a) / (1-gamma). Diagnostic only.
Mat policy_gradient(const TabularMdp& mdp, const Policy& policy,
                    const Vec& rho);

/// Minimal sub-optimality gap in a state:
/// Delta(s) = max_a Q(s,a) - max_{a not greedy} Q(s,a), where the greedy set
/// is taken with absolute tolerance tol. Returns +infinity when every action
/// is greedy. Requires at least 2 actions.
double sub_optimality_gap(const QFunction& q, int s, double tol = 1e-9);

/// Seeded random MDP: Dirichlet(1,..,1) transition rows, U[0,1] rewards.
TabularMdp random_mdp(int n_states, int n_actions, double gamma,
                      std::uint64_t seed);

/// Seeded random interior policy (uniform over the simplex per state).
Policy random_policy(int n_states, int n_actions, std::uint64_t seed);

}  // namespace pmdlab

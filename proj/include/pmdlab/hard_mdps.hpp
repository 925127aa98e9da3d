#pragma once

#include "pmdlab/mdp.hpp"

namespace pmdlab {

/// Parameters for the hard chain construction. The induced MDP has
/// |S| = 2n+1 states and 2 actions; delta must lie in (0, (1-gamma) gamma^n)
/// so that moving left is optimal in every chain state, and alpha in
/// (0, delta (1-gamma)] is the initial probability of the optimal action.
struct ChainSpec {
  int n = 1;
  double gamma = 0.9;
  double delta = 0.0;
  double alpha = 0.0;

  void validate() const;
};

struct ChainInstance {
  TabularMdp mdp;
  Policy initial_policy;
};

/// Hard chain used by the rate lower bound.
///
/// State indexing (also the order used in trace CSVs):
///   0        s_0, absorbing, reward 1 under both actions
///   1 .. n   chain states s_i; action 0 moves left with reward 0, action 1
///            moves to the trap s_i' with reward gamma^{i+1} + delta
///   n+i      traps s_i', absorbing with reward gamma^{i+1} + delta
///
/// The initial policy puts mass alpha on action 0 in every state.
ChainInstance lower_bound_chain(const ChainSpec& spec);

/// Chain with the simulation parameters: delta = (1-gamma) gamma^n / 100.
ChainInstance simulation_chain(int n, double gamma, double alpha);

/// n-state MDP whose mismatch coefficient scales linearly with n: action 0
/// pays 1 and jumps to the absorbing state s_1 with probability 1-delta (the
/// rest spread uniformly over the other states); action 1 pays r_max and
/// never reaches s_1. Requires delta <= (1-gamma)(1-r_max)/gamma so action 0
/// is optimal everywhere. State 0 is s_1.
TabularMdp mismatch_mdp(int n, double gamma, double delta, double r_max);

/// Doubles the action space: action A+a has the transitions of a and reward
/// r(s,a) - delta, so every policy has Q(s,a) - Q(s,A+a) = delta and every
/// sub-optimality gap is at most delta. Rewards may leave [0,1]; the result
/// is built with relaxed reward validation.
TabularMdp duplicate_action_mdp(const TabularMdp& base, double delta);

}  // namespace pmdlab

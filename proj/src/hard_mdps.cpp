#include "pmdlab/hard_mdps.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pmdlab {

void ChainSpec::validate() const {
  if (n < 1) throw std::invalid_argument("chain: n must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("chain: gamma must lie in (0,1)");
  }
  const double delta_max = (1.0 - gamma) * std::pow(gamma, n);
  if (!(delta > 0.0 && delta < delta_max)) {
    throw std::invalid_argument("chain: delta must lie in (0, " +
                                std::to_string(delta_max) + ")");
  }
  const double alpha_max = delta * (1.0 - gamma);
  if (!(alpha > 0.0 && alpha <= alpha_max)) {
    throw std::invalid_argument("chain: alpha must lie in (0, " +
                                std::to_string(alpha_max) + "]");
  }
}

ChainInstance lower_bound_chain(const ChainSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const int S = 2 * n + 1;
  const int A = 2;
  const double gamma = spec.gamma;

  std::vector<Mat> transition(A, Mat::Zero(S, S));
  Mat reward = Mat::Zero(S, A);

  // s_0 absorbing with reward 1.
  for (int a = 0; a < A; ++a) {
    transition[a](0, 0) = 1.0;
    reward(0, a) = 1.0;
  }
  for (int i = 1; i <= n; ++i) {
    const double r_i = std::pow(gamma, i + 1) + spec.delta;
    // Chain state s_i: left with reward 0, or into the trap s_i'.
    transition[0](i, i - 1) = 1.0;
    reward(i, 0) = 0.0;
    transition[1](i, n + i) = 1.0;
    reward(i, 1) = r_i;
    // Trap s_i' absorbing with reward r_i.
    for (int a = 0; a < A; ++a) {
      transition[a](n + i, n + i) = 1.0;
      reward(n + i, a) = r_i;
    }
  }

  Mat pi0(S, A);
  pi0.col(0).setConstant(spec.alpha);
  pi0.col(1).setConstant(1.0 - spec.alpha);

  return ChainInstance{TabularMdp(std::move(transition), std::move(reward), gamma),
                       Policy(std::move(pi0))};
}

ChainInstance simulation_chain(int n, double gamma, double alpha) {
  ChainSpec spec;
  spec.n = n;
  spec.gamma = gamma;
  spec.delta = (1.0 - gamma) * std::pow(gamma, n) / 100.0;
  spec.alpha = alpha;
  return lower_bound_chain(spec);
}

TabularMdp mismatch_mdp(int n, double gamma, double delta, double r_max) {
  if (n < 2) throw std::invalid_argument("mismatch_mdp: n must be >= 2");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("mismatch_mdp: gamma must lie in (0,1)");
  }
  if (!(r_max >= 0.0 && r_max < 1.0)) {
    throw std::invalid_argument("mismatch_mdp: r_max must lie in [0,1)");
  }
  const double delta_max = (1.0 - gamma) * (1.0 - r_max) / gamma;
  if (!(delta >= 0.0 && delta <= delta_max)) {
    throw std::invalid_argument("mismatch_mdp: delta must lie in [0, " +
                                std::to_string(delta_max) + "]");
  }

  const int A = 2;
  std::vector<Mat> transition(A, Mat::Zero(n, n));
  Mat reward = Mat::Zero(n, A);

  // State 0 is the absorbing s_1 paying 1 under every action.
  for (int a = 0; a < A; ++a) {
    transition[a](0, 0) = 1.0;
    reward(0, a) = 1.0;
  }
  for (int s = 1; s < n; ++s) {
    reward(s, 0) = 1.0;
    transition[0](s, 0) = 1.0 - delta;
    for (int s2 = 1; s2 < n; ++s2) {
      transition[0](s, s2) = delta / (n - 1);
    }
    reward(s, 1) = r_max;
    for (int s2 = 1; s2 < n; ++s2) {
      transition[1](s, s2) = 1.0 / (n - 1);
    }
  }
  return TabularMdp(std::move(transition), std::move(reward), gamma);
}

TabularMdp duplicate_action_mdp(const TabularMdp& base, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("duplicate_action_mdp: delta must be positive and finite");
  }
  const int S = base.n_states();
  const int A = base.n_actions();
  std::vector<Mat> transition(2 * A);
  Mat reward(S, 2 * A);
  for (int a = 0; a < A; ++a) {
    transition[a] = base.transition(a);
    transition[A + a] = base.transition(a);
    reward.col(a) = base.reward().col(a);
    reward.col(A + a) = base.reward().col(a).array() - delta;
  }
  return TabularMdp(std::move(transition), std::move(reward), base.gamma(),
                    RewardRange::AnyFinite);
}

}  // namespace pmdlab

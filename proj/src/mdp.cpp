#include "pmdlab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pmdlab/rng.hpp"

namespace pmdlab {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kResidualTol = 1e-10;
// Dense LU up to this size, Richardson sweeps above.
constexpr int kDenseSolveLimit = 2000;

void check_distribution_row(const Eigen::RowVectorXd& row, double tol,
                            const std::string& what) {
  if (row.minCoeff() < 0.0) {
    throw std::invalid_argument(what + ": negative entry");
  }
  if (std::abs(row.sum() - 1.0) > tol) {
    throw std::invalid_argument(what + ": row sum " + std::to_string(row.sum()) +
                                " differs from 1 beyond tolerance");
  }
  if (!row.allFinite()) {
    throw std::invalid_argument(what + ": non-finite entry");
  }
}

}  // namespace

TabularMdp::TabularMdp(std::vector<Mat> transition, Mat reward, double gamma,
                       RewardRange range)
    : n_states_(static_cast<int>(reward.rows())),
      n_actions_(static_cast<int>(reward.cols())),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      range_(range) {
  if (n_states_ <= 0 || n_actions_ <= 0) {
    throw std::invalid_argument("TabularMdp: empty state or action space");
  }
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
    throw std::invalid_argument("TabularMdp: gamma must lie in [0,1)");
  }
  if (static_cast<int>(transition_.size()) != n_actions_) {
    throw std::invalid_argument("TabularMdp: need one transition matrix per action");
  }
  for (int a = 0; a < n_actions_; ++a) {
    const Mat& p = transition_[a];
    if (p.rows() != n_states_ || p.cols() != n_states_) {
      throw std::invalid_argument("TabularMdp: transition matrix shape mismatch");
    }
    for (int s = 0; s < n_states_; ++s) {
      check_distribution_row(p.row(s), kRowSumTol,
                             "transition p(.|" + std::to_string(s) + "," +
                                 std::to_string(a) + ")");
    }
  }
  if (!reward_.allFinite()) {
    throw std::invalid_argument("TabularMdp: non-finite reward");
  }
  if (range_ == RewardRange::UnitInterval &&
      (reward_.minCoeff() < 0.0 || reward_.maxCoeff() > 1.0)) {
    throw std::invalid_argument("TabularMdp: rewards outside [0,1]");
  }
}

Mat TabularMdp::policy_transition(const Policy& policy) const {
  Mat p_pi = Mat::Zero(n_states_, n_states_);
  for (int a = 0; a < n_actions_; ++a) {
    p_pi.noalias() += policy.probs().col(a).asDiagonal() * transition_[a];
  }
  return p_pi;
}

Vec TabularMdp::policy_reward(const Policy& policy) const {
  return (policy.probs().cwiseProduct(reward_)).rowwise().sum();
}

TabularMdp TabularMdp::from_json(const nlohmann::json& doc, RewardRange range) {
  for (const char* key : {"n_states", "n_actions", "gamma", "reward", "transition"}) {
    if (!doc.contains(key)) {
      throw std::invalid_argument(std::string("mdp json: missing field '") + key + "'");
    }
  }
  const int S = doc.at("n_states").get<int>();
  const int A = doc.at("n_actions").get<int>();
  const double gamma = doc.at("gamma").get<double>();
  const auto& rj = doc.at("reward");
  const auto& tj = doc.at("transition");
  if (!rj.is_array() || static_cast<int>(rj.size()) != S) {
    throw std::invalid_argument("mdp json: reward must be an S x A array");
  }
  Mat reward(S, A);
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(rj[s].size()) != A) {
      throw std::invalid_argument("mdp json: reward row " + std::to_string(s) +
                                  " has wrong length");
    }
    for (int a = 0; a < A; ++a) reward(s, a) = rj[s][a].get<double>();
  }
  if (!tj.is_array() || static_cast<int>(tj.size()) != S) {
    throw std::invalid_argument("mdp json: transition must be S x A x S");
  }
  std::vector<Mat> transition(A, Mat(S, S));
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(tj[s].size()) != A) {
      throw std::invalid_argument("mdp json: transition[" + std::to_string(s) +
                                  "] has wrong length");
    }
    for (int a = 0; a < A; ++a) {
      if (static_cast<int>(tj[s][a].size()) != S) {
        throw std::invalid_argument("mdp json: transition[" + std::to_string(s) +
                                    "][" + std::to_string(a) + "] has wrong length");
      }
      for (int s2 = 0; s2 < S; ++s2) {
        transition[a](s, s2) = tj[s][a][s2].get<double>();
      }
    }
  }
  return TabularMdp(std::move(transition), std::move(reward), gamma, range);
}

nlohmann::json TabularMdp::to_json() const {
  nlohmann::json doc;
  doc["n_states"] = n_states_;
  doc["n_actions"] = n_actions_;
  doc["gamma"] = gamma_;
  nlohmann::json rj = nlohmann::json::array();
  for (int s = 0; s < n_states_; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < n_actions_; ++a) row.push_back(reward_(s, a));
    rj.push_back(std::move(row));
  }
  doc["reward"] = std::move(rj);
  nlohmann::json tj = nlohmann::json::array();
  for (int s = 0; s < n_states_; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    for (int a = 0; a < n_actions_; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int s2 = 0; s2 < n_states_; ++s2) row.push_back(transition_[a](s, s2));
      per_action.push_back(std::move(row));
    }
    tj.push_back(std::move(per_action));
  }
  doc["transition"] = std::move(tj);
  return doc;
}

Policy::Policy(Mat probs) : probs_(std::move(probs)) {
  if (probs_.rows() <= 0 || probs_.cols() <= 0) {
    throw std::invalid_argument("Policy: empty table");
  }
  for (int s = 0; s < probs_.rows(); ++s) {
    check_distribution_row(probs_.row(s), kRowSumTol,
                           "policy row " + std::to_string(s));
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Mat::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy Policy::deterministic(int n_states, int n_actions,
                             const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != n_states) {
    throw std::invalid_argument("Policy::deterministic: one action per state required");
  }
  Mat probs = Mat::Zero(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw std::invalid_argument("Policy::deterministic: action index out of range");
    }
    probs(s, actions[s]) = 1.0;
  }
  return Policy(std::move(probs));
}

bool Policy::strictly_positive() const { return probs_.minCoeff() > 0.0; }

ValueFunction evaluate_policy(const TabularMdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("evaluate_policy: policy shape mismatch");
  }
  const int S = mdp.n_states();
  const double gamma = mdp.gamma();
  const Mat p_pi = mdp.policy_transition(policy);
  const Vec r_pi = mdp.policy_reward(policy);

  Vec v(S);
  if (S <= kDenseSolveLimit) {
    Mat system = Mat::Identity(S, S) - gamma * p_pi;
    v = system.partialPivLu().solve(r_pi);
  } else {
    // Richardson sweeps V <- r_pi + gamma P_pi V; contraction factor gamma.
    const double tol = 1e-12;
    const int cap = static_cast<int>(10.0 * std::log(1.0 / tol) /
                                     std::max(1e-12, 1.0 - gamma)) + 1;
    v.setZero();
    bool converged = false;
    for (int sweep = 0; sweep < cap; ++sweep) {
      Vec next = r_pi + gamma * (p_pi * v);
      const double diff = (next - v).lpNorm<Eigen::Infinity>();
      v = std::move(next);
      if (diff <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw std::runtime_error(
          "evaluate_policy: Richardson fallback did not reach tolerance within " +
          std::to_string(cap) + " sweeps");
    }
  }

  const double residual =
      (v - gamma * (p_pi * v) - r_pi).lpNorm<Eigen::Infinity>();
  if (!(residual <= kResidualTol)) {
    throw std::runtime_error("evaluate_policy: residual " +
                             std::to_string(residual) + " exceeds 1e-10");
  }
  return v;
}

QFunction q_from_v(const TabularMdp& mdp, const ValueFunction& v) {
  if (!v.allFinite()) {
    throw std::invalid_argument("q_from_v: non-finite value function");
  }
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  QFunction q(S, A);
  for (int a = 0; a < A; ++a) {
    q.col(a) = mdp.reward().col(a) + mdp.gamma() * (mdp.transition(a) * v);
  }
  return q;
}

Vec visitation_distribution(const TabularMdp& mdp, const Policy& policy,
                            const Vec& rho) {
  const int S = mdp.n_states();
  if (rho.size() != S) {
    throw std::invalid_argument("visitation_distribution: rho length mismatch");
  }
  if (rho.minCoeff() < 0.0 || std::abs(rho.sum() - 1.0) > kRowSumTol) {
    throw std::invalid_argument("visitation_distribution: rho is not a distribution");
  }
  const double gamma = mdp.gamma();
  const Mat p_pi = mdp.policy_transition(policy);
  // d = (1-gamma) rho^T (I - gamma P_pi)^{-1}, solved on the transpose.
  Mat system = Mat::Identity(S, S) - gamma * p_pi.transpose();
  Vec d = (1.0 - gamma) * system.partialPivLu().solve(rho);
  d = d.cwiseMax(0.0);
  return d;
}

Vec bellman_optimality_backup(const TabularMdp& mdp, const Vec& v) {
  const int S = mdp.n_states();
  Vec out = Vec::Constant(S, -std::numeric_limits<double>::infinity());
  for (int a = 0; a < mdp.n_actions(); ++a) {
    out = out.cwiseMax(mdp.reward().col(a) + mdp.gamma() * (mdp.transition(a) * v));
  }
  return out;
}

OptimalSolution optimal_values(const TabularMdp& mdp, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("optimal_values: tol must be positive");
  }
  const double gamma = mdp.gamma();
  // Stop when the Bellman residual guarantees ||V - V*||_inf <= tol.
  const double residual_tol = tol * (1.0 - gamma) / std::max(1.0, 2.0 * gamma);
  const int cap =
      static_cast<int>(10.0 * std::log(std::max(2.0, 1.0 / residual_tol)) /
                       std::max(1e-12, 1.0 - gamma)) + 100;

  Vec v = Vec::Zero(mdp.n_states());
  bool converged = false;
  for (int iter = 0; iter < cap; ++iter) {
    Vec next = bellman_optimality_backup(mdp, v);
    const double diff = (next - v).lpNorm<Eigen::Infinity>();
    v = std::move(next);
    if (diff <= residual_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error("optimal_values: iteration cap exceeded");
  }

  // Greedy extraction, lowest index on ties, then one exact evaluation.
  const QFunction q = q_from_v(mdp, v);
  std::vector<int> greedy(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    int best = 0;
    for (int a = 1; a < mdp.n_actions(); ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    greedy[s] = best;
  }
  Policy policy = Policy::deterministic(mdp.n_states(), mdp.n_actions(), greedy);
  return OptimalSolution{evaluate_policy(mdp, policy), std::move(policy)};
}

double mismatch_coefficient(const TabularMdp& mdp, const Vec& rho) {
  const OptimalSolution opt = optimal_values(mdp);
  const Vec d_star = visitation_distribution(mdp, opt.policy, rho);
  double max_ratio = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (rho(s) <= 0.0) {
      if (d_star(s) > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    max_ratio = std::max(max_ratio, d_star(s) / rho(s));
  }
  return max_ratio / (1.0 - mdp.gamma());
}

Mat policy_gradient(const TabularMdp& mdp, const Policy& policy,
                    const Vec& rho) {
  const Vec d = visitation_distribution(mdp, policy, rho);
  const QFunction q = q_from_v(mdp, evaluate_policy(mdp, policy));
  return (d.asDiagonal() * q) / (1.0 - mdp.gamma());
}

double sub_optimality_gap(const QFunction& q, int s, double tol) {
  if (q.cols() < 2) {
    throw std::invalid_argument("sub_optimality_gap: need at least 2 actions");
  }
  if (s < 0 || s >= q.rows()) {
    throw std::invalid_argument("sub_optimality_gap: state index out of range");
  }
  const double best = q.row(s).maxCoeff();
  double second = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < q.cols(); ++a) {
    if (q(s, a) >= best - tol) continue;  // greedy action
    second = std::max(second, q(s, a));
  }
  if (!std::isfinite(second)) return std::numeric_limits<double>::infinity();
  return best - second;
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma,
                      std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x6d6470ULL);  // "mdp"
  std::vector<Mat> transition(n_actions, Mat(n_states, n_states));
  Mat reward(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      transition[a].row(s) = rng.next_simplex(n_states);
      reward(s, a) = rng.next_unit();
    }
  }
  return TabularMdp(std::move(transition), std::move(reward), gamma);
}

Policy random_policy(int n_states, int n_actions, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x706f6cULL);  // "pol"
  Mat probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    probs.row(s) = rng.next_simplex(n_actions);
  }
  return Policy(std::move(probs));
}

}  // namespace pmdlab

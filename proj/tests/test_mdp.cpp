#include <doctest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "pmdlab/hard_mdps.hpp"
#include "pmdlab/mdp.hpp"
#include "pmdlab/rng.hpp"

using namespace pmdlab;

namespace {

TabularMdp single_state_mdp(double reward, double gamma) {
  std::vector<Mat> p{Mat::Ones(1, 1)};
  Mat r(1, 1);
  r(0, 0) = reward;
  return TabularMdp(std::move(p), std::move(r), gamma);
}

TabularMdp two_state_cycle(double gamma) {
  // Deterministic 2-cycle, zero rewards.
  Mat p(2, 2);
  p << 0, 1, 1, 0;
  return TabularMdp({p}, Mat::Zero(2, 1), gamma);
}

}  // namespace

TEST_CASE("mdp construction validates invariants") {
  Mat p(2, 2);
  p << 0.5, 0.5, 0.3, 0.7;
  Mat r = Mat::Constant(2, 1, 0.5);

  CHECK_NOTHROW(TabularMdp({p}, r, 0.9));
  CHECK_THROWS_AS(TabularMdp({p}, r, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TabularMdp({p}, r, -0.1), std::invalid_argument);

  Mat bad_rows = p;
  bad_rows(0, 0) = 0.6;  // row sums to 1.1
  CHECK_THROWS_AS(TabularMdp({bad_rows}, r, 0.9), std::invalid_argument);

  Mat negative = p;
  negative(0, 0) = -0.5;
  negative(0, 1) = 1.5;
  CHECK_THROWS_AS(TabularMdp({negative}, r, 0.9), std::invalid_argument);

  Mat big_reward = Mat::Constant(2, 1, 1.5);
  CHECK_THROWS_AS(TabularMdp({p}, big_reward, 0.9), std::invalid_argument);
  CHECK_NOTHROW(TabularMdp({p}, big_reward, 0.9, RewardRange::AnyFinite));

  Mat negative_reward = Mat::Constant(2, 1, -0.25);
  CHECK_THROWS_AS(TabularMdp({p}, negative_reward, 0.9), std::invalid_argument);
  CHECK_NOTHROW(TabularMdp({p}, negative_reward, 0.9, RewardRange::AnyFinite));
}

TEST_CASE("policy rows must be distributions") {
  Mat good(2, 2);
  good << 0.25, 0.75, 1.0, 0.0;
  CHECK_NOTHROW(Policy{good});

  Mat bad(2, 2);
  bad << 0.25, 0.70, 1.0, 0.0;
  CHECK_THROWS_AS(Policy{bad}, std::invalid_argument);

  CHECK(Policy::uniform(3, 4).probs().isApprox(Mat::Constant(3, 4, 0.25)));
  CHECK_FALSE(Policy(good).strictly_positive());
  CHECK(Policy::uniform(2, 2).strictly_positive());
}

TEST_CASE("evaluate_policy: geometric series on a single state") {
  const TabularMdp mdp = single_state_mdp(0.5, 0.9);
  const Vec v = evaluate_policy(mdp, Policy::uniform(1, 1));
  CHECK(v(0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("evaluate_policy: absorbing chain head is worth 1/(1-gamma)") {
  ChainSpec spec;
  spec.n = 4;
  spec.gamma = 0.9;
  spec.delta = 1e-3;
  spec.alpha = 1e-5;
  const ChainInstance chain = lower_bound_chain(spec);
  const Vec v = evaluate_policy(chain.mdp, chain.initial_policy);
  CHECK(v(0) == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("evaluate_policy matches a long Bellman iteration") {
  const TabularMdp mdp = random_mdp(5, 3, 0.9, 42);
  const Policy policy = random_policy(5, 3, 43);
  const Vec v = evaluate_policy(mdp, policy);
  const Vec oracle = oracles::evaluate_by_sweeps(mdp, policy, 1000000);
  CHECK((v - oracle).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("evaluation residual stays below 1e-10") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TabularMdp mdp = random_mdp(8, 4, 0.99, seed);
    const Policy policy = random_policy(8, 4, seed + 100);
    const Vec v = evaluate_policy(mdp, policy);
    const Vec residual =
        v - mdp.policy_reward(policy) -
        mdp.gamma() * (mdp.policy_transition(policy) * v);
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("values and action values stay in [0, 1/(1-gamma)] for unit rewards") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = random_mdp(5, 3, 0.95, seed + 900);
    const Policy policy = random_policy(5, 3, seed + 950);
    const Vec v = evaluate_policy(mdp, policy);
    const double vmax = 1.0 / (1.0 - mdp.gamma());
    CHECK(v.minCoeff() >= -1e-12);
    CHECK(v.maxCoeff() <= vmax + 1e-12);
    const QFunction q = q_from_v(mdp, v);
    CHECK(q.minCoeff() >= -1e-12);
    CHECK(q.maxCoeff() <= vmax + 1e-12);
    // Bellman consistency of the pair (q, v).
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 3; ++a) {
        const double rhs = mdp.reward()(s, a) +
                           mdp.gamma() * mdp.transition(a).row(s).dot(v);
        CHECK(std::abs(q(s, a) - rhs) < 1e-10);
      }
    }
  }
}

TEST_CASE("evaluation falls back to Richardson sweeps on large state spaces") {
  // 2001 states crosses the dense-solve limit.
  const int S = 2001;
  const TabularMdp mdp = random_mdp(S, 1, 0.5, 404);
  const Policy policy = Policy::uniform(S, 1);
  const Vec v = evaluate_policy(mdp, policy);
  const Vec residual = v - mdp.policy_reward(policy) -
                       mdp.gamma() * (mdp.policy_transition(policy) * v);
  CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
  const Vec oracle = oracles::evaluate_by_sweeps(mdp, policy, 100);
  CHECK((v - oracle).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("q_from_v: gamma zero returns the reward table") {
  const TabularMdp mdp = random_mdp(4, 3, 0.0, 7);
  const Vec v = evaluate_policy(mdp, Policy::uniform(4, 3));
  CHECK(q_from_v(mdp, v).isApprox(mdp.reward(), 1e-15));
}

TEST_CASE("q_from_v: chain trap action value is (gamma^{i+1}+delta)/(1-gamma)") {
  ChainSpec spec;
  spec.n = 3;
  spec.gamma = 0.9;
  spec.delta = 5e-3;
  spec.alpha = 1e-5;
  const ChainInstance chain = lower_bound_chain(spec);
  const Policy policy = random_policy(chain.mdp.n_states(), 2, 5);
  const QFunction q = q_from_v(chain.mdp, evaluate_policy(chain.mdp, policy));
  for (int i = 1; i <= spec.n; ++i) {
    const double expected =
        (std::pow(spec.gamma, i + 1) + spec.delta) / (1.0 - spec.gamma);
    CHECK(q(i, 1) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("q_from_v agrees with a Monte-Carlo rollout oracle") {
  const TabularMdp mdp = random_mdp(3, 2, 0.9, 11);
  const Policy policy = random_policy(3, 2, 12);
  const QFunction q = q_from_v(mdp, evaluate_policy(mdp, policy));
  const auto mc = oracles::rollout_q(mdp, policy, 0, 0, 100000, 400, 2024);
  CHECK(std::abs(q(0, 0) - mc.mean) < 3.0 * mc.standard_error);
}

TEST_CASE("visitation_distribution: absorbing single state") {
  const TabularMdp mdp = single_state_mdp(0.3, 0.5);
  const Vec d = visitation_distribution(mdp, Policy::uniform(1, 1), Vec::Ones(1));
  CHECK(d(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("visitation_distribution: two-state cycle closed form") {
  // Starting at state 0, even steps sit at 0: d(0) = (1-g) sum g^{2t} = 2/3.
  const TabularMdp mdp = two_state_cycle(0.5);
  Vec rho(2);
  rho << 1.0, 0.0;
  const Vec d = visitation_distribution(mdp, Policy::uniform(2, 1), rho);
  CHECK(d(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(d(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("visitation_distribution is a distribution for random inputs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMdp mdp = random_mdp(6, 3, 0.95, seed);
    const Policy policy = random_policy(6, 3, seed + 50);
    Rng rng = Rng::stream(seed, 7);
    const Vec rho = rng.next_simplex(6).transpose();
    const Vec d = visitation_distribution(mdp, policy, rho);
    CHECK(d.minCoeff() >= 0.0);
    CHECK(std::abs(d.sum() - 1.0) < 1e-10);
  }
}

TEST_CASE("optimal_values: single state takes the best arm") {
  Mat p(1, 1);
  p << 1.0;
  Mat r(1, 2);
  r << 0.3, 0.8;
  const TabularMdp mdp = TabularMdp({p, p}, r, 0.9);
  const OptimalSolution opt = optimal_values(mdp);
  CHECK(opt.value(0) == doctest::Approx(8.0).epsilon(1e-10));
  CHECK(opt.policy.probs()(0, 1) == 1.0);
}

TEST_CASE("optimal_values on the chain: gamma^i / (1-gamma), action 0 everywhere") {
  ChainSpec spec;
  spec.n = 5;
  spec.gamma = 0.9;
  spec.delta = 1e-3;
  spec.alpha = 1e-5;
  const ChainInstance chain = lower_bound_chain(spec);
  const OptimalSolution opt = optimal_values(chain.mdp);
  for (int i = 0; i <= spec.n; ++i) {
    CHECK(opt.value(i) ==
          doctest::Approx(std::pow(spec.gamma, i) / (1.0 - spec.gamma))
              .epsilon(1e-9));
    if (i >= 1) CHECK(opt.policy.probs()(i, 0) == 1.0);
  }
}

TEST_CASE("optimal_values agrees with exact policy iteration") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const TabularMdp mdp = random_mdp(6, 4, 0.9, seed);
    const OptimalSolution opt = optimal_values(mdp);
    const auto pi = oracles::policy_iteration(mdp, Policy::uniform(6, 4), 40);
    CHECK((opt.value - pi.value).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("mismatch_coefficient: single state equals 1/(1-gamma)") {
  const TabularMdp mdp = single_state_mdp(0.4, 0.8);
  CHECK(mismatch_coefficient(mdp, Vec::Ones(1)) ==
        doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("mismatch_coefficient matches its definition on a random MDP") {
  const TabularMdp mdp = random_mdp(4, 3, 0.9, 33);
  Rng rng = Rng::stream(33, 9);
  Vec rho = rng.next_simplex(4).transpose();
  const double theta = mismatch_coefficient(mdp, rho);

  const OptimalSolution opt = optimal_values(mdp);
  const Vec d_star = visitation_distribution(mdp, opt.policy, rho);
  const double direct =
      (d_star.array() / rho.array()).maxCoeff() / (1.0 - mdp.gamma());
  CHECK(theta == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("mismatch_coefficient: zero-mass start state yields infinity") {
  const TabularMdp mdp = two_state_cycle(0.5);
  Vec rho(2);
  rho << 1.0, 0.0;  // state 1 unreachable mass in rho but visited
  CHECK(std::isinf(mismatch_coefficient(mdp, rho)));
}

TEST_CASE("policy_gradient: gamma-zero single state returns the rewards") {
  Mat p(1, 1);
  p << 1.0;
  Mat r(1, 2);
  r << 1.0, 0.0;
  const TabularMdp mdp = TabularMdp({p, p}, r, 0.0);
  const Mat g = policy_gradient(mdp, Policy::uniform(1, 2), Vec::Ones(1));
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("policy_gradient matches central finite differences") {
  const TabularMdp mdp = random_mdp(4, 3, 0.9, 77);
  const Policy policy = random_policy(4, 3, 78);
  Rng rng = Rng::stream(77, 13);
  const Vec rho = rng.next_simplex(4).transpose();
  const Mat g = policy_gradient(mdp, policy, rho);

  const double h = 1e-6;
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) {
      Mat up = policy.probs();
      Mat down = policy.probs();
      up(s, a) += h;
      down(s, a) -= h;
      const double fd = (oracles::value_of_table(mdp, up, rho) -
                         oracles::value_of_table(mdp, down, rho)) /
                        (2.0 * h);
      CHECK(g(s, a) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("policy_gradient recomposes from visitation and Q") {
  const TabularMdp mdp = random_mdp(2, 2, 0.9, 99);
  const Policy policy = random_policy(2, 2, 100);
  Vec rho(2);
  rho << 0.25, 0.75;
  const Mat g = policy_gradient(mdp, policy, rho);
  const Vec d = visitation_distribution(mdp, policy, rho);
  const QFunction q = q_from_v(mdp, evaluate_policy(mdp, policy));
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(g(s, a) - d(s) * q(s, a) / (1.0 - mdp.gamma())) < 1e-12);
    }
  }
}

TEST_CASE("sub_optimality_gap basics") {
  QFunction q(1, 2);
  q << 1.0, 0.0;
  CHECK(sub_optimality_gap(q, 0) == doctest::Approx(1.0));

  q << 1.0, 1.0;
  CHECK(std::isinf(sub_optimality_gap(q, 0, 1e-9)));

  QFunction three(1, 3);
  three << 1.0, 1.0 - 1e-12, 0.25;
  CHECK(sub_optimality_gap(three, 0) == doctest::Approx(0.75).epsilon(1e-9));

  QFunction one(1, 1);
  one << 1.0;
  CHECK_THROWS_AS(sub_optimality_gap(one, 0), std::invalid_argument);
}

TEST_CASE("Bellman optimality backup is a gamma-contraction") {
  const TabularMdp mdp = random_mdp(6, 3, 0.9, 5);
  Rng rng = Rng::stream(5, 21);
  for (int rep = 0; rep < 25; ++rep) {
    Vec v1(6), v2(6);
    for (int s = 0; s < 6; ++s) {
      v1(s) = rng.next_range(0.0, 10.0);
      v2(s) = rng.next_range(0.0, 10.0);
    }
    const double lhs = (bellman_optimality_backup(mdp, v1) -
                        bellman_optimality_backup(mdp, v2))
                           .lpNorm<Eigen::Infinity>();
    const double rhs = mdp.gamma() * (v1 - v2).lpNorm<Eigen::Infinity>();
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("performance difference identity") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = random_mdp(5, 3, 0.9, seed + 200);
    const Policy pi = random_policy(5, 3, seed + 300);
    const Policy pi_prime = random_policy(5, 3, seed + 400);
    Rng rng = Rng::stream(seed, 77);
    const Vec rho = rng.next_simplex(5).transpose();

    const Vec v_pi = evaluate_policy(mdp, pi);
    const Vec v_prime = evaluate_policy(mdp, pi_prime);
    const QFunction q_prime = q_from_v(mdp, v_prime);
    const Vec d_pi = visitation_distribution(mdp, pi, rho);

    double rhs = 0.0;
    for (int s = 0; s < 5; ++s) {
      rhs += d_pi(s) *
             q_prime.row(s).dot(pi.probs().row(s) - pi_prime.probs().row(s));
    }
    rhs /= (1.0 - mdp.gamma());
    const double lhs = rho.dot(v_pi) - rho.dot(v_prime);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("json interchange round trip") {
  const TabularMdp mdp = random_mdp(3, 2, 0.85, 123);
  const nlohmann::json doc = mdp.to_json();
  const TabularMdp back = TabularMdp::from_json(doc);
  CHECK(back.n_states() == 3);
  CHECK(back.n_actions() == 2);
  CHECK(back.gamma() == doctest::Approx(0.85));
  CHECK(back.reward().isApprox(mdp.reward()));
  for (int a = 0; a < 2; ++a) {
    CHECK(back.transition(a).isApprox(mdp.transition(a)));
  }
}

TEST_CASE("json loader rejects malformed documents") {
  const TabularMdp mdp = random_mdp(3, 2, 0.85, 123);
  nlohmann::json doc = mdp.to_json();

  nlohmann::json missing = doc;
  missing.erase("gamma");
  CHECK_THROWS_AS(TabularMdp::from_json(missing), std::invalid_argument);

  nlohmann::json bad_shape = doc;
  bad_shape["reward"][0].erase(1);
  CHECK_THROWS_AS(TabularMdp::from_json(bad_shape), std::invalid_argument);

  nlohmann::json bad_rows = doc;
  bad_rows["transition"][0][0][0] = 0.9;
  CHECK_THROWS_AS(TabularMdp::from_json(bad_rows), std::invalid_argument);

  nlohmann::json bad_gamma = doc;
  bad_gamma["gamma"] = 1.2;
  CHECK_THROWS_AS(TabularMdp::from_json(bad_gamma), std::invalid_argument);
}

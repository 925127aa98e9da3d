#include "pmdlab/pmd.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pmdlab {

namespace {

constexpr double kMonotoneSlack = 1e-9;
constexpr double kThreePointSlack = 1e-9;
constexpr double kBoundSlack = 1e-8;

double steady_ns() {
  return static_cast<double>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

void check_three_point(const MirrorMap& map, const Vec& pi_s, const Vec& pi_next,
                       const Vec& q_s, double eta, int k, int s) {
  const double lhs =
      -eta * q_s.dot(pi_next) + bregman_divergence(map, pi_next, pi_s);
  const int n = static_cast<int>(pi_s.size());
  for (int a = 0; a < n; ++a) {
    Vec vertex = Vec::Zero(n);
    vertex(a) = 1.0;
    const double rhs = -eta * q_s(a) + bregman_divergence(map, vertex, pi_s) -
                       bregman_divergence(map, vertex, pi_next);
    if (lhs > rhs + kThreePointSlack) {
      throw VerificationError(
          "three-point descent", k, s,
          "vertex " + std::to_string(a) + ", violation " +
              std::to_string(lhs - rhs));
    }
  }
}

}  // namespace

CkSequence CkSequence::geometric_squared(double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("CkSequence: c0 must be positive");
  return CkSequence(Kind::GeometricSquared, c0, {});
}

CkSequence CkSequence::constant(double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("CkSequence: c0 must be positive");
  return CkSequence(Kind::Constant, c0, {});
}

CkSequence CkSequence::geometric_plain(double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("CkSequence: c0 must be positive");
  return CkSequence(Kind::GeometricPlain, c0, {});
}

CkSequence CkSequence::custom(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("CkSequence: custom sequence must be nonempty");
  }
  for (double c : values) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("CkSequence: entries must be positive and finite");
    }
  }
  const double first = values.front();
  return CkSequence(Kind::Custom, first, std::move(values));
}

double CkSequence::at(int i, double gamma) const {
  if (i < 0) throw std::invalid_argument("CkSequence: negative index");
  switch (kind_) {
    case Kind::GeometricSquared:
      return std::pow(gamma, 2 * (i + 1)) * c0_;
    case Kind::Constant:
      return c0_;
    case Kind::GeometricPlain:
      return std::pow(gamma, i + 1) * c0_;
    case Kind::Custom:
      if (i >= static_cast<int>(values_.size())) {
        throw std::out_of_range("CkSequence: custom sequence too short for index " +
                                std::to_string(i));
      }
      return values_[i];
  }
  throw std::logic_error("CkSequence: unreachable");
}

StepSizeSchedule StepSizeSchedule::adaptive(CkSequence ck, bool per_state) {
  return StepSizeSchedule(Kind::AdaptiveCk, std::move(ck), 0.0, per_state);
}

StepSizeSchedule StepSizeSchedule::geometric(double eta0) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("schedule: eta0 must be positive");
  return StepSizeSchedule(Kind::Geometric, std::nullopt, eta0, false);
}

StepSizeSchedule StepSizeSchedule::constant(double eta0) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("schedule: eta0 must be positive");
  return StepSizeSchedule(Kind::Constant, std::nullopt, eta0, false);
}

StepSizeSchedule StepSizeSchedule::max_combined(CkSequence ck, double eta0,
                                                bool per_state) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("schedule: eta0 must be positive");
  return StepSizeSchedule(Kind::MaxCombined, std::move(ck), eta0, per_state);
}

const CkSequence& StepSizeSchedule::ck() const {
  if (!ck_) throw std::logic_error("schedule carries no c-sequence");
  return *ck_;
}

Vec adaptive_step_size(const TabularMdp& mdp, const Policy& policy_k,
                       const QFunction& q_k, const MirrorMap& map, double c_k,
                       bool per_state, double tol) {
  if (!(c_k > 0.0)) {
    throw std::invalid_argument("adaptive_step_size: c_k must be positive");
  }
  const int S = mdp.n_states();
  Vec by_state(S);
  for (int s = 0; s < S; ++s) {
    const auto greedy = greedy_set(q_k.row(s), tol);
    by_state(s) =
        min_greedy_divergence(map, policy_k.probs().row(s), greedy) / c_k;
  }
  if (per_state) return by_state;
  Vec global(1);
  global(0) = by_state.maxCoeff();
  return global;
}

double theorem1_bound(double gap0, double gamma, const CkSequence& c_seq, int k) {
  if (k < 0) throw std::invalid_argument("theorem1_bound: k must be nonnegative");
  if (k == 0) return gap0;
  if (c_seq.kind() == CkSequence::Kind::GeometricSquared) {
    return std::pow(gamma, k) * (gap0 + c_seq.c0() / (1.0 - gamma));
  }
  return convergence_bound_sum(gap0, gamma, c_seq, k);
}

double convergence_bound_sum(double gap0, double gamma, const CkSequence& c_seq,
                             int k) {
  if (k < 0) {
    throw std::invalid_argument("convergence_bound_sum: k must be nonnegative");
  }
  // gamma^k gap0 + sum_{i=1..k} gamma^{k-i} c_{i-1}, accumulated without
  // forming gamma^{-i}.
  double sum = 0.0;
  for (int i = 1; i <= k; ++i) {
    sum += std::pow(gamma, k - i) * c_seq.at(i - 1, gamma);
  }
  return std::pow(gamma, k) * gap0 + sum;
}

double necessity_threshold(const MirrorMap& map, const Policy& policy_k, int s,
                           const QFunction& q_k, int k, double gamma) {
  if (map.kind() != MirrorMapKind::NegativeEntropy) {
    throw std::invalid_argument(
        "necessity_threshold: defined for the negative-entropy map only");
  }
  const auto greedy = greedy_set(q_k.row(s));
  const double kl = min_greedy_divergence(map, policy_k.probs().row(s), greedy);
  return kl / (2.0 * std::pow(gamma, k));
}

IterationTrace run_exact_pmd(const TabularMdp& mdp, const MirrorMap& map,
                             const StepSizeSchedule& schedule, const Policy& pi0,
                             int iterations, double tol, bool verify) {
  if (iterations < 0) {
    throw std::invalid_argument("run_exact_pmd: iterations must be nonnegative");
  }
  if (map.requires_interior() && !pi0.strictly_positive()) {
    throw std::domain_error(
        "run_exact_pmd: initial policy must lie in the relative interior for "
        "Legendre-type mirror maps");
  }
  const int S = mdp.n_states();
  const double gamma = mdp.gamma();
  const OptimalSolution opt = optimal_values(mdp);

  IterationTrace trace;
  trace.gamma = gamma;
  trace.optimal_value = opt.value;
  trace.records.reserve(iterations + 1);

  Policy policy = pi0;
  ValueFunction v = evaluate_policy(mdp, policy);
  QFunction q = q_from_v(mdp, v);
  ValueFunction prev_v;
  QFunction prev_q;
  trace.gap0 = (opt.value - v).lpNorm<Eigen::Infinity>();

  for (int k = 0; k <= iterations; ++k) {
    const double t0 = steady_ns();
    IterationRecord rec;
    rec.k = k;
    rec.sup_gap = (opt.value - v).lpNorm<Eigen::Infinity>();
    rec.min_greedy_div.resize(S);
    for (int s = 0; s < S; ++s) {
      rec.min_greedy_div(s) =
          min_greedy_divergence(map, policy.probs().row(s),
                                greedy_set(q.row(s), tol));
    }
    rec.bound_theorem1 =
        schedule.has_bound()
            ? convergence_bound_sum(trace.gap0, gamma, schedule.ck(), k)
            : std::numeric_limits<double>::quiet_NaN();

    if (k > 0) {
      int worst_state = 0;
      rec.min_q_increase = (q - prev_q).minCoeff();
      rec.q_monotone = rec.min_q_increase >= -kMonotoneSlack;
      const double min_v_increase = (v - prev_v).minCoeff(&worst_state);
      rec.value_monotone = min_v_increase >= -kMonotoneSlack;
      if (verify) {
        if (!rec.q_monotone) {
          int qs = 0, qa = 0;
          (q - prev_q).minCoeff(&qs, &qa);
          throw VerificationError("monotone Q-improvement", k, qs,
                                  "Q dropped by " +
                                      std::to_string(-rec.min_q_increase));
        }
        if (!rec.value_monotone) {
          throw VerificationError("monotone value improvement", k, worst_state,
                                  "V dropped by " +
                                      std::to_string(-min_v_increase));
        }
        if (schedule.has_bound() &&
            rec.sup_gap > rec.bound_theorem1 + kBoundSlack) {
          throw VerificationError(
              "adaptive convergence bound", k, -1,
              "gap " + std::to_string(rec.sup_gap) + " exceeds bound " +
                  std::to_string(rec.bound_theorem1));
        }
      }
    }

    if (k == iterations) {
      rec.eta = 0.0;  // no step taken from the final iterate
      rec.elapsed_ns = static_cast<std::int64_t>(steady_ns() - t0);
      trace.records.push_back(std::move(rec));
      break;
    }

    // Step size for the update pi^k -> pi^{k+1}.
    const bool per_state = schedule.per_state();
    Vec eta(S);
    switch (schedule.kind()) {
      case StepSizeSchedule::Kind::AdaptiveCk: {
        const double c_k = schedule.ck().at(k, gamma);
        Vec raw = Vec::Constant(S, rec.min_greedy_div.maxCoeff() / c_k);
        if (per_state) raw = rec.min_greedy_div / c_k;
        // A zero adaptive value means the policy already sits on its greedy
        // set; any positive step satisfies the condition.
        eta = raw.unaryExpr([](double x) { return x > 0.0 ? x : 1.0; });
        break;
      }
      case StepSizeSchedule::Kind::Geometric:
        eta.setConstant(schedule.eta0() / std::pow(gamma, k));
        break;
      case StepSizeSchedule::Kind::Constant:
        eta.setConstant(schedule.eta0());
        break;
      case StepSizeSchedule::Kind::MaxCombined: {
        const double c_k = schedule.ck().at(k, gamma);
        const double geometric = schedule.eta0() / std::pow(gamma, k);
        Vec raw = Vec::Constant(S, rec.min_greedy_div.maxCoeff() / c_k);
        if (per_state) raw = rec.min_greedy_div / c_k;
        eta = raw.cwiseMax(geometric);
        break;
      }
    }
    rec.eta = eta.maxCoeff();
    if (per_state) rec.eta_per_state = eta;

    Mat next_probs(S, mdp.n_actions());
    for (int s = 0; s < S; ++s) {
      bool floored = false;
      Vec updated =
          pmd_update_state(map, policy.probs().row(s), q.row(s), eta(s), &floored);
      rec.domain_floored = rec.domain_floored || floored;
      if (verify) {
        check_three_point(map, policy.probs().row(s), updated, q.row(s), eta(s),
                          k, s);
      }
      next_probs.row(s) = updated;
    }

    prev_v = v;
    prev_q = q;
    policy = Policy(std::move(next_probs));
    v = evaluate_policy(mdp, policy);
    q = q_from_v(mdp, v);

    rec.elapsed_ns = static_cast<std::int64_t>(steady_ns() - t0);
    trace.records.push_back(std::move(rec));
  }

  trace.final_policy = policy.probs();
  trace.final_value = v;
  return trace;
}

}  // namespace pmdlab

#include "pmdlab/inexact.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace pmdlab {

namespace {

constexpr double kLemmaSlack = 1e-9;

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void EstimatorConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("estimator: horizon must be >= 1");
  if (trajectories < 1) {
    throw std::invalid_argument("estimator: trajectories must be >= 1");
  }
}

QFunction estimate_q(GenerativeModel& model, const Policy& policy,
                     const EstimatorConfig& config, std::uint64_t iteration) {
  config.validate();
  const TabularMdp& mdp = model.mdp();
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const int H = config.horizon;
  const int M = config.trajectories;
  const double gamma = mdp.gamma();

  QFunction q_hat = QFunction::Zero(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double total = 0.0;
      for (int m = 0; m < M; ++m) {
        Rng rng = model.rollout_stream(iteration, s, a, m);
        int cur_s = s;
        int cur_a = a;
        double ret = 0.0;
        double disc = 1.0;
        for (int t = 0; t < H; ++t) {
          ret += disc * mdp.reward()(cur_s, cur_a);
          disc *= gamma;
          const int next_s = model.sample_transition(cur_s, cur_a, rng);
          if (t + 1 < H) {
            cur_a = rng.next_categorical(policy.probs().row(next_s));
            cur_s = next_s;
          }
        }
        total += ret;
      }
      q_hat(s, a) = total / M;
    }
  }
  return q_hat;
}

double accuracy_bound(std::int64_t horizon, double gamma) {
  if (horizon < 1) throw std::invalid_argument("accuracy_bound: horizon must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("accuracy_bound: gamma must lie in [0,1)");
  }
  return 2.0 * std::pow(gamma, static_cast<double>(horizon)) / (1.0 - gamma);
}

SampleComplexityParams sample_complexity_parameters(double gamma, double epsilon,
                                   double confidence_delta, int n_states,
                                   int n_actions) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("sample_complexity_parameters: epsilon must be positive");
  }
  if (!(confidence_delta > 0.0 && confidence_delta < 1.0)) {
    throw std::invalid_argument("sample_complexity_parameters: confidence must lie in (0,1)");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("sample_complexity_parameters: gamma must lie in (0,1)");
  }
  const double horizon_scale = 1.0 / (1.0 - gamma);

  SampleComplexityParams out;
  // Strictly greater than the displayed lower bound.
  out.iterations = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil(horizon_scale * std::log(4.0 / ((1.0 - gamma) * epsilon)))) +
             1);
  out.horizon = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(
             horizon_scale *
             std::log(16.0 / (std::pow(1.0 - gamma, 3) * epsilon)))));

  const double log_term = std::log(
      2.0 * static_cast<double>(out.iterations) * n_states * n_actions /
      confidence_delta);
  const double m_real = std::ceil(
      0.5 * std::pow(gamma, -2.0 * static_cast<double>(out.horizon)) * log_term);
  out.trajectories = std::max(1.0, m_real);
  if (out.trajectories >=
      static_cast<double>(std::numeric_limits<std::int64_t>::max())) {
    out.trajectories_int = std::numeric_limits<std::int64_t>::max();
    out.m_capped = true;
  } else {
    out.trajectories_int = static_cast<std::int64_t>(out.trajectories);
  }
  out.total_samples = static_cast<double>(n_states) * n_actions *
                      static_cast<double>(out.iterations) *
                      static_cast<double>(out.horizon) * out.trajectories;
  out.tau_bound = accuracy_bound(out.horizon, gamma);
  return out;
}

IterationTrace run_inexact_pmd(GenerativeModel& model, const MirrorMap& map,
                               int iterations, const EstimatorConfig& config,
                               const Policy& pi0, bool verify,
                               std::optional<CkSequence> c_seq,
                               QEstimator estimator) {
  config.validate();
  if (iterations < 0) {
    throw std::invalid_argument("run_inexact_pmd: iterations must be nonnegative");
  }
  if (map.requires_interior() && !pi0.strictly_positive()) {
    throw std::domain_error(
        "run_inexact_pmd: initial policy must lie in the relative interior for "
        "Legendre-type mirror maps");
  }
  const TabularMdp& mdp = model.mdp();
  const int S = mdp.n_states();
  const double gamma = mdp.gamma();
  // Default step-size scaling c_k = gamma^{2k+1}.
  const CkSequence ck =
      c_seq ? *c_seq : CkSequence::geometric_squared(1.0 / gamma);
  if (!estimator) {
    estimator = [&config](GenerativeModel& m, const Policy& p, int k) {
      return estimate_q(m, p, config, static_cast<std::uint64_t>(k));
    };
  }

  const OptimalSolution opt = optimal_values(mdp);
  const Vec rho_uniform = Vec::Constant(S, 1.0 / S);
  const double tau_aux = 8.0 * std::pow(gamma, config.horizon) /
                         std::pow(1.0 - gamma, 3);

  IterationTrace trace;
  trace.inexact = true;
  trace.gamma = gamma;
  trace.optimal_value = opt.value;
  trace.records.reserve(iterations + 1);

  Policy policy = pi0;
  ValueFunction v = evaluate_policy(mdp, policy);
  QFunction q_exact = q_from_v(mdp, v);
  trace.gap0 = (opt.value - v).lpNorm<Eigen::Infinity>();

  ValueFunction prev_v;
  QFunction prev_q;
  double prev_tau = 0.0;

  for (int k = 0; k <= iterations; ++k) {
    const std::int64_t t0 = steady_ns();
    IterationRecord rec;
    rec.k = k;
    rec.sup_gap = (opt.value - v).lpNorm<Eigen::Infinity>();
    rec.bound_theorem1 = convergence_bound_sum(trace.gap0, gamma, ck, k) + tau_aux;
    rec.samples_cumulative = model.sample_count();

    if (k > 0) {
      rec.min_q_increase = (q_exact - prev_q).minCoeff();
      const double q_slack = 2.0 * prev_tau * gamma / (1.0 - gamma);
      const double v_slack = 2.0 * prev_tau / (1.0 - gamma);
      rec.q_monotone = rec.min_q_increase >= -q_slack - kLemmaSlack;
      const double v_drop =
          rho_uniform.dot(v) - rho_uniform.dot(prev_v);
      rec.value_monotone = v_drop >= -v_slack - kLemmaSlack;
      if (verify) {
        if (!rec.value_monotone) {
          throw VerificationError(
              "inexact descent lemma (value)", k, -1,
              "V(uniform) dropped by " + std::to_string(-v_drop) +
                  " against slack " + std::to_string(v_slack));
        }
        if (!rec.q_monotone) {
          int qs = 0, qa = 0;
          (q_exact - prev_q).minCoeff(&qs, &qa);
          throw VerificationError(
              "inexact descent lemma (Q)", k, qs,
              "Q dropped by " + std::to_string(-rec.min_q_increase) +
                  " against slack " + std::to_string(q_slack));
        }
      }
    }

    if (k == iterations) {
      rec.eta = 0.0;
      rec.elapsed_ns = steady_ns() - t0;
      trace.records.push_back(std::move(rec));
      break;
    }

    const QFunction q_hat = estimator(model, policy, k);
    rec.tau_realized = (q_hat - q_exact).lpNorm<Eigen::Infinity>();
    rec.samples_cumulative = model.sample_count();

    // Adaptive step from the estimated greedy sets.
    const double c_k = ck.at(k, gamma);
    rec.min_greedy_div.resize(S);
    for (int s = 0; s < S; ++s) {
      rec.min_greedy_div(s) = min_greedy_divergence(
          map, policy.probs().row(s), greedy_set(q_hat.row(s)));
    }
    double eta = rec.min_greedy_div.maxCoeff() / c_k;
    if (eta <= 0.0) eta = 1.0;
    rec.eta = eta;

    Mat next_probs(S, mdp.n_actions());
    for (int s = 0; s < S; ++s) {
      bool floored = false;
      next_probs.row(s) =
          pmd_update_state(map, policy.probs().row(s), q_hat.row(s), eta, &floored);
      rec.domain_floored = rec.domain_floored || floored;
    }

    prev_v = v;
    prev_q = q_exact;
    prev_tau = rec.tau_realized;
    policy = Policy(std::move(next_probs));
    v = evaluate_policy(mdp, policy);
    q_exact = q_from_v(mdp, v);

    rec.elapsed_ns = steady_ns() - t0;
    trace.records.push_back(std::move(rec));
  }

  trace.final_policy = policy.probs();
  trace.final_value = v;
  return trace;
}

}  // namespace pmdlab

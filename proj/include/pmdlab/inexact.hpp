#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>

#include "pmdlab/mdp.hpp"
#include "pmdlab/pmd.hpp"
#include "pmdlab/rng.hpp"

namespace pmdlab {

/// Sampling access to an MDP's transitions. Every sampled transition
/// increments a monotone counter. Randomness comes from counter-based streams
/// derived from the master seed and a (iteration, state, action, trajectory)
/// tuple, so results do not depend on rollout execution order.
class GenerativeModel {
 public:
  GenerativeModel(TabularMdp mdp, std::uint64_t seed)
      : mdp_(std::move(mdp)), seed_(seed), samples_(0) {}

  const TabularMdp& mdp() const { return mdp_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t sample_count() const { return samples_.load(); }

  /// Draw s' ~ p(.|s,a) using the given stream; counts one sample.
  int sample_transition(int s, int a, Rng& rng) {
    samples_.fetch_add(1, std::memory_order_relaxed);
    return rng.next_categorical(mdp_.transition(a).row(s));
  }

  Rng rollout_stream(std::uint64_t iteration, int s, int a, int trajectory) const {
    return Rng::stream(seed_, iteration, static_cast<std::uint64_t>(s) << 20 |
                                             static_cast<std::uint64_t>(a),
                       trajectory);
  }

 private:
  TabularMdp mdp_;
  std::uint64_t seed_;
  std::atomic<std::int64_t> samples_;
};

/// Truncated Monte-Carlo estimator parameters: rollout horizon H >= 1 and
/// trajectories per state-action pair M >= 1.
struct EstimatorConfig {
  int horizon = 1;
  int trajectories = 1;

  void validate() const;
};

/// Parameters delivered by the sample-complexity analysis. The trajectory
/// count M is astronomically large by design at tight accuracy; it is carried
/// as a real number and the integer field saturates with m_capped set.
struct SampleComplexityParams {
  std::int64_t iterations = 0;    ///< K
  std::int64_t horizon = 0;       ///< H
  double trajectories = 0.0;      ///< M (exact ceil value as a real)
  std::int64_t trajectories_int = 0;
  bool m_capped = false;
  double total_samples = 0.0;     ///< |S| |A| K H M
  double tau_bound = 0.0;         ///< 2 gamma^H / (1-gamma)
};

/// Monte-Carlo Q estimate: for every (s,a), the average over M rollouts of
/// the H-step discounted return started at (s,a) under the policy. Each
/// rollout draws exactly H transitions, so one call consumes
/// |S| |A| M H samples. Estimates lie in [0, (1-gamma^H)/(1-gamma)].
QFunction estimate_q(GenerativeModel& model, const Policy& policy,
                     const EstimatorConfig& config, std::uint64_t iteration = 0);

/// High-probability accuracy of the truncated estimator: 2 gamma^H / (1-gamma).
double accuracy_bound(std::int64_t horizon, double gamma);

/// K, H, M satisfying the sample-complexity displays for accuracy epsilon and
/// confidence 1 - confidence_delta.
SampleComplexityParams sample_complexity_parameters(double gamma, double epsilon,
                                   double confidence_delta, int n_states,
                                   int n_actions);

/// Pluggable Q estimator (tests substitute the exact Q here).
using QEstimator =
    std::function<QFunction(GenerativeModel&, const Policy&, int k)>;

/// Inexact PMD: per iteration, estimate Q, compute the adaptive step from the
/// estimated greedy sets with c_k (default gamma^{2k+1}), and update every
/// state. The trace records the gap against the exactly computed V*, the
/// realized estimation error tau_k = ||Qhat^k - Q^k||_inf and the cumulative
/// sample count. With verify set, asserts the inexact descent lemmas using
/// the measured tau: V^{k+1}(uniform) >= V^k(uniform) - 2 tau_k/(1-gamma) - 1e-9
/// and Q^{k+1} >= Q^k - 2 tau_k gamma/(1-gamma) - 1e-9.
IterationTrace run_inexact_pmd(GenerativeModel& model, const MirrorMap& map,
                               int iterations, const EstimatorConfig& config,
                               const Policy& pi0, bool verify = false,
                               std::optional<CkSequence> c_seq = std::nullopt,
                               QEstimator estimator = nullptr);

}  // namespace pmdlab

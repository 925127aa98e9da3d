#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "pmdlab/mdp.hpp"
#include "pmdlab/mirror_map.hpp"
#include "pmdlab/types.hpp"

namespace pmdlab {

/// Sequence {c_k} entering the adaptive step size eta_k = max_s D_k(s) / c_k
/// and the convergence bound.
class CkSequence {
 public:
  enum class Kind { GeometricSquared, Constant, GeometricPlain, Custom };

  /// c_i = gamma^{2(i+1)} c0 — the choice giving the gamma-rate bound
  /// gamma^k (gap0 + c0/(1-gamma)).
  static CkSequence geometric_squared(double c0);
  /// c_i = c0 — linear convergence up to an accuracy floor c0/(1-gamma).
  static CkSequence constant(double c0);
  /// c_i = gamma^{i+1} c0 — gamma-rate with a k*c0 factor in early iterations.
  static CkSequence geometric_plain(double c0);
  static CkSequence custom(std::vector<double> values);

  double at(int i, double gamma) const;
  Kind kind() const { return kind_; }
  double c0() const { return c0_; }
  const std::vector<double>& values() const { return values_; }

 private:
  CkSequence(Kind kind, double c0, std::vector<double> values)
      : kind_(kind), c0_(c0), values_(std::move(values)) {}
  Kind kind_;
  double c0_ = 0.0;
  std::vector<double> values_;
};

/// Step-size rule producing eta_k (or a per-state vector of step sizes).
class StepSizeSchedule {
 public:
  enum class Kind { AdaptiveCk, Geometric, Constant, MaxCombined };

  static StepSizeSchedule adaptive(CkSequence ck, bool per_state = false);
  static StepSizeSchedule geometric(double eta0);
  static StepSizeSchedule constant(double eta0);
  /// Pointwise max of the adaptive rule and eta0 / gamma^k.
  static StepSizeSchedule max_combined(CkSequence ck, double eta0,
                                       bool per_state = false);

  Kind kind() const { return kind_; }
  bool per_state() const { return per_state_; }
  double eta0() const { return eta0_; }
  const CkSequence& ck() const;
  /// True when the schedule guarantees the adaptive condition, so the
  /// convergence bound of the adaptive analysis applies.
  bool has_bound() const {
    return kind_ == Kind::AdaptiveCk || kind_ == Kind::MaxCombined;
  }

 private:
  StepSizeSchedule(Kind kind, std::optional<CkSequence> ck, double eta0,
                   bool per_state)
      : kind_(kind), ck_(std::move(ck)), eta0_(eta0), per_state_(per_state) {}
  Kind kind_;
  std::optional<CkSequence> ck_;
  double eta0_ = 0.0;
  bool per_state_ = false;
};

/// One row of an iteration trace. Row k describes the iterate pi^k together
/// with the step taken from it.
struct IterationRecord {
  int k = 0;
  double sup_gap = 0.0;         ///< ||V* - V^k||_inf
  double eta = 0.0;             ///< step size applied at k (max over states)
  Vec eta_per_state;            ///< per-state steps (empty in global mode)
  Vec min_greedy_div;           ///< per-state min greedy Bregman divergence
  double bound_theorem1 = 0.0;  ///< adaptive-schedule bound value; NaN if n/a
  double min_q_increase = 0.0;  ///< min over (s,a) of Q^k - Q^{k-1}; 0 at k=0
  bool value_monotone = true;
  bool q_monotone = true;
  bool domain_floored = false;  ///< interior floor triggered during update
  double tau_realized = std::numeric_limits<double>::quiet_NaN();
  std::int64_t samples_cumulative = 0;
  std::int64_t elapsed_ns = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;  ///< length K+1, contiguous from k=0
  Mat final_policy;                      ///< pi^K
  ValueFunction final_value;             ///< V^K
  ValueFunction optimal_value;           ///< V* used for the gaps
  double gap0 = 0.0;
  double gamma = 0.0;
  bool inexact = false;
};

/// Adaptive step size of the exact analysis: in global mode
///   (1/c_k) max_s min_greedy_divergence(map, pi_s, greedy(Q_s)),
/// in per-state mode the vector of per-state values without the max.
/// Returns a length-1 vector in global mode. May be exactly zero when the
/// current policy is already concentrated on its greedy set; callers
/// substitute a positive value (any satisfies the condition).
Vec adaptive_step_size(const TabularMdp& mdp, const Policy& policy_k,
                       const QFunction& q_k, const MirrorMap& map, double c_k,
                       bool per_state, double tol = 1e-9);

/// Bound gamma^k (gap0 + sum_{i=1..k} gamma^{-i} c_{i-1}); for the
/// GeometricSquared sequence the simplified form gamma^k (gap0 + c0/(1-gamma))
/// is returned (k = 0 always yields gap0 exactly).
double theorem1_bound(double gap0, double gamma, const CkSequence& c_seq, int k);

/// The finite-sum bound itself, for any sequence. theorem1_bound's
/// GeometricSquared shortcut upper-bounds this; per-iteration verification
/// and the trace's bound column use the sum form.
double convergence_bound_sum(double gap0, double gamma, const CkSequence& c_seq,
                             int k);

/// Step-size lower threshold of the necessity result for the negative
/// entropy: KL(greedy policy, pi^k_s) / (2 gamma^k). Diagnostic for the
/// necessity experiment.
double necessity_threshold(const MirrorMap& map, const Policy& policy_k, int s,
                           const QFunction& q_k, int k, double gamma);

/// Exact PMD iteration loop. Produces a trace of length iterations+1. With
/// verify set, asserts per iteration: monotone Q (slack 1e-9), monotone V
/// (1e-9), the three-point descent inequality against every simplex vertex in
/// every state (1e-9), and — for schedules carrying a c-sequence — the
/// adaptive convergence bound (slack 1e-8). A violation throws
/// VerificationError naming the inequality, iteration and state.
IterationTrace run_exact_pmd(const TabularMdp& mdp, const MirrorMap& map,
                             const StepSizeSchedule& schedule, const Policy& pi0,
                             int iterations, double tol = 1e-9,
                             bool verify = false);

}  // namespace pmdlab

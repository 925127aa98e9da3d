#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pmdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// State value vector, length |S|.
using ValueFunction = Eigen::VectorXd;

/// Action values, |S| x |A|.
using QFunction = Eigen::MatrixXd;

/// Reward validation mode. UnitInterval enforces r(s,a) in [0,1], the range
/// under which the convergence bounds are certified. AnyFinite admits
/// arbitrary finite rewards (bounds are then not certified).
enum class RewardRange { UnitInterval, AnyFinite };

/// Thrown when a per-iteration verification check fails. Carries the name of
/// the violated inequality, the iteration and the state where it broke.
class VerificationError : public std::runtime_error {
 public:
  VerificationError(std::string inequality, int iteration, int state,
                    const std::string& detail)
      : std::runtime_error("verification failed: " + inequality +
                           " at iteration " + std::to_string(iteration) +
                           (state >= 0 ? ", state " + std::to_string(state)
                                       : std::string()) +
                           (detail.empty() ? "" : " (" + detail + ")")),
        inequality_(std::move(inequality)),
        iteration_(iteration),
        state_(state) {}

  const std::string& inequality() const { return inequality_; }
  int iteration() const { return iteration_; }
  int state() const { return state_; }

 private:
  std::string inequality_;
  int iteration_;
  int state_;
};

}  // namespace pmdlab

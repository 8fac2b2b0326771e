#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace stiefel {

// Split-Rhat over >= 2 chains of one parameter: every chain is halved and
// the between/within variance ratio of the half-chains is reported.
// Returns +inf when the within-chain variance vanishes.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

// Multi-chain effective sample size using the autocorrelation-sum
// estimator with Geyer's initial-positive-sequence truncation. Floored
// at 1 and capped at the total draw count.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

struct Diagnostics {
  std::vector<std::string> columns;
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess;
};

// Per-column diagnostics over per-chain draw matrices (iters x params).
Diagnostics compute_diagnostics(const std::vector<Eigen::MatrixXd>& chains,
                                std::vector<std::string> columns);

}  // namespace stiefel

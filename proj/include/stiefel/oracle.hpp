#pragma once

#include "stiefel/givens.hpp"
#include "stiefel/rng.hpp"

#include <functional>
#include <vector>

namespace stiefel::oracle {

// Reference implementations used by tests and the `check` CLI command.
// Everything here is deliberately independent of the analytic paths it
// cross-checks.

// Haar (uniform) draw on V_{p,n}: QR of a Gaussian matrix with column
// signs fixed so the R diagonal is positive.
StiefelMatrix haar_sample(const Shape& shape, Rng& rng);
StiefelMatrix haar_sample(const Shape& shape, std::uint64_t seed);

// Change-of-measure term evaluated the expensive way: finite-difference
// column Jacobians of the forward map contracted against the trailing
// columns of the full n x n rotation product, then log |det| of the
// assembled d x d matrix. Guarded to n <= 8, p <= 4.
double numeric_log_measure(const AngleVector& theta);

struct KsReport {
  double statistic = 0.0;
  int n_samples = 0;
  bool pass = false;
};

// One-sample Kolmogorov-Smirnov statistic against a supplied CDF.
KsReport ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf,
                      double threshold = 0.05);

// Two-sample KS distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Marginal CDF of one Givens angle under the Haar measure: uniform for
// full-circle angles, normalized cos^exponent for half-circle angles
// (integrated numerically on a cached grid).
std::function<double(double)> angle_marginal_cdf(const AngleIndex& index);

// Central finite differences of a scalar function.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-5);

}  // namespace stiefel::oracle

#pragma once

#include "stiefel/givens.hpp"

#include <utility>
#include <vector>

namespace stiefel {

// Mapping between unconstrained sampler coordinates and in-range angle
// vectors. Each full-circle angle is embedded as an (x, y) pair with a
// soft Gaussian shell prior on r = sqrt(x^2 + y^2), which keeps the two
// ends of the interval connected and the arctangent well conditioned.
// Each half-circle angle is a logistic-transformed real confined to
// (-pi/2 + epsilon, pi/2 - epsilon) so the measure term never hits its
// singularity.
struct ChartConfig {
  double epsilon = 1e-5;  // half-circle boundary margin
  double r_mean = 1.0;    // shell prior mean
  double r_sd = 0.1;      // shell prior standard deviation
  // Fold every column lead into [-pi/2, pi/2] (reflecting its first
  // follower); removes column-sign posterior modes for densities that are
  // even under column negation.
  bool mirrored = false;
};

void validate(const ChartConfig& cfg);

struct ChartResult {
  AngleVector theta;  // post-mirror when mirrored is set
  double log_adjust = 0.0;
  bool degenerate = false;  // some (x, y) pair too close to the origin
};

// Length of the unconstrained vector: d + p (each of the p full-circle
// angles takes two slots, laid out inline in angle order).
int unconstrained_dim(const Shape& shape);

ChartResult constrain(const Eigen::VectorXd& xi, const ChartConfig& cfg, const Shape& shape);

// Inverse of constrain for initialization; full-circle angles map to the
// unit circle point (cos theta, sin theta). Throws on out-of-range input.
Eigen::VectorXd unconstrain(const AngleVector& theta, const ChartConfig& cfg);

// Piecewise reflection sending the lead angle into [-pi/2, pi/2] and
// negating the follower when the hemisphere boundary is crossed.
std::pair<double, double> mirror(double lead, double follow);

namespace detail {

// Forward chart pass with the bookkeeping the gradient evaluator needs.
struct ChartForward {
  Eigen::VectorXd theta_raw;    // before mirroring
  Eigen::VectorXd theta;        // after mirroring (equal when not mirrored)
  Eigen::VectorXd follow_sign;  // mirror pullback factor per angle (+-1)
  double log_adjust = 0.0;
  bool degenerate = false;
  // caches, indexed by angle position
  std::vector<int> xi_offset;  // first xi slot of each angle
  Eigen::VectorXd x, y, r;     // full-circle pairs (unused slots zero)
  Eigen::VectorXd sig;         // logistic(z) for half-circle angles
};

ChartForward chart_forward(const Eigen::VectorXd& xi, const ChartConfig& cfg, const Shape& shape);

// Pulls d logp / d theta_raw back to d logp / d xi, adding the gradient
// of the chart's own log_adjust terms.
Eigen::VectorXd chart_pullback(const ChartForward& fwd, const ChartConfig& cfg, const Shape& shape,
                               const Eigen::VectorXd& theta_bar_raw);

double log_sigmoid(double z);

}  // namespace detail

}  // namespace stiefel

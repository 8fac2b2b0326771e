#pragma once

#include "stiefel/chart.hpp"
#include "stiefel/diagnostics.hpp"
#include "stiefel/grad.hpp"
#include "stiefel/model.hpp"
#include "stiefel/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace stiefel {

struct HmcConfig {
  int chains = 4;
  int iters = 500;   // post-warmup draws per chain
  int warmup = 500;
  double target_accept = 0.8;
  int leapfrog_steps = 16;  // base path length; per-iteration L ~ Uniform{1..leapfrog_steps}
  std::uint64_t seed = 2025;
};

void validate(const HmcConfig& cfg);

struct ChainOutput {
  Eigen::MatrixXd draws;  // iters x (angles + Y entries + aux), constrained scale
  double accept_rate = 0.0;
  int divergences = 0;  // post-warmup non-finite Hamiltonians / degenerate proposals
  double step_size = 0.0;
};

struct SampleResult {
  std::vector<ChainOutput> chains;
  Diagnostics diagnostics;
  std::vector<std::string> columns;
  double wall_time_s = 0.0;
};

// Generic differentiable log density: fills grad, returns logp.
using LogDensityGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct RawChainOutput {
  Eigen::MatrixXd draws;  // iters x dim, unconstrained
  double accept_rate = 0.0;
  int divergences = 0;
  int warmup_divergences = 0;
  double step_size = 0.0;
};

struct Trajectory {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  double h0 = 0.0;
  double h1 = 0.0;
  bool divergent = false;
};

// One leapfrog trajectory; exposed for the energy-conservation test.
Trajectory leapfrog(const LogDensityGradient& target, Eigen::VectorXd q, Eigen::VectorXd p,
                    double step, int steps, const Eigen::VectorXd& inv_mass);

// One HMC chain over an arbitrary target: dual-averaged step size during
// warmup, diagonal mass from the second half of warmup, jittered path
// lengths, Metropolis correction. Throws when more than 90% of warmup
// iterations diverge.
RawChainOutput run_chain(const LogDensityGradient& target, const Eigen::VectorXd& init,
                         const HmcConfig& cfg, Rng rng);

// Full sampler over a Stiefel model: chains run independently (in
// parallel up to STIEFEL_GIVENS_THREADS) and deterministically per
// (seed, chain index); draws are stored on the constrained scale.
SampleResult run(const ModelTarget& model, const Shape& shape, const ChartConfig& chart,
                 const HmcConfig& hmc);

// Column names in draw order: angles, Y entries (row-major), aux.
std::vector<std::string> parameter_columns(const ModelTarget& model);

}  // namespace stiefel

#pragma once

#include "stiefel/givens.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace stiefel {

// Transforms between the sampler's unconstrained auxiliary coordinates
// and the model scale.
enum class AuxTransform {
  Identity,         // unbounded
  LogPositive,      // positive via exp
  OrderedPositive,  // increasing positive via cumulative exp
  Ordered,          // increasing, first element unbounded
};

struct AuxBlock {
  std::string name;
  int size = 1;
  AuxTransform transform = AuxTransform::Identity;
};

// Log density over (Y, aux) with analytic gradients. evaluate() works on
// the constrained scale; gradient outputs may be null when only the
// density value is needed. Targets are immutable after construction and
// safe to share across chains.
struct ModelTarget {
  std::string name;
  Shape shape;
  std::vector<AuxBlock> aux;
  std::function<double(const Eigen::MatrixXd& y, const Eigen::VectorXd& aux_c,
                       Eigen::MatrixXd* dy, Eigen::VectorXd* daux)>
      evaluate;

  int aux_dim() const;
  std::vector<std::string> aux_names() const;
};

// Flat density; the Haar measure arises entirely from the chart's
// log-measure term.
ModelTarget uniform_stiefel_target(const Shape& shape);

struct PpcaData {
  int obs_count = 0;
  Eigen::MatrixXd sigma_hat;  // (1/N) sum_i x_i x_i^T
  int dim() const { return static_cast<int>(sigma_hat.rows()); }
};

// rows of `observations` are the observation vectors
PpcaData ppca_data_from_observations(const Eigen::MatrixXd& observations);

// Marginal PPCA likelihood with C = W Lambda^2 W^T + sigma^2 I.
// aux = (lambda_1..lambda_p increasing positive, sigma2 positive), both
// under half-Normal(5) priors.
ModelTarget ppca_target(const PpcaData& data, int p);

struct NetworkData {
  int n_nodes = 0;
  Eigen::MatrixXi adjacency;  // symmetric 0/1, diagonal ignored
};

struct EigenmodelOptions {
  bool ordered_lambda = false;  // breaks the Lambda permutation symmetry
  Eigen::MatrixXi dyad_mask;    // optional: nonzero selects dyads (i > j); empty = all
};

// Probit dyad model: edge_ij ~ Bernoulli(Phi([U Lambda U^T]_ij + c)),
// c ~ N(0, 10^2), Lambda_i ~ N(0, n). Lambda is unordered by default,
// matching the model's known posterior mode-flipping.
ModelTarget eigenmodel_target(const NetworkData& data, int p, const EigenmodelOptions& opts = {});

struct SynthNetwork {
  NetworkData data;
  Eigen::MatrixXd u;       // generating orthonormal basis
  Eigen::VectorXd lambda;  // generating spectrum
  double c = 0.0;          // generating intercept
};

// Draws U from the Haar measure, (Lambda, c) from their priors, then each
// dyad from the model. The generating parameters are returned for
// recovery tests.
SynthNetwork synth_network(int n_nodes, int p, std::uint64_t seed);

// The bundled synthetic PPCA dataset: N = 15 observations in 3 dimensions
// from W = I_{3,2}, Lambda = diag(2, 1), sigma2 = 1 (all angles zero).
Eigen::MatrixXd ppca_simulation(std::uint64_t seed);

// Numerically stable log Phi for the probit link; accurate over the full
// double range.
double log_std_normal_cdf(double s);

}  // namespace stiefel

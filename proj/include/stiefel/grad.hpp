#pragma once

#include "stiefel/chart.hpp"
#include "stiefel/model.hpp"

namespace stiefel {

struct GradientBundle {
  double logp = 0.0;
  Eigen::VectorXd grad_xi;   // d + p entries
  Eigen::VectorXd grad_aux;  // unconstrained auxiliary entries
  bool degenerate = false;
};

// Composite log target over the unconstrained coordinates:
//   model logp at (Y(theta), aux) + log-measure term + chart adjustment
//   + auxiliary transform Jacobians.
// The model supplies d logp / dY; everything from Y back to xi is a
// hand-written adjoint of the rotation sequence, which un-applies each
// rotation to recover intermediate states instead of taping them. The
// optional counter records the rotation-sweep multiply-adds (everything
// outside the model's own evaluation).
GradientBundle eval_grad(const Eigen::VectorXd& xi, const Eigen::VectorXd& aux_u,
                         const ModelTarget& model, const ChartConfig& cfg,
                         OpCounter* ops = nullptr);

// Density-only path (no adjoint); used by finite-difference checks.
double eval_logp(const Eigen::VectorXd& xi, const Eigen::VectorXd& aux_u, const ModelTarget& model,
                 const ChartConfig& cfg);

// Unconstrained -> constrained auxiliary parameters per the model's
// aux blocks; returns the transform's log-Jacobian.
double aux_to_constrained(const ModelTarget& model, const Eigen::VectorXd& aux_u,
                          Eigen::VectorXd& aux_c);

// Chain rule for the auxiliary transforms, including the log-Jacobian
// gradient. daux_c is d logp / d(constrained aux).
Eigen::VectorXd aux_grad_to_unconstrained(const ModelTarget& model, const Eigen::VectorXd& aux_u,
                                          const Eigen::VectorXd& daux_c);

}  // namespace stiefel

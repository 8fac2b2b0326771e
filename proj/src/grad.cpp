#include "stiefel/grad.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stiefel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

GradientBundle rejected(const Shape& shape, Eigen::Index aux_dim) {
  GradientBundle g;
  g.logp = kNegInf;
  g.grad_xi = Eigen::VectorXd::Zero(unconstrained_dim(shape));
  g.grad_aux = Eigen::VectorXd::Zero(aux_dim);
  g.degenerate = true;
  return g;
}

// Reverse sweep over the rotation sequence. y holds Y(theta) on entry and
// I_{n,p} on exit; cot is consumed. Returns d logp / d theta.
Eigen::VectorXd rotation_adjoint(const AngleVector& theta, Eigen::MatrixXd& y,
                                 Eigen::MatrixXd& cot, OpCounter* ops) {
  const Shape& sh = theta.shape;
  const int p = sh.p;
  Eigen::VectorXd theta_bar = Eigen::VectorXd::Zero(sh.d);

  // The last rotation applied in the forward pass is R_12, so the reverse
  // sweep walks the angles in storage order.
  int k = 0;
  for (int i = 1; i <= sh.p; ++i) {
    for (int j = i + 1; j <= sh.n; ++j, ++k) {
      const double c = std::cos(theta.values[k]);
      const double s = std::sin(theta.values[k]);
      const int a = i - 1;
      const int b = j - 1;

      double tb = 0.0;
      for (int l = 0; l < p; ++l) {
        // restore the pre-rotation rows
        const double ya = y(a, l);
        const double yb = y(b, l);
        const double pa = c * ya + s * yb;
        const double pb = -s * ya + c * yb;
        y(a, l) = pa;
        y(b, l) = pb;
        // d(out rows)/d theta contracted with the cotangent
        tb += cot(a, l) * (-s * pa - c * pb) + cot(b, l) * (c * pa - s * pb);
        // cotangent pullback through the rotation
        const double ca = cot(a, l);
        const double cb = cot(b, l);
        cot(a, l) = c * ca + s * cb;
        cot(b, l) = -s * ca + c * cb;
      }
      theta_bar[k] = tb;
    }
  }
  if (ops) {
    // restore + derivative contraction + cotangent pullback, per rotation
    ops->multiply_adds += static_cast<std::uint64_t>(12) * static_cast<std::uint64_t>(sh.d) *
                          static_cast<std::uint64_t>(p);
  }
  return theta_bar;
}

}  // namespace

double aux_to_constrained(const ModelTarget& model, const Eigen::VectorXd& aux_u,
                          Eigen::VectorXd& aux_c) {
  if (aux_u.size() != model.aux_dim()) {
    throw std::invalid_argument("aux_to_constrained: auxiliary dimension mismatch");
  }
  aux_c.resize(aux_u.size());
  double log_jac = 0.0;
  Eigen::Index at = 0;
  for (const auto& block : model.aux) {
    switch (block.transform) {
      case AuxTransform::Identity:
        aux_c.segment(at, block.size) = aux_u.segment(at, block.size);
        break;
      case AuxTransform::LogPositive:
        for (int k = 0; k < block.size; ++k) {
          aux_c[at + k] = std::exp(aux_u[at + k]);
          log_jac += aux_u[at + k];
        }
        break;
      case AuxTransform::OrderedPositive: {
        double running = 0.0;
        for (int k = 0; k < block.size; ++k) {
          running += std::exp(aux_u[at + k]);
          aux_c[at + k] = running;
          log_jac += aux_u[at + k];
        }
        break;
      }
      case AuxTransform::Ordered: {
        double running = aux_u[at];
        aux_c[at] = running;
        for (int k = 1; k < block.size; ++k) {
          running += std::exp(aux_u[at + k]);
          aux_c[at + k] = running;
          log_jac += aux_u[at + k];
        }
        break;
      }
    }
    at += block.size;
  }
  return log_jac;
}

Eigen::VectorXd aux_grad_to_unconstrained(const ModelTarget& model, const Eigen::VectorXd& aux_u,
                                          const Eigen::VectorXd& daux_c) {
  Eigen::VectorXd grad(aux_u.size());
  Eigen::Index at = 0;
  for (const auto& block : model.aux) {
    switch (block.transform) {
      case AuxTransform::Identity:
        grad.segment(at, block.size) = daux_c.segment(at, block.size);
        break;
      case AuxTransform::LogPositive:
        for (int k = 0; k < block.size; ++k) {
          grad[at + k] = daux_c[at + k] * std::exp(aux_u[at + k]) + 1.0;
        }
        break;
      case AuxTransform::OrderedPositive:
        for (int k = 0; k < block.size; ++k) {
          double tail = 0.0;
          for (int l = k; l < block.size; ++l) tail += daux_c[at + l];
          grad[at + k] = tail * std::exp(aux_u[at + k]) + 1.0;
        }
        break;
      case AuxTransform::Ordered:
        for (int k = 0; k < block.size; ++k) {
          double tail = 0.0;
          for (int l = k; l < block.size; ++l) tail += daux_c[at + l];
          if (k == 0) {
            grad[at] = tail;  // first element is passed through untransformed
          } else {
            grad[at + k] = tail * std::exp(aux_u[at + k]) + 1.0;
          }
        }
        break;
    }
    at += block.size;
  }
  return grad;
}

GradientBundle eval_grad(const Eigen::VectorXd& xi, const Eigen::VectorXd& aux_u,
                         const ModelTarget& model, const ChartConfig& cfg, OpCounter* ops) {
  const Shape& shape = model.shape;

  detail::ChartForward fwd = detail::chart_forward(xi, cfg, shape);
  if (fwd.degenerate) return rejected(shape, aux_u.size());

  Eigen::VectorXd aux_c;
  const double log_jac_aux = aux_to_constrained(model, aux_u, aux_c);

  AngleVector theta{shape, fwd.theta};
  StiefelMatrix y = givens_to_matrix(theta, ops);

  Eigen::MatrixXd dy;
  Eigen::VectorXd daux_c;
  const double logp_model = model.evaluate(y.entries, aux_c, &dy, &daux_c);
  if (!std::isfinite(logp_model)) return rejected(shape, aux_u.size());

  const double logm = log_measure(theta);
  if (!std::isfinite(logm)) return rejected(shape, aux_u.size());

  GradientBundle out;
  out.logp = logp_model + logm + fwd.log_adjust + log_jac_aux;

  // adjoint through the rotation sequence, then the measure term
  Eigen::VectorXd theta_bar = rotation_adjoint(theta, y.entries, dy, ops);
  const auto idx = angle_indices(shape);
  for (int k = 0; k < shape.d; ++k) {
    const int expo = idx[static_cast<std::size_t>(k)].exponent;
    if (expo > 0) theta_bar[k] -= expo * std::tan(theta.values[k]);
  }

  // mirror pullback: leads shift by a constant, follows flip sign
  theta_bar.array() *= fwd.follow_sign.array();

  out.grad_xi = detail::chart_pullback(fwd, cfg, shape, theta_bar);
  out.grad_aux = aux_grad_to_unconstrained(model, aux_u, daux_c);
  return out;
}

double eval_logp(const Eigen::VectorXd& xi, const Eigen::VectorXd& aux_u, const ModelTarget& model,
                 const ChartConfig& cfg) {
  const Shape& shape = model.shape;
  detail::ChartForward fwd = detail::chart_forward(xi, cfg, shape);
  if (fwd.degenerate) return kNegInf;

  Eigen::VectorXd aux_c;
  const double log_jac_aux = aux_to_constrained(model, aux_u, aux_c);

  AngleVector theta{shape, fwd.theta};
  const StiefelMatrix y = givens_to_matrix(theta);
  const double logp_model = model.evaluate(y.entries, aux_c, nullptr, nullptr);
  if (!std::isfinite(logp_model)) return kNegInf;

  const double logm = log_measure(theta);
  if (!std::isfinite(logm)) return kNegInf;

  return logp_model + logm + fwd.log_adjust + log_jac_aux;
}

}  // namespace stiefel

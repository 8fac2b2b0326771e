#include "stiefel/chart.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stiefel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 0.5 * kPi;
constexpr double kDegenerateRadius = 1e-8;

double normal_logpdf(double v, double mean, double sd) {
  const double z = (v - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * kPi);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

namespace detail {

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

ChartForward chart_forward(const Eigen::VectorXd& xi, const ChartConfig& cfg, const Shape& shape) {
  validate(cfg);
  if (xi.size() != unconstrained_dim(shape)) {
    throw std::invalid_argument("constrain: expected " + std::to_string(unconstrained_dim(shape)) +
                                " coordinates, got " + std::to_string(xi.size()));
  }

  const auto idx = angle_indices(shape);
  const double w = kPi - 2.0 * cfg.epsilon;

  ChartForward f;
  f.theta_raw.setZero(shape.d);
  f.follow_sign.setOnes(shape.d);
  f.xi_offset.resize(idx.size());
  f.x.setZero(shape.d);
  f.y.setZero(shape.d);
  f.r.setZero(shape.d);
  f.sig.setZero(shape.d);

  int slot = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    f.xi_offset[k] = slot;
    if (idx[k].kind == AngleKind::FullCircle) {
      const double x = xi[slot];
      const double y = xi[slot + 1];
      slot += 2;
      const double r = std::hypot(x, y);
      f.x[k] = x;
      f.y[k] = y;
      f.r[k] = r;
      if (r < kDegenerateRadius) {
        f.degenerate = true;
        continue;
      }
      f.theta_raw[k] = wrap_angle(std::atan2(y, x));
      f.log_adjust += normal_logpdf(r, cfg.r_mean, cfg.r_sd);
    } else {
      const double z = xi[slot];
      slot += 1;
      const double s = sigmoid(z);
      f.sig[k] = s;
      f.theta_raw[k] = -kHalfPi + cfg.epsilon + w * s;
      f.log_adjust += std::log(w) + log_sigmoid(z) + log_sigmoid(-z);
    }
  }

  if (f.degenerate) {
    f.log_adjust = -std::numeric_limits<double>::infinity();
    f.theta = f.theta_raw;
    return f;
  }

  f.theta = f.theta_raw;
  if (cfg.mirrored) {
    // Fold every column's lead into [-pi/2, pi/2], reflecting the first
    // follower where one exists. A column whose only angle is the lead
    // still gets the fold: the sign mode it removes is exactly the one a
    // column-sign-symmetric density cannot identify.
    int k = 0;
    for (int i = 1; i <= shape.p; ++i) {
      const int count = shape.n - i;  // angles in column i
      if (count >= 2) {
        const auto [lead, follow] = mirror(f.theta_raw[k], f.theta_raw[k + 1]);
        f.theta[k] = lead;
        f.theta[k + 1] = follow;
        if (std::abs(f.theta_raw[k]) > kHalfPi) f.follow_sign[k + 1] = -1.0;
      } else if (count == 1) {
        f.theta[k] = mirror(f.theta_raw[k], 0.0).first;
      }
      k += count;
    }
  }
  return f;
}

Eigen::VectorXd chart_pullback(const ChartForward& fwd, const ChartConfig& cfg, const Shape& shape,
                               const Eigen::VectorXd& theta_bar_raw) {
  const auto idx = angle_indices(shape);
  const double w = kPi - 2.0 * cfg.epsilon;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(unconstrained_dim(shape));

  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int slot = fwd.xi_offset[k];
    const double tb = theta_bar_raw[static_cast<Eigen::Index>(k)];
    if (idx[k].kind == AngleKind::FullCircle) {
      const double x = fwd.x[k];
      const double y = fwd.y[k];
      const double r = fwd.r[k];
      const double r2 = r * r;
      const double dprior = -(r - cfg.r_mean) / (cfg.r_sd * cfg.r_sd);
      grad[slot] = tb * (-y / r2) + dprior * (x / r);
      grad[slot + 1] = tb * (x / r2) + dprior * (y / r);
    } else {
      const double s = fwd.sig[k];
      // d theta/d z plus the log-Jacobian derivative (1 - 2*sigma)
      grad[slot] = tb * w * s * (1.0 - s) + (1.0 - 2.0 * s);
    }
  }
  return grad;
}

}  // namespace detail

void validate(const ChartConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < kPi / 4.0)) {
    throw std::invalid_argument("ChartConfig: epsilon must lie in (0, pi/4)");
  }
  if (!(cfg.r_sd > 0.0)) {
    throw std::invalid_argument("ChartConfig: r_sd must be positive");
  }
}

int unconstrained_dim(const Shape& shape) { return shape.d + shape.p; }

ChartResult constrain(const Eigen::VectorXd& xi, const ChartConfig& cfg, const Shape& shape) {
  detail::ChartForward f = detail::chart_forward(xi, cfg, shape);
  ChartResult out;
  out.theta = {shape, std::move(f.theta)};
  out.log_adjust = f.log_adjust;
  out.degenerate = f.degenerate;
  return out;
}

Eigen::VectorXd unconstrain(const AngleVector& theta, const ChartConfig& cfg) {
  validate(cfg);
  const Shape& shape = theta.shape;
  if (theta.values.size() != shape.d) {
    throw std::invalid_argument("unconstrain: angle count does not match shape");
  }
  const auto idx = angle_indices(shape);
  const double w = kPi - 2.0 * cfg.epsilon;
  const double half_bound = kHalfPi - cfg.epsilon - 1e-9;

  Eigen::VectorXd xi(unconstrained_dim(shape));
  int slot = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double t = theta.values[static_cast<Eigen::Index>(k)];
    if (idx[k].kind == AngleKind::FullCircle) {
      if (!(t > -kPi && t <= kPi)) {
        throw std::invalid_argument("unconstrain: full-circle angle out of (-pi, pi]");
      }
      xi[slot] = std::cos(t);
      xi[slot + 1] = std::sin(t);
      slot += 2;
    } else {
      if (!(std::abs(t) <= half_bound)) {
        throw std::invalid_argument("unconstrain: half-circle angle too close to +-pi/2");
      }
      const double u = (t + kHalfPi - cfg.epsilon) / w;
      xi[slot] = std::log(u) - std::log1p(-u);
      slot += 1;
    }
  }
  return xi;
}

std::pair<double, double> mirror(double lead, double follow) {
  if (lead > kHalfPi) return {-kHalfPi + (lead - kHalfPi), -follow};
  if (lead < -kHalfPi) return {kHalfPi + (lead + kHalfPi), -follow};
  return {lead, follow};
}

}  // namespace stiefel

#include "stiefel/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace stiefel::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 0.5 * kPi;

// Full n x n rotation product G = R_12 ... R_pn applied to the identity.
Eigen::MatrixXd rotation_product(const AngleVector& theta) {
  const Shape& sh = theta.shape;
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(sh.n, sh.n);
  int k = sh.d - 1;
  for (int i = sh.p; i >= 1; --i) {
    for (int j = sh.n; j >= i + 1; --j, --k) {
      const double t = theta.values[k];
      apply_rotation(g, i - 1, j - 1, std::cos(t), std::sin(t));
    }
  }
  return g;
}

}  // namespace

StiefelMatrix haar_sample(const Shape& shape, Rng& rng) {
  Eigen::MatrixXd z(shape.n, shape.p);
  for (int c = 0; c < shape.p; ++c) {
    for (int r = 0; r < shape.n; ++r) z(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(shape.n, shape.p);
  for (int c = 0; c < shape.p; ++c) {
    if (qr.matrixQR()(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return {shape, std::move(q)};
}

StiefelMatrix haar_sample(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return haar_sample(shape, rng);
}

double numeric_log_measure(const AngleVector& theta) {
  const Shape& sh = theta.shape;
  if (sh.n > 8 || sh.p > 4) {
    throw std::invalid_argument("numeric_log_measure: cost guard, need n <= 8 and p <= 4");
  }
  if (theta.values.size() != sh.d) {
    throw std::invalid_argument("numeric_log_measure: angle count does not match shape");
  }
  const auto idx = angle_indices(sh);
  for (int k = 0; k < sh.d; ++k) {
    if (idx[static_cast<std::size_t>(k)].kind == AngleKind::HalfCircle &&
        std::abs(theta.values[k]) > kHalfPi - 1e-4) {
      throw std::invalid_argument("numeric_log_measure: angle too close to the chart boundary");
    }
  }

  const double h = 1e-6;

  // column Jacobians J_{Y_i}: n x d each, filled one angle at a time
  std::vector<Eigen::MatrixXd> jac(static_cast<std::size_t>(sh.p));
  for (auto& j : jac) j.resize(sh.n, sh.d);
  AngleVector tp = theta;
  AngleVector tm = theta;
  for (int k = 0; k < sh.d; ++k) {
    tp.values[k] += h;
    tm.values[k] -= h;
    const Eigen::MatrixXd yp = givens_to_matrix(tp).entries;
    const Eigen::MatrixXd ym = givens_to_matrix(tm).entries;
    tp.values[k] = theta.values[k];
    tm.values[k] = theta.values[k];
    for (int i = 0; i < sh.p; ++i) {
      jac[static_cast<std::size_t>(i)].col(k) = (yp.col(i) - ym.col(i)) / (2.0 * h);
    }
  }

  const Eigen::MatrixXd g = rotation_product(theta);

  Eigen::MatrixXd m(sh.d, sh.d);
  int row = 0;
  for (int i = 1; i <= sh.p; ++i) {
    const int count = sh.n - i;
    m.middleRows(row, count) = g.rightCols(count).transpose() * jac[static_cast<std::size_t>(i - 1)];
    row += count;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  double acc = 0.0;
  for (int k = 0; k < sh.d; ++k) {
    const double u = std::abs(lu.matrixLU()(k, k));
    if (!(u > 0.0) || !std::isfinite(u)) return -std::numeric_limits<double>::infinity();
    acc += std::log(u);
  }
  return acc;
}

KsReport ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf,
                      double threshold) {
  if (samples.size() < 100) {
    throw std::invalid_argument("ks_statistic: need at least 100 samples");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    stat = std::max(stat, std::max(f - static_cast<double>(i) / n,
                                   static_cast<double>(i + 1) / n - f));
  }
  KsReport out;
  out.statistic = stat;
  out.n_samples = static_cast<int>(samples.size());
  out.pass = stat < threshold;
  return out;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double stat = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
    stat = std::max(stat, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return stat;
}

std::function<double(double)> angle_marginal_cdf(const AngleIndex& index) {
  if (index.kind == AngleKind::FullCircle) {
    return [](double t) {
      const double f = (t + kPi) / (2.0 * kPi);
      return std::clamp(f, 0.0, 1.0);
    };
  }

  // cumulative Simpson integration of cos^exponent on a fixed grid
  const int k = index.exponent;
  constexpr int kCells = 4096;
  auto cum = std::make_shared<std::vector<double>>(kCells + 1, 0.0);
  const double a = -kHalfPi;
  const double hcell = kPi / kCells;
  auto f = [k](double t) { return std::pow(std::cos(t), k); };
  for (int c = 0; c < kCells; ++c) {
    const double lo = a + c * hcell;
    (*cum)[c + 1] = (*cum)[c] + hcell / 6.0 * (f(lo) + 4.0 * f(lo + 0.5 * hcell) + f(lo + hcell));
  }
  const double total = cum->back();
  for (auto& v : *cum) v /= total;

  return [cum, a, hcell](double t) {
    if (t <= a) return 0.0;
    if (t >= kHalfPi) return 1.0;
    const double pos = (t - a) / hcell;
    const int cell = std::min(static_cast<int>(pos), kCells - 1);
    const double frac = pos - cell;
    return (*cum)[cell] + frac * ((*cum)[cell + 1] - (*cum)[cell]);
  };
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    xp[k] = orig + step;
    const double fp = f(xp);
    xp[k] = orig - step;
    const double fm = f(xp);
    xp[k] = orig;
    grad[k] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace stiefel::oracle

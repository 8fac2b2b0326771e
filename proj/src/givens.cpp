#include "stiefel/givens.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stiefel {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Shape make_shape(int n, int p) {
  if (p < 1 || n < p) {
    throw std::invalid_argument("make_shape: need 1 <= p <= n, got n=" + std::to_string(n) +
                                ", p=" + std::to_string(p));
  }
  Shape s;
  s.n = n;
  s.p = p;
  s.d = n * p - p * (p + 1) / 2;
  return s;
}

std::vector<AngleIndex> angle_indices(const Shape& shape) {
  std::vector<AngleIndex> out;
  out.reserve(static_cast<std::size_t>(shape.d));
  for (int i = 1; i <= shape.p; ++i) {
    for (int j = i + 1; j <= shape.n; ++j) {
      out.push_back({i, j, j == i + 1 ? AngleKind::FullCircle : AngleKind::HalfCircle, j - i - 1});
    }
  }
  return out;
}

void apply_rotation(Eigen::MatrixXd& m, int a, int b, double c, double s) {
  const Eigen::Index cols = m.cols();
  for (Eigen::Index l = 0; l < cols; ++l) {
    const double va = m(a, l);
    const double vb = m(b, l);
    m(a, l) = c * va - s * vb;
    m(b, l) = s * va + c * vb;
  }
}

StiefelMatrix givens_to_matrix(const AngleVector& theta, OpCounter* ops) {
  const Shape& sh = theta.shape;
  if (theta.values.size() != sh.d) {
    throw std::invalid_argument("givens_to_matrix: expected " + std::to_string(sh.d) +
                                " angles, got " + std::to_string(theta.values.size()));
  }
  Eigen::MatrixXd y = Eigen::MatrixXd::Identity(sh.n, sh.p);
  // The rightmost factor of the product acts first, so walk the angle
  // list backwards: columns p..1, rows n..i+1.
  int k = sh.d - 1;
  for (int i = sh.p; i >= 1; --i) {
    for (int j = sh.n; j >= i + 1; --j, --k) {
      const double t = theta.values[k];
      apply_rotation(y, i - 1, j - 1, std::cos(t), std::sin(t));
    }
  }
  if (ops) {
    ops->multiply_adds +=
        static_cast<std::uint64_t>(4) * static_cast<std::uint64_t>(sh.d) * static_cast<std::uint64_t>(sh.p);
  }
  return {sh, std::move(y)};
}

double log_measure(const AngleVector& theta) {
  const Shape& sh = theta.shape;
  if (theta.values.size() != sh.d) {
    throw std::invalid_argument("log_measure: angle count does not match shape");
  }
  double acc = 0.0;
  int k = 0;
  for (int i = 1; i <= sh.p; ++i) {
    for (int j = i + 1; j <= sh.n; ++j, ++k) {
      const int expo = j - i - 1;
      if (expo == 0) continue;
      const double c = std::cos(theta.values[k]);
      if (c <= 0.0) return -std::numeric_limits<double>::infinity();
      acc += expo * std::log(c);
    }
  }
  return acc;
}

GivensReductionResult givens_reduction(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int p = static_cast<int>(a.cols());
  const Shape sh = make_shape(n, p);

  Eigen::MatrixXd work = a;
  Eigen::VectorXd theta(sh.d);
  std::vector<int> degenerate;

  int k = 0;
  for (int i = 1; i <= p; ++i) {
    for (int j = i + 1; j <= n; ++j, ++k) {
      const double x = work(i - 1, i - 1);
      const double yv = work(j - 1, i - 1);
      double t;
      if (std::abs(x) < 1e-300 && std::abs(yv) < 1e-300) {
        t = 0.0;  // dead pivot pair; keep the chain of rotations deterministic
        degenerate.push_back(k);
      } else {
        t = std::atan2(yv, x);
        if (j == i + 1) t = wrap_angle(t);
      }
      theta[k] = t;
      // inverse rotation R_ij(-t) zeroes the (j, i) entry
      apply_rotation(work, i - 1, j - 1, std::cos(t), -std::sin(t));
    }
  }

  GivensReductionResult out;
  out.theta = {sh, std::move(theta)};
  out.r = work.topRows(p);
  out.degenerate = std::move(degenerate);
  return out;
}

AngleVector matrix_to_givens(const StiefelMatrix& y) {
  const Shape& sh = y.shape;
  if (y.entries.rows() != sh.n || y.entries.cols() != sh.p) {
    throw std::invalid_argument("matrix_to_givens: entries do not match shape");
  }
  const double defect = orthonormality_defect(y.entries);
  if (!(defect <= 1e-10)) {
    throw std::invalid_argument("matrix_to_givens: input is not orthonormal (defect " +
                                std::to_string(defect) + ")");
  }
  return givens_reduction(y.entries).theta;
}

double orthonormality_defect(const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd g = y.transpose() * y;
  const Eigen::Index p = y.cols();
  return (g - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff();
}

double wrap_angle(double t) {
  t = std::fmod(t, 2.0 * kPi);
  if (t <= -kPi) t += 2.0 * kPi;
  if (t > kPi) t -= 2.0 * kPi;
  return t;
}

}  // namespace stiefel

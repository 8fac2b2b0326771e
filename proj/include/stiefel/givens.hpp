#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace stiefel {

// Dimensions of the Stiefel manifold V_{p,n} of n x p matrices with
// orthonormal columns. d = np - p(p+1)/2 is the intrinsic dimension and
// equals the number of Givens angles.
struct Shape {
  int n = 0;
  int p = 0;
  int d = 0;
};

Shape make_shape(int n, int p);

enum class AngleKind { FullCircle, HalfCircle };

// One Givens angle theta_{ij}, 1-based indices matching the theta_i_j
// column names in CLI output. The leading angle of each column
// (j == i+1) ranges over the full circle (-pi, pi]; the remaining angles
// live on (-pi/2, pi/2) and contribute a cos^{exponent} factor to the
// manifold measure, exponent = j - i - 1.
struct AngleIndex {
  int i = 0;
  int j = 0;
  AngleKind kind = AngleKind::FullCircle;
  int exponent = 0;
};

// All d angles in storage order:
// theta_{12}..theta_{1n}, theta_{23}..theta_{2n}, ..., theta_{p,p+1}..theta_{pn}
std::vector<AngleIndex> angle_indices(const Shape& shape);

struct AngleVector {
  Shape shape;
  Eigen::VectorXd values;
};

struct StiefelMatrix {
  Shape shape;
  Eigen::MatrixXd entries;  // n x p with orthonormal columns
};

// Counts scalar multiply-adds spent applying rotations.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
};

// In-place rotation of rows a and b (0-based):
//   row_a <- c*row_a - s*row_b
//   row_b <- s*row_a_old + c*row_b
// which is left-multiplication by the rotation with (a,a)=(b,b)=c,
// (a,b)=-s, (b,a)=s.
void apply_rotation(Eigen::MatrixXd& m, int a, int b, double c, double s);

// Forward map Y(Theta) = R_12 ... R_1n R_23 ... R_pn I_{n,p}.
StiefelMatrix givens_to_matrix(const AngleVector& theta, OpCounter* ops = nullptr);

// log prod cos^{j-i-1} theta_ij. Returns -inf if any weighted cosine
// is <= 0 (caller treats the state as rejected).
double log_measure(const AngleVector& theta);

struct GivensReductionResult {
  AngleVector theta;
  Eigen::MatrixXd r;            // leading p x p block after reduction
  std::vector<int> degenerate;  // angle positions where both pivots vanished
};

// QR factorization by Givens reduction. Angles come from atan2 of the
// current (subdiagonal, pivot) pair, so the running pivot stays
// nonnegative and r ends up with a nonnegative diagonal. Exact (0, 0)
// pivot pairs produce a zero angle and are reported as degenerate.
GivensReductionResult givens_reduction(const Eigen::MatrixXd& a);

// Inverse of givens_to_matrix on the manifold, away from the measure-zero
// chart boundary. Throws std::invalid_argument when y is not orthonormal
// to within 1e-10.
AngleVector matrix_to_givens(const StiefelMatrix& y);

// ||Y^T Y - I||_inf
double orthonormality_defect(const Eigen::MatrixXd& y);

// Wraps into (-pi, pi].
double wrap_angle(double t);

}  // namespace stiefel

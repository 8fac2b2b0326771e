#include "stiefel/givens.hpp"
#include "stiefel/oracle.hpp"
#include "stiefel/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>

using namespace stiefel;

namespace {
constexpr double kPi = 3.14159265358979323846;

AngleVector random_interior_angles(const Shape& shape, Rng& rng, double margin = 0.05) {
  AngleVector theta{shape, Eigen::VectorXd(shape.d)};
  const auto idx = angle_indices(shape);
  for (int k = 0; k < shape.d; ++k) {
    if (idx[static_cast<std::size_t>(k)].kind == AngleKind::FullCircle) {
      theta.values[k] = rng.uniform(-kPi + margin, kPi - margin);
    } else {
      theta.values[k] = rng.uniform(-kPi / 2 + margin, kPi / 2 - margin);
    }
  }
  return theta;
}
}  // namespace

TEST_CASE("make_shape computes the intrinsic dimension") {
  CHECK(make_shape(3, 2).d == 3);
  CHECK(make_shape(7, 1).d == 6);
  CHECK(make_shape(5, 5).d == 10);
  CHECK(make_shape(10, 4).d == 30);
  CHECK_THROWS_AS(make_shape(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_shape(2, 3), std::invalid_argument);
}

TEST_CASE("angle_indices ordering, kinds and exponents") {
  const auto idx32 = angle_indices(make_shape(3, 2));
  REQUIRE(idx32.size() == 3);
  CHECK(idx32[0].i == 1);
  CHECK(idx32[0].j == 2);
  CHECK(idx32[0].kind == AngleKind::FullCircle);
  CHECK(idx32[0].exponent == 0);
  CHECK(idx32[1].i == 1);
  CHECK(idx32[1].j == 3);
  CHECK(idx32[1].kind == AngleKind::HalfCircle);
  CHECK(idx32[1].exponent == 1);
  CHECK(idx32[2].i == 2);
  CHECK(idx32[2].j == 3);
  CHECK(idx32[2].kind == AngleKind::FullCircle);
  CHECK(idx32[2].exponent == 0);

  const auto idx21 = angle_indices(make_shape(2, 1));
  REQUIRE(idx21.size() == 1);
  CHECK(idx21[0].kind == AngleKind::FullCircle);

  const auto idx41 = angle_indices(make_shape(4, 1));
  REQUIRE(idx41.size() == 3);
  CHECK(idx41[0].exponent == 0);
  CHECK(idx41[1].exponent == 1);
  CHECK(idx41[2].exponent == 2);

  for (auto [n, p] : {std::pair{5, 3}, {10, 4}, {6, 6}}) {
    const Shape sh = make_shape(n, p);
    CHECK(angle_indices(sh).size() == static_cast<std::size_t>(sh.d));
  }
}

TEST_CASE("apply_rotation matches the 2x2 rotation convention") {
  // pins the sign convention: (a,b) entry -sin, (b,a) entry +sin
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  const double t = 0.37;
  apply_rotation(m, 0, 1, std::cos(t), std::sin(t));
  CHECK(m(0, 0) == doctest::Approx(std::cos(t)));
  CHECK(m(0, 1) == doctest::Approx(-std::sin(t)));
  CHECK(m(1, 0) == doctest::Approx(std::sin(t)));
  CHECK(m(1, 1) == doctest::Approx(std::cos(t)));

  SUBCASE("zero angle is the identity") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(4, 3);
    Eigen::MatrixXd b = a;
    apply_rotation(b, 1, 3, 1.0, 0.0);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("quarter turn sends e1 to e2") {
    Eigen::MatrixXd v(2, 1);
    v << 1.0, 0.0;
    apply_rotation(v, 0, 1, std::cos(kPi / 2), std::sin(kPi / 2));
    CHECK(v(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(v(1, 0) == doctest::Approx(1.0));
  }

  SUBCASE("composing theta then -theta restores the input") {
    Rng rng(7);
    Eigen::MatrixXd a(5, 2);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 2; ++c) a(r, c) = rng.normal();
    Eigen::MatrixXd b = a;
    const double t = 1.234;
    apply_rotation(b, 0, 3, std::cos(t), std::sin(t));
    apply_rotation(b, 0, 3, std::cos(t), -std::sin(t));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("givens_to_matrix basics") {
  SUBCASE("zero angles give I_{n,p}") {
    const Shape sh = make_shape(5, 3);
    const AngleVector theta{sh, Eigen::VectorXd::Zero(sh.d)};
    const StiefelMatrix y = givens_to_matrix(theta);
    CHECK((y.entries - Eigen::MatrixXd::Identity(5, 3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("n=3 p=1 quarter turn") {
    const Shape sh = make_shape(3, 1);
    AngleVector theta{sh, Eigen::VectorXd(2)};
    theta.values << kPi / 2, 0.0;
    const StiefelMatrix y = givens_to_matrix(theta);
    CHECK(y.entries(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(y.entries(1, 0) == doctest::Approx(1.0));
    CHECK(y.entries(2, 0) == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("n=3 p=1 closed-form column") {
    const Shape sh = make_shape(3, 1);
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      AngleVector theta{sh, Eigen::VectorXd(2)};
      const double t12 = rng.uniform(-kPi, kPi);
      const double t13 = rng.uniform(-kPi / 2, kPi / 2);
      theta.values << t12, t13;
      const StiefelMatrix y = givens_to_matrix(theta);
      CHECK(y.entries(0, 0) == doctest::Approx(std::cos(t12) * std::cos(t13)).epsilon(1e-12));
      CHECK(y.entries(1, 0) == doctest::Approx(std::sin(t12) * std::cos(t13)).epsilon(1e-12));
      CHECK(y.entries(2, 0) == doctest::Approx(std::sin(t13)).epsilon(1e-12));
    }
  }

  SUBCASE("length mismatch throws") {
    const Shape sh = make_shape(3, 2);
    CHECK_THROWS_AS(givens_to_matrix({sh, Eigen::VectorXd::Zero(2)}), std::invalid_argument);
  }

  SUBCASE("columns are orthonormal for random angles") {
    Rng rng(23);
    for (auto [n, p] : {std::pair{3, 2}, {5, 3}, {10, 4}}) {
      const Shape sh = make_shape(n, p);
      for (int trial = 0; trial < 1000; ++trial) {
        const AngleVector theta = random_interior_angles(sh, rng, 0.0);
        const StiefelMatrix y = givens_to_matrix(theta);
        CHECK(orthonormality_defect(y.entries) <= 1e-10);
      }
    }
  }

  SUBCASE("operation count grows linearly in n at fixed p") {
    OpCounter small, large;
    const Shape s1 = make_shape(100, 2);
    const Shape s2 = make_shape(200, 2);
    givens_to_matrix({s1, Eigen::VectorXd::Zero(s1.d)}, &small);
    givens_to_matrix({s2, Eigen::VectorXd::Zero(s2.d)}, &large);
    const double ratio =
        static_cast<double>(large.multiply_adds) / static_cast<double>(small.multiply_adds);
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.5);
  }
}

TEST_CASE("log_measure") {
  SUBCASE("zero angles give zero") {
    const Shape sh = make_shape(6, 3);
    CHECK(log_measure({sh, Eigen::VectorXd::Zero(sh.d)}) == 0.0);
  }

  SUBCASE("single exponent-one term") {
    const Shape sh = make_shape(3, 1);
    AngleVector theta{sh, Eigen::VectorXd(2)};
    theta.values << 0.9, kPi / 3;
    CHECK(log_measure(theta) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  }

  SUBCASE("(4,2) exponent pattern (0,1,2,0,1)") {
    const Shape sh = make_shape(4, 2);
    AngleVector theta{sh, Eigen::VectorXd(5)};
    theta.values << 2.5, 0.3, -0.7, -1.9, 1.1;
    const double expected =
        std::log(std::cos(0.3)) + 2.0 * std::log(std::cos(-0.7)) + std::log(std::cos(1.1));
    CHECK(log_measure(theta) == doctest::Approx(expected).epsilon(1e-14));
  }

  SUBCASE("non-positive weighted cosine gives -inf") {
    // cos of the double nearest pi/2 is ~6e-17, still positive; the
    // sentinel fires once the cosine actually crosses zero
    const Shape sh = make_shape(3, 1);
    AngleVector theta{sh, Eigen::VectorXd(2)};
    theta.values << 0.0, 2.0;
    CHECK(log_measure(theta) == -std::numeric_limits<double>::infinity());
    theta.values << 0.0, -kPi / 2 - 1e-6;
    CHECK(log_measure(theta) == -std::numeric_limits<double>::infinity());
  }

  SUBCASE("even in every angle") {
    Rng rng(5);
    const Shape sh = make_shape(6, 3);
    for (int trial = 0; trial < 200; ++trial) {
      AngleVector theta = random_interior_angles(sh, rng);
      const double base = log_measure(theta);
      const int k = rng.uniform_int(0, sh.d - 1);
      theta.values[k] = -theta.values[k];
      CHECK(log_measure(theta) == doctest::Approx(base).epsilon(1e-13));
    }
  }
}

TEST_CASE("givens_reduction") {
  SUBCASE("identity and scaled identity") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(5, 3);
    auto res = givens_reduction(id);
    CHECK(res.theta.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((res.r - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.degenerate.empty());

    auto res2 = givens_reduction(2.0 * id);
    CHECK(res2.theta.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((res2.r - 2.0 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("QR reconstruction for random matrices") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::MatrixXd a(5, 3);
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
      const auto res = givens_reduction(a);
      const StiefelMatrix q = givens_to_matrix(res.theta);
      const double scale = a.cwiseAbs().maxCoeff();
      CHECK((q.entries * res.r - a).cwiseAbs().maxCoeff() / scale < 1e-10);
      for (int c = 0; c < 3; ++c) CHECK(res.r(c, c) >= 0.0);
    }
  }

  SUBCASE("rank-deficient column is flagged") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2);
    a(0, 0) = 1.0;
    const auto res = givens_reduction(a);
    CHECK(!res.degenerate.empty());
    CHECK(res.theta.values.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("matrix_to_givens") {
  SUBCASE("identity maps to zero angles") {
    const Shape sh = make_shape(4, 2);
    const StiefelMatrix y{sh, Eigen::MatrixXd::Identity(4, 2)};
    CHECK(matrix_to_givens(y).values.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hand-inverted 3-vector") {
    const Shape sh = make_shape(3, 1);
    Eigen::MatrixXd e2(3, 1);
    e2 << 0.0, 1.0, 0.0;
    const AngleVector theta = matrix_to_givens({sh, e2});
    CHECK(theta.values[0] == doctest::Approx(kPi / 2));
    CHECK(theta.values[1] == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("non-orthogonal input throws") {
    const Shape sh = make_shape(3, 2);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 2);
    bad(0, 0) = 1.5;
    CHECK_THROWS_AS(matrix_to_givens({sh, bad}), std::invalid_argument);
  }

  SUBCASE("roundtrip Y -> theta -> Y on Haar draws") {
    Rng rng(43);
    for (auto [n, p] : {std::pair{3, 2}, {5, 3}, {10, 4}}) {
      const Shape sh = make_shape(n, p);
      for (int trial = 0; trial < 200; ++trial) {
        const StiefelMatrix y = oracle::haar_sample(sh, rng);
        const AngleVector theta = matrix_to_givens(y);
        const StiefelMatrix back = givens_to_matrix(theta);
        CHECK((back.entries - y.entries).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }

  SUBCASE("roundtrip theta -> Y -> theta away from chart boundaries") {
    Rng rng(47);
    for (auto [n, p] : {std::pair{3, 2}, {5, 3}, {10, 4}}) {
      const Shape sh = make_shape(n, p);
      for (int trial = 0; trial < 200; ++trial) {
        const AngleVector theta = random_interior_angles(sh, rng, 1e-2);
        const AngleVector back = matrix_to_givens(givens_to_matrix(theta));
        CHECK((back.values - theta.values).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }

  SUBCASE("one angle in the boundary layer still rounds within 1e-9") {
    // recovery error on earlier angles scales with the inverse product of
    // the later cosines in the column; a single near-boundary angle keeps
    // that product at ~1e-6, which double precision absorbs
    Rng rng(53);
    const Shape sh = make_shape(5, 3);
    const auto idx = angle_indices(sh);
    for (int trial = 0; trial < 500; ++trial) {
      AngleVector theta = random_interior_angles(sh, rng, 0.3);
      int pick;
      do {
        pick = rng.uniform_int(0, sh.d - 1);
      } while (idx[static_cast<std::size_t>(pick)].kind != AngleKind::HalfCircle);
      theta.values[pick] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (kPi / 2 - 1e-6);
      const AngleVector back = matrix_to_givens(givens_to_matrix(theta));
      CHECK((back.values - theta.values).cwiseAbs().maxCoeff() < 1e-9);
      const StiefelMatrix again = givens_to_matrix(back);
      CHECK((again.entries - givens_to_matrix(theta).entries).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}

#include "stiefel/grad.hpp"
#include "stiefel/model_io.hpp"
#include "stiefel/oracle.hpp"

#include "doctest.h"

#include <cmath>

using namespace stiefel;

namespace {
constexpr double kPi = 3.14159265358979323846;

// random unconstrained point away from chart boundaries
void random_point(const ModelTarget& model, Rng& rng, Eigen::VectorXd& xi, Eigen::VectorXd& aux) {
  const Shape& sh = model.shape;
  xi.resize(unconstrained_dim(sh));
  const auto idx = angle_indices(sh);
  int slot = 0;
  for (const auto& ai : idx) {
    if (ai.kind == AngleKind::FullCircle) {
      const double phi = rng.uniform(-kPi, kPi);
      const double r = rng.uniform(0.8, 1.2);
      xi[slot] = r * std::cos(phi);
      xi[slot + 1] = r * std::sin(phi);
      slot += 2;
    } else {
      xi[slot] = rng.uniform(-2.0, 2.0);
      slot += 1;
    }
  }
  aux.resize(model.aux_dim());
  for (int k = 0; k < aux.size(); ++k) aux[k] = rng.uniform(-1.0, 1.0);
}

bool fd_matches(const ModelTarget& model, const ChartConfig& cfg, const Eigen::VectorXd& xi,
                const Eigen::VectorXd& aux, double rel_tol = 1e-5, double abs_floor = 1e-8) {
  const GradientBundle g = eval_grad(xi, aux, model, cfg);
  REQUIRE(std::isfinite(g.logp));

  Eigen::VectorXd full(xi.size() + aux.size());
  full << xi, aux;
  const auto f = [&](const Eigen::VectorXd& q) {
    return eval_logp(q.head(xi.size()), q.tail(aux.size()), model, cfg);
  };
  const Eigen::VectorXd fd = oracle::fd_gradient(f, full, 1e-5);

  Eigen::VectorXd analytic(full.size());
  analytic << g.grad_xi, g.grad_aux;

  for (Eigen::Index k = 0; k < full.size(); ++k) {
    const double scale = std::max(std::abs(analytic[k]), std::abs(fd[k]));
    const double err = std::abs(analytic[k] - fd[k]);
    if (err > std::max(abs_floor, rel_tol * scale)) {
      CAPTURE(k);
      CAPTURE(analytic[k]);
      CAPTURE(fd[k]);
      return false;
    }
  }
  return true;
}

ModelTarget small_ppca(Rng& rng) {
  Eigen::MatrixXd obs(20, 3);
  for (int r = 0; r < 20; ++r) {
    const double z1 = rng.normal(), z2 = rng.normal();
    obs(r, 0) = 2.0 * z1 + 0.5 * rng.normal();
    obs(r, 1) = 1.0 * z2 + 0.5 * rng.normal();
    obs(r, 2) = 0.5 * rng.normal();
  }
  return ppca_target(ppca_data_from_observations(obs), 2);
}
}  // namespace

TEST_CASE("uniform target at the origin has a flat composite gradient") {
  // measure gradient vanishes at theta = 0, the radius prior sits at its
  // mode, and the logistic Jacobian peaks at z = 0
  const Shape sh = make_shape(4, 2);
  const ModelTarget model = uniform_stiefel_target(sh);
  const ChartConfig cfg;
  const Eigen::VectorXd xi = unconstrain({sh, Eigen::VectorXd::Zero(sh.d)}, cfg);
  const GradientBundle g = eval_grad(xi, Eigen::VectorXd(), model, cfg);
  CHECK(std::isfinite(g.logp));
  CHECK(g.grad_xi.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("measure gradient is -tan on the single exponent-one angle") {
  const Shape sh = make_shape(3, 1);
  const auto idx = angle_indices(sh);
  REQUIRE(idx[1].exponent == 1);
  for (double t : {-0.9, -0.2, 0.4, 1.1}) {
    AngleVector theta{sh, Eigen::VectorXd(2)};
    theta.values << 0.3, t;
    const auto f = [&](const Eigen::VectorXd& v) {
      return log_measure({sh, v});
    };
    const Eigen::VectorXd fd = oracle::fd_gradient(f, theta.values, 1e-6);
    CHECK(fd[1] == doctest::Approx(-std::tan(t)).epsilon(1e-6));
    CHECK(fd[0] == doctest::Approx(0.0).epsilon(1e-8));
  }
}

TEST_CASE("eval_grad matches finite differences") {
  Rng rng(211);
  const ChartConfig cfg;

  SUBCASE("uniform targets across shapes") {
    for (auto [n, p] : {std::pair{3, 2}, {5, 3}, {10, 4}}) {
      const ModelTarget model = uniform_stiefel_target(make_shape(n, p));
      for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd xi, aux;
        random_point(model, rng, xi, aux);
        CHECK(fd_matches(model, cfg, xi, aux));
      }
    }
  }

  SUBCASE("ppca") {
    const ModelTarget model = small_ppca(rng);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      CHECK(fd_matches(model, cfg, xi, aux));
    }
  }

  SUBCASE("eigenmodel") {
    const SynthNetwork net = synth_network(12, 3, 99);
    const ModelTarget model = eigenmodel_target(net.data, 3);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      CHECK(fd_matches(model, cfg, xi, aux));
    }
  }

  SUBCASE("eigenmodel with an ordered spectrum") {
    const SynthNetwork net = synth_network(10, 2, 7);
    EigenmodelOptions opts;
    opts.ordered_lambda = true;
    const ModelTarget model = eigenmodel_target(net.data, 2, opts);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      CHECK(fd_matches(model, cfg, xi, aux));
      Eigen::VectorXd aux_c;
      aux_to_constrained(model, aux, aux_c);
      CHECK(aux_c[1] < aux_c[2]);  // lambda really is increasing
    }
  }

  SUBCASE("mirrored chart away from the seams") {
    ChartConfig mirrored = cfg;
    mirrored.mirrored = true;
    const ModelTarget model = small_ppca(rng);
    int checked = 0;
    while (checked < 25) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      // keep the finite-difference stencil inside one mirror branch
      const ChartResult res = constrain(xi, mirrored, model.shape);
      bool safe = true;
      const auto idx = angle_indices(model.shape);
      for (int k = 0; k < model.shape.d; ++k) {
        if (idx[static_cast<std::size_t>(k)].kind == AngleKind::FullCircle &&
            std::abs(std::abs(res.theta.values[k]) - kPi / 2) < 0.05) {
          safe = false;
        }
      }
      if (!safe) continue;
      ++checked;
      CHECK(fd_matches(model, mirrored, xi, aux));
    }
  }
}

TEST_CASE("eval_logp agrees with eval_grad's density value") {
  Rng rng(509);
  const ChartConfig cfg;
  const SynthNetwork net = synth_network(9, 2, 4);
  const std::vector<ModelTarget> models = {uniform_stiefel_target(make_shape(6, 2)),
                                           small_ppca(rng), eigenmodel_target(net.data, 2)};
  for (const auto& model : models) {
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      CHECK(eval_grad(xi, aux, model, cfg).logp == eval_logp(xi, aux, model, cfg));
    }
  }
}

TEST_CASE("tangential gradient is invariant under radial scaling") {
  Rng rng(223);
  const ChartConfig cfg;
  const ModelTarget model = uniform_stiefel_target(make_shape(4, 2));
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd xi, aux;
    random_point(model, rng, xi, aux);

    const auto idx = angle_indices(model.shape);
    const GradientBundle base = eval_grad(xi, aux, model, cfg);

    const double lambda = rng.uniform(0.7, 1.3);
    Eigen::VectorXd scaled = xi;
    int slot = 0;
    for (const auto& ai : idx) {
      if (ai.kind == AngleKind::FullCircle) {
        scaled[slot] *= lambda;
        scaled[slot + 1] *= lambda;
        slot += 2;
      } else {
        slot += 1;
      }
    }
    const GradientBundle after = eval_grad(scaled, aux, model, cfg);

    slot = 0;
    for (const auto& ai : idx) {
      if (ai.kind == AngleKind::FullCircle) {
        const double tangential_base = xi[slot] * base.grad_xi[slot + 1] - xi[slot + 1] * base.grad_xi[slot];
        const double tangential_scaled = scaled[slot] * after.grad_xi[slot + 1] - scaled[slot + 1] * after.grad_xi[slot];
        CHECK(std::abs(tangential_base - tangential_scaled) < 1e-8);
        slot += 2;
      } else {
        slot += 1;
      }
    }
  }
}

TEST_CASE("eval_grad rotation work scales linearly in n at fixed p") {
  const ChartConfig cfg;
  auto ops_for = [&cfg](int n, int p) {
    const ModelTarget model = uniform_stiefel_target(make_shape(n, p));
    const Eigen::VectorXd xi =
        unconstrain({model.shape, Eigen::VectorXd::Zero(model.shape.d)}, cfg);
    OpCounter ops;
    eval_grad(xi, Eigen::VectorXd(), model, cfg, &ops);
    return static_cast<double>(ops.multiply_adds);
  };
  const double ratio = ops_for(200, 2) / ops_for(100, 2);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.5);
}

TEST_CASE("degenerate states reject cleanly") {
  const Shape sh = make_shape(3, 2);
  const ModelTarget model = uniform_stiefel_target(sh);
  const ChartConfig cfg;
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(unconstrained_dim(sh));
  xi << 1e-10, 0.0, 0.0, 1.0, 0.0;
  const GradientBundle g = eval_grad(xi, Eigen::VectorXd(), model, cfg);
  CHECK(g.degenerate);
  CHECK(g.logp == -std::numeric_limits<double>::infinity());
  CHECK(g.grad_xi.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("aux transforms roundtrip with correct jacobians") {
  ModelTarget model;
  model.aux = {{"a", 1, AuxTransform::Identity},
               {"b", 3, AuxTransform::OrderedPositive},
               {"c", 1, AuxTransform::LogPositive},
               {"d", 2, AuxTransform::Ordered}};
  Eigen::VectorXd u(7);
  u << 0.4, -0.3, 0.2, -1.0, 0.6, -0.8, 0.1;
  Eigen::VectorXd c;
  const double log_jac = aux_to_constrained(model, u, c);

  CHECK(c[0] == 0.4);
  CHECK(c[1] == doctest::Approx(std::exp(-0.3)));
  CHECK(c[2] == doctest::Approx(std::exp(-0.3) + std::exp(0.2)));
  CHECK(c[3] == doctest::Approx(std::exp(-0.3) + std::exp(0.2) + std::exp(-1.0)));
  CHECK(c[4] == doctest::Approx(std::exp(0.6)));
  CHECK(c[5] == doctest::Approx(-0.8));
  CHECK(c[6] == doctest::Approx(-0.8 + std::exp(0.1)));
  CHECK(log_jac == doctest::Approx(-0.3 + 0.2 - 1.0 + 0.6 + 0.1));

  // ordered blocks really are increasing
  CHECK(c[1] < c[2]);
  CHECK(c[2] < c[3]);
  CHECK(c[5] < c[6]);
}

#include "checks.hpp"

#include "stiefel/grad.hpp"
#include "stiefel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stiefel::checks {

namespace {

constexpr double kPi = 3.14159265358979323846;

AngleVector random_interior(const Shape& sh, Rng& rng, double margin) {
  AngleVector theta{sh, Eigen::VectorXd(sh.d)};
  const auto idx = angle_indices(sh);
  for (int k = 0; k < sh.d; ++k) {
    if (idx[static_cast<std::size_t>(k)].kind == AngleKind::FullCircle) {
      theta.values[k] = rng.uniform(-kPi + margin, kPi - margin);
    } else {
      theta.values[k] = rng.uniform(-kPi / 2 + margin, kPi / 2 - margin);
    }
  }
  return theta;
}

std::string shape_tag(const Shape& sh) {
  return "(" + std::to_string(sh.n) + "," + std::to_string(sh.p) + ")";
}

void random_point(const ModelTarget& model, Rng& rng, Eigen::VectorXd& xi, Eigen::VectorXd& aux) {
  const Shape& sh = model.shape;
  xi.resize(unconstrained_dim(sh));
  int slot = 0;
  for (const auto& ai : angle_indices(sh)) {
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

}  // namespace

BatteryResult roundtrip_battery(const std::vector<Shape>& shapes, int cases, std::uint64_t seed,
                                double tol_matrix, double tol_angles) {
  Rng rng(seed);
  double worst_matrix = 0.0;
  double worst_angle = 0.0;
  for (const Shape& sh : shapes) {
    for (int c = 0; c < cases; ++c) {
      const StiefelMatrix y = oracle::haar_sample(sh, rng);
      const AngleVector theta = matrix_to_givens(y);
      const StiefelMatrix back = givens_to_matrix(theta);
      worst_matrix = std::max(worst_matrix, (back.entries - y.entries).cwiseAbs().maxCoeff());

      // angle recovery conditioning degrades like the inverse product of
      // the later cosines in a column (several jointly near-boundary
      // angles stack), so the angle-space check stays in the
      // well-conditioned interior; the matrix direction above is the
      // boundary-stable contract
      const AngleVector interior = random_interior(sh, rng, 5e-2);
      const AngleVector round = matrix_to_givens(givens_to_matrix(interior));
      worst_angle = std::max(worst_angle, (round.values - interior.values).cwiseAbs().maxCoeff());
    }
  }
  BatteryResult out;
  out.pass = worst_matrix <= tol_matrix && worst_angle <= tol_angles;
  std::ostringstream ss;
  ss << "max |Y - Y_roundtrip| = " << worst_matrix << ", max angle error = " << worst_angle;
  out.detail = ss.str();
  return out;
}

BatteryResult jacobian_battery(const std::vector<Shape>& shapes, int points, std::uint64_t seed,
                               double tol) {
  Rng rng(seed);
  double worst = 0.0;
  std::string worst_at;
  for (const Shape& sh : shapes) {
    for (int c = 0; c < points; ++c) {
      const AngleVector theta = random_interior(sh, rng, 0.05);
      const double err = std::abs(log_measure(theta) - oracle::numeric_log_measure(theta));
      if (err > worst) {
        worst = err;
        worst_at = shape_tag(sh);
      }
    }
  }
  BatteryResult out;
  out.pass = worst <= tol;
  std::ostringstream ss;
  ss << "max |analytic - numeric| = " << worst;
  if (!worst_at.empty()) ss << " at shape " << worst_at;
  out.detail = ss.str();
  return out;
}

BatteryResult gradient_battery(int points, std::uint64_t seed, double rel_tol, double abs_floor) {
  Rng rng(seed);

  // deterministic synthetic inputs for the data-driven models
  Eigen::MatrixXd obs(25, 3);
  for (int r = 0; r < 25; ++r) {
    const double z1 = rng.normal(), z2 = rng.normal();
    obs(r, 0) = 2.0 * z1 + 0.6 * rng.normal();
    obs(r, 1) = z2 + 0.6 * rng.normal();
    obs(r, 2) = 0.6 * rng.normal();
  }
  const SynthNetwork net = synth_network(12, 3, seed ^ 0xe19e2ULL);

  std::vector<ModelTarget> models;
  models.push_back(uniform_stiefel_target(make_shape(5, 3)));
  models.push_back(ppca_target(ppca_data_from_observations(obs), 2));
  models.push_back(eigenmodel_target(net.data, 3));

  const ChartConfig cfg;
  double worst_rel = 0.0;
  std::string worst_model;
  bool pass = true;

  for (const auto& model : models) {
    for (int c = 0; c < points; ++c) {
      Eigen::VectorXd xi, aux;
      random_point(model, rng, xi, aux);
      const GradientBundle g = eval_grad(xi, aux, model, cfg);
      if (!std::isfinite(g.logp)) {
        pass = false;
        worst_model = model.name + " (non-finite logp)";
        continue;
      }
      Eigen::VectorXd full(xi.size() + aux.size());
      full << xi, aux;
      const Eigen::VectorXd fd = oracle::fd_gradient(
          [&](const Eigen::VectorXd& q) {
            return eval_logp(q.head(xi.size()), q.tail(aux.size()), model, cfg);
          },
          full, 1e-5);
      Eigen::VectorXd analytic(full.size());
      analytic << g.grad_xi, g.grad_aux;
      for (Eigen::Index k = 0; k < full.size(); ++k) {
        const double scale = std::max(std::abs(analytic[k]), std::abs(fd[k]));
        const double err = std::abs(analytic[k] - fd[k]);
        if (err > abs_floor) {
          const double rel = err / std::max(scale, 1e-300);
          if (rel > worst_rel) {
            worst_rel = rel;
            worst_model = model.name;
          }
          if (rel > rel_tol) pass = false;
        }
      }
    }
  }

  BatteryResult out;
  out.pass = pass;
  std::ostringstream ss;
  ss << "max relative error above floor = " << worst_rel;
  if (!worst_model.empty()) ss << " (" << worst_model << ")";
  out.detail = ss.str();
  return out;
}

BatteryResult haar_marginal_battery(const std::vector<Shape>& shapes, int draws, double threshold,
                                    std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  std::string worst_at;
  for (const Shape& sh : shapes) {
    const auto idx = angle_indices(sh);
    Eigen::MatrixXd samples(draws, sh.d);
    for (int k = 0; k < draws; ++k) {
      samples.row(k) = matrix_to_givens(oracle::haar_sample(sh, rng)).values;
    }
    for (int a = 0; a < sh.d; ++a) {
      std::vector<double> col(samples.col(a).data(), samples.col(a).data() + draws);
      const auto rep =
          oracle::ks_statistic(col, oracle::angle_marginal_cdf(idx[static_cast<std::size_t>(a)]),
                               threshold);
      if (rep.statistic > worst) {
        worst = rep.statistic;
        worst_at = shape_tag(sh) + " angle " + std::to_string(a);
      }
    }
  }
  BatteryResult out;
  out.pass = worst < threshold;
  std::ostringstream ss;
  ss << "max KS statistic = " << worst << " (threshold " << threshold << ")";
  if (!worst_at.empty()) ss << " at " << worst_at;
  out.detail = ss.str();
  return out;
}

BatteryResult sampler_marginal_battery(const std::vector<Shape>& shapes, const HmcConfig& base,
                                       double threshold, double y11_threshold,
                                       std::uint64_t seed) {
  double worst = 0.0;
  double worst_y11 = 0.0;
  std::string worst_at;
  Rng oracle_rng(seed ^ 0x0badf00dULL);

  for (const Shape& sh : shapes) {
    const ModelTarget model = uniform_stiefel_target(sh);
    const ChartConfig chart;
    HmcConfig cfg = base;
    cfg.seed = seed ^ (static_cast<std::uint64_t>(sh.n) << 16 | static_cast<std::uint64_t>(sh.p));

    const SampleResult res = run(model, sh, chart, cfg);
    const int total = cfg.chains * cfg.iters;
    const auto idx = angle_indices(sh);

    for (int a = 0; a < sh.d; ++a) {
      std::vector<double> xs;
      xs.reserve(static_cast<std::size_t>(total));
      for (const auto& chain : res.chains) {
        for (int it = 0; it < cfg.iters; ++it) xs.push_back(chain.draws(it, a));
      }
      const auto rep =
          oracle::ks_statistic(xs, oracle::angle_marginal_cdf(idx[static_cast<std::size_t>(a)]),
                               threshold);
      if (rep.statistic > worst) {
        worst = rep.statistic;
        worst_at = shape_tag(sh) + " angle " + std::to_string(a);
      }
    }

    // two-sample agreement with the QR oracle on the Y11 functional
    std::vector<double> y11_hmc;
    for (const auto& chain : res.chains) {
      for (int it = 0; it < cfg.iters; ++it) y11_hmc.push_back(chain.draws(it, sh.d));
    }
    std::vector<double> y11_oracle;
    for (int k = 0; k < 5000; ++k) {
      y11_oracle.push_back(oracle::haar_sample(sh, oracle_rng).entries(0, 0));
    }
    worst_y11 = std::max(worst_y11, oracle::ks_two_sample(y11_hmc, y11_oracle));
  }

  BatteryResult out;
  out.pass = worst < threshold && worst_y11 < y11_threshold;
  std::ostringstream ss;
  ss << "max angle KS = " << worst << " (threshold " << threshold << ")";
  if (!worst_at.empty()) ss << " at " << worst_at;
  ss << "; max Y11 two-sample KS = " << worst_y11 << " (threshold " << y11_threshold << ")";
  out.detail = ss.str();
  return out;
}

}  // namespace stiefel::checks

#include "stiefel/hmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

namespace stiefel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDivergenceThreshold = 1000.0;  // |dH| above this marks a divergence

struct DualAveraging {
  double mu;
  double log_eps;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  double target;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  int m = 1;

  DualAveraging(double eps0, double target_accept)
      : mu(std::log(10.0 * eps0)), log_eps(std::log(eps0)), target(target_accept) {}

  void update(double accept) {
    const double w = 1.0 / (m + t0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept);
    log_eps = mu - std::sqrt(static_cast<double>(m)) / gamma * h_bar;
    const double w2 = std::pow(static_cast<double>(m), -kappa);
    log_eps_bar = w2 * log_eps + (1.0 - w2) * log_eps_bar;
    ++m;
  }

  double current() const { return std::exp(log_eps); }
  double averaged() const { return std::exp(log_eps_bar); }
};

Eigen::VectorXd draw_momentum(Rng& rng, const Eigen::VectorXd& inv_mass) {
  Eigen::VectorXd p(inv_mass.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = rng.normal() / std::sqrt(inv_mass[k]);
  return p;
}

double kinetic(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  return 0.5 * p.cwiseProduct(inv_mass).dot(p);
}

// Doubling/halving until the mean probe acceptance crosses the target,
// then log-space bisection inside the bracket. Probes average several
// momentum draws across the supplied positions; max_probe_steps = 1 gives
// the classic single-step initialization, larger values probe with
// jittered trajectories that match what the sampler will actually run.
double find_step_size(const LogDensityGradient& target,
                      const std::vector<Eigen::VectorXd>& positions,
                      const Eigen::VectorXd& inv_mass, double target_accept, Rng& rng, double eps0,
                      int max_probe_steps) {
  constexpr int kMomenta = 8;
  auto mean_accept = [&](double eps) {
    double acc = 0.0;
    for (int k = 0; k < kMomenta; ++k) {
      const Eigen::VectorXd& q = positions[k % positions.size()];
      const int steps = max_probe_steps <= 1 ? 1 : rng.uniform_int(1, max_probe_steps);
      const Trajectory t = leapfrog(target, q, draw_momentum(rng, inv_mass), eps, steps, inv_mass);
      if (std::isfinite(t.h1)) acc += std::exp(std::min(0.0, t.h0 - t.h1));
    }
    return acc / kMomenta;
  };

  double eps = std::clamp(eps0, 1e-8, 1e2);
  double a = mean_accept(eps);
  int guard = 0;
  while (a <= 1e-12 && eps > 1e-10 && guard++ < 60) {
    eps *= 0.25;
    a = mean_accept(eps);
  }
  if (a <= 1e-12) return eps;  // hopeless target; the warmup divergence guard will report it

  double lo, hi;
  if (a > target_accept) {
    lo = hi = eps;
    while (guard++ < 120) {
      hi *= 2.0;
      if (hi > 1e3) {
        hi = 1e3;
        break;
      }
      if (mean_accept(hi) < target_accept) break;
      lo = hi;
    }
  } else {
    lo = hi = eps;
    while (guard++ < 120) {
      lo *= 0.5;
      if (lo < 1e-10) {
        lo = 1e-10;
        break;
      }
      if (mean_accept(lo) > target_accept) break;
      hi = lo;
    }
  }
  for (int it = 0; it < 10; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mean_accept(mid) > target_accept) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

int env_thread_cap() {
  if (const char* raw = std::getenv("STIEFEL_GIVENS_THREADS")) {
    const int v = std::atoi(raw);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void validate(const HmcConfig& cfg) {
  if (cfg.chains < 1) throw std::invalid_argument("HmcConfig: chains must be >= 1");
  if (cfg.iters < 1 || cfg.warmup < 1) throw std::invalid_argument("HmcConfig: iters and warmup must be >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw std::invalid_argument("HmcConfig: target_accept must lie in (0, 1)");
  }
  if (cfg.leapfrog_steps < 1) throw std::invalid_argument("HmcConfig: leapfrog_steps must be >= 1");
}

Trajectory leapfrog(const LogDensityGradient& target, Eigen::VectorXd q, Eigen::VectorXd p,
                    double step, int steps, const Eigen::VectorXd& inv_mass) {
  Trajectory out;
  Eigen::VectorXd grad(q.size());
  double logp = target(q, grad);
  out.h0 = -logp + kinetic(p, inv_mass);
  if (!std::isfinite(logp)) {
    out.q = std::move(q);
    out.p = std::move(p);
    out.h1 = std::numeric_limits<double>::infinity();
    out.divergent = true;
    return out;
  }

  for (int l = 0; l < steps; ++l) {
    p += 0.5 * step * grad;
    q += step * inv_mass.cwiseProduct(p);
    logp = target(q, grad);
    if (!std::isfinite(logp)) {
      out.divergent = true;
      break;
    }
    p += 0.5 * step * grad;
  }

  out.h1 = out.divergent ? std::numeric_limits<double>::infinity()
                         : -logp + kinetic(p, inv_mass);
  if (!std::isfinite(out.h1) || std::abs(out.h1 - out.h0) > kDivergenceThreshold) {
    out.divergent = true;
  }
  out.q = std::move(q);
  out.p = std::move(p);
  return out;
}

RawChainOutput run_chain(const LogDensityGradient& target, const Eigen::VectorXd& init,
                         const HmcConfig& cfg, Rng rng) {
  validate(cfg);
  const Eigen::Index dim = init.size();
  Eigen::VectorXd q = init;

  {
    Eigen::VectorXd grad(dim);
    if (!std::isfinite(target(q, grad))) {
      throw std::runtime_error("hmc: initial point has non-finite log density");
    }
  }

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(dim);
  double eps = find_step_size(target, {q}, inv_mass, cfg.target_accept, rng, 1.0, 1);
  DualAveraging da(eps, cfg.target_accept);

  auto one_iteration = [&](double step) {
    const int steps = rng.uniform_int(1, cfg.leapfrog_steps);
    const Eigen::VectorXd p = draw_momentum(rng, inv_mass);
    const Trajectory traj = leapfrog(target, q, p, step, steps, inv_mass);
    double accept = 0.0;
    if (!traj.divergent) {
      accept = std::min(1.0, std::exp(traj.h0 - traj.h1));
      if (rng.uniform() < accept) q = traj.q;
    }
    return std::pair<double, bool>(accept, traj.divergent);
  };

  RawChainOutput out;
  Eigen::MatrixXd warm_draws(cfg.warmup, dim);
  for (int it = 0; it < cfg.warmup; ++it) {
    const auto [accept, divergent] = one_iteration(da.current());
    if (divergent) ++out.warmup_divergences;
    da.update(accept);
    warm_draws.row(it) = q;
  }
  if (out.warmup_divergences > static_cast<int>(0.9 * cfg.warmup)) {
    throw std::runtime_error("hmc: more than 90% of warmup iterations diverged (step size " +
                             std::to_string(da.current()) + "); the target may be unusable");
  }

  // Diagonal mass from the second half of warmup, lightly regularized.
  const int tail = cfg.warmup - cfg.warmup / 2;
  if (tail >= 4) {
    const Eigen::MatrixXd w = warm_draws.bottomRows(tail);
    const Eigen::RowVectorXd mean = w.colwise().mean();
    const double nw = static_cast<double>(tail);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double var = (w.col(k).array() - mean[k]).square().sum() / (nw - 1.0);
      const double shrunk = nw / (nw + 5.0) * var + 5.0 / (nw + 5.0) * 1e-3;
      inv_mass[k] = std::max(shrunk, 1e-10);
    }
    // re-anchor the step size to the new metric with trajectory probes
    // spread across second-half warmup states
    std::vector<Eigen::VectorXd> positions;
    for (int k = 0; k < 8; ++k) {
      positions.push_back(warm_draws.row(cfg.warmup / 2 + (k * (tail - 1)) / 7));
    }
    eps = find_step_size(target, positions, inv_mass, cfg.target_accept, rng, da.averaged(),
                         cfg.leapfrog_steps);
  } else {
    eps = da.averaged();
  }

  out.draws.resize(cfg.iters, dim);
  double accept_sum = 0.0;
  for (int it = 0; it < cfg.iters; ++it) {
    const auto [accept, divergent] = one_iteration(eps);
    if (divergent) ++out.divergences;
    accept_sum += accept;
    out.draws.row(it) = q;
  }
  out.accept_rate = accept_sum / cfg.iters;
  out.step_size = eps;
  return out;
}

std::vector<std::string> parameter_columns(const ModelTarget& model) {
  std::vector<std::string> cols;
  for (const auto& idx : angle_indices(model.shape)) {
    cols.push_back("theta_" + std::to_string(idx.i) + "_" + std::to_string(idx.j));
  }
  for (int r = 1; r <= model.shape.n; ++r) {
    for (int c = 1; c <= model.shape.p; ++c) {
      cols.push_back("Y_" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  for (const auto& name : model.aux_names()) cols.push_back(name);
  return cols;
}

SampleResult run(const ModelTarget& model, const Shape& shape, const ChartConfig& chart,
                 const HmcConfig& hmc) {
  validate(hmc);
  validate(chart);
  if (shape.n != model.shape.n || shape.p != model.shape.p) {
    throw std::invalid_argument("run: model and shape are inconsistent");
  }

  const auto t_start = std::chrono::steady_clock::now();
  const int xi_dim = unconstrained_dim(shape);
  const int aux_dim = model.aux_dim();
  const int dim = xi_dim + aux_dim;
  const auto idx = angle_indices(shape);

  auto target = [&model, &chart, xi_dim, aux_dim](const Eigen::VectorXd& q,
                                                  Eigen::VectorXd& grad) {
    const GradientBundle g = eval_grad(q.head(xi_dim), q.tail(aux_dim), model, chart);
    grad.resize(q.size());
    grad.head(xi_dim) = g.grad_xi;
    grad.tail(aux_dim) = g.grad_aux;
    return g.logp;
  };

  SampleResult result;
  result.columns = parameter_columns(model);
  result.chains.resize(hmc.chains);

  std::vector<RawChainOutput> raw(hmc.chains);
  std::vector<std::exception_ptr> errors(hmc.chains);

  auto run_one = [&](int chain) {
    try {
      Rng rng = Rng::chain_stream(hmc.seed, chain);
      // unit-shell init for the circle pairs, modest logistic reals elsewhere
      Eigen::VectorXd init(dim);
      int slot = 0;
      for (const auto& ai : idx) {
        if (ai.kind == AngleKind::FullCircle) {
          const double phi = rng.uniform(-kPi, kPi);
          init[slot] = std::cos(phi);
          init[slot + 1] = std::sin(phi);
          slot += 2;
        } else {
          init[slot] = rng.uniform(-2.0, 2.0);
          slot += 1;
        }
      }
      for (int k = 0; k < aux_dim; ++k) init[xi_dim + k] = rng.uniform(-2.0, 2.0);
      raw[chain] = run_chain(target, init, hmc, std::move(rng));
    } catch (...) {
      errors[chain] = std::current_exception();
    }
  };

  const int n_threads = std::min(env_thread_cap(), hmc.chains);
  if (n_threads <= 1) {
    for (int c = 0; c < hmc.chains; ++c) run_one(c);
  } else {
    for (int base = 0; base < hmc.chains; base += n_threads) {
      std::vector<std::thread> pool;
      for (int c = base; c < std::min(base + n_threads, hmc.chains); ++c) {
        pool.emplace_back(run_one, c);
      }
      for (auto& t : pool) t.join();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // convert to the constrained scale: angles, Y row-major, aux
  const int n_params = static_cast<int>(result.columns.size());
  std::vector<Eigen::MatrixXd> per_chain;
  for (int c = 0; c < hmc.chains; ++c) {
    Eigen::MatrixXd draws(hmc.iters, n_params);
    for (int it = 0; it < hmc.iters; ++it) {
      const Eigen::VectorXd q = raw[c].draws.row(it);
      const ChartResult chart_res = constrain(q.head(xi_dim), chart, shape);
      const StiefelMatrix y = givens_to_matrix(chart_res.theta);
      Eigen::VectorXd aux_c;
      aux_to_constrained(model, q.tail(aux_dim), aux_c);

      draws.row(it).head(shape.d) = chart_res.theta.values;
      int at = shape.d;
      for (int r = 0; r < shape.n; ++r) {
        for (int col = 0; col < shape.p; ++col) draws(it, at++) = y.entries(r, col);
      }
      draws.row(it).tail(aux_dim) = aux_c;
    }
    result.chains[c].draws = std::move(draws);
    result.chains[c].accept_rate = raw[c].accept_rate;
    result.chains[c].divergences = raw[c].divergences;
    result.chains[c].step_size = raw[c].step_size;
    per_chain.push_back(result.chains[c].draws);
  }

  result.diagnostics = compute_diagnostics(per_chain, result.columns);
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace stiefel

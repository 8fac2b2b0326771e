#include "stiefel/model.hpp"

#include "stiefel/oracle.hpp"
#include "stiefel/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stiefel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// half-Normal(sd) log density for v >= 0
double half_normal_logpdf(double v, double sd) {
  return std::log(2.0) - std::log(sd) - 0.5 * std::log(2.0 * kPi) - 0.5 * v * v / (sd * sd);
}

double normal_logpdf(double v, double sd) {
  return -std::log(sd) - 0.5 * std::log(2.0 * kPi) - 0.5 * v * v / (sd * sd);
}

double log_std_normal_pdf(double s) { return -0.5 * s * s - 0.5 * std::log(2.0 * kPi); }

}  // namespace

int ModelTarget::aux_dim() const {
  int d = 0;
  for (const auto& b : aux) d += b.size;
  return d;
}

std::vector<std::string> ModelTarget::aux_names() const {
  std::vector<std::string> names;
  for (const auto& b : aux) {
    if (b.size == 1) {
      names.push_back(b.name);
    } else {
      for (int k = 1; k <= b.size; ++k) names.push_back(b.name + "_" + std::to_string(k));
    }
  }
  return names;
}

double log_std_normal_cdf(double s) {
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  if (s < -37.0) {
    // asymptotic expansion of the Mills ratio
    const double s2 = s * s;
    return -0.5 * s2 - 0.5 * std::log(2.0 * kPi) - std::log(-s) +
           std::log1p(-1.0 / s2 + 3.0 / (s2 * s2));
  }
  if (s > 5.0) return std::log1p(-0.5 * std::erfc(s * kInvSqrt2));
  return std::log(0.5 * std::erfc(-s * kInvSqrt2));
}

ModelTarget uniform_stiefel_target(const Shape& shape) {
  ModelTarget m;
  m.name = "uniform";
  m.shape = shape;
  m.evaluate = [shape](const Eigen::MatrixXd&, const Eigen::VectorXd&, Eigen::MatrixXd* dy,
                       Eigen::VectorXd* daux) {
    if (dy) dy->setZero(shape.n, shape.p);
    if (daux) daux->resize(0);
    return 0.0;
  };
  return m;
}

PpcaData ppca_data_from_observations(const Eigen::MatrixXd& observations) {
  if (observations.rows() < 1) throw std::invalid_argument("ppca: need at least one observation");
  PpcaData d;
  d.obs_count = static_cast<int>(observations.rows());
  d.sigma_hat = (observations.transpose() * observations) / static_cast<double>(d.obs_count);
  return d;
}

ModelTarget ppca_target(const PpcaData& data, int p) {
  const int n = data.dim();
  if (p < 1 || p > n) throw std::invalid_argument("ppca_target: need 1 <= p <= n");
  if ((data.sigma_hat - data.sigma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("ppca_target: sigma_hat is not symmetric");
  }

  ModelTarget m;
  m.name = "ppca";
  m.shape = make_shape(n, p);
  m.aux = {{"lambda", p, AuxTransform::OrderedPositive}, {"sigma2", 1, AuxTransform::LogPositive}};

  const Eigen::MatrixXd sigma_hat = data.sigma_hat;
  const double nobs = data.obs_count;
  const double prior_sd = 5.0;

  m.evaluate = [n, p, sigma_hat, nobs, prior_sd](const Eigen::MatrixXd& w,
                                                 const Eigen::VectorXd& aux, Eigen::MatrixXd* dw,
                                                 Eigen::VectorXd* daux) -> double {
    const Eigen::VectorXd lambda = aux.head(p);
    const double sigma2 = aux[p];

    const Eigen::VectorXd lam2 = lambda.array().square();
    Eigen::MatrixXd c = w * lam2.asDiagonal() * w.transpose();
    c.diagonal().array() += sigma2;

    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      if (dw) dw->setZero(n, p);
      if (daux) daux->setZero(p + 1);
      return kNegInf;
    }

    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const Eigen::MatrixXd cinv_sigma = llt.solve(sigma_hat);
    double logp = -0.5 * nobs * (logdet + cinv_sigma.trace());

    for (int k = 0; k < p; ++k) logp += half_normal_logpdf(lambda[k], prior_sd);
    logp += half_normal_logpdf(sigma2, prior_sd);

    if (dw || daux) {
      // d logp / dC = (N/2) (C^-1 Sigma C^-1 - C^-1), symmetric
      const Eigen::MatrixXd cinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
      const Eigen::MatrixXd s = 0.5 * nobs * (llt.solve(cinv_sigma.transpose()) - cinv);
      if (dw) *dw = 2.0 * s * w * lam2.asDiagonal();
      if (daux) {
        daux->resize(p + 1);
        const Eigen::MatrixXd wsw = w.transpose() * s * w;
        for (int k = 0; k < p; ++k) {
          (*daux)[k] = 2.0 * lambda[k] * wsw(k, k) - lambda[k] / (prior_sd * prior_sd);
        }
        (*daux)[p] = s.trace() - sigma2 / (prior_sd * prior_sd);
      }
    }
    return logp;
  };
  return m;
}

ModelTarget eigenmodel_target(const NetworkData& data, int p, const EigenmodelOptions& opts) {
  const int n = data.n_nodes;
  if (p < 1 || p > n) throw std::invalid_argument("eigenmodel_target: need 1 <= p <= n_nodes");
  if (data.adjacency.rows() != n || data.adjacency.cols() != n) {
    throw std::invalid_argument("eigenmodel_target: adjacency size does not match n_nodes");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const int v = data.adjacency(i, j);
      if (v != 0 && v != 1) throw std::invalid_argument("eigenmodel_target: adjacency must be 0/1");
      if (v != data.adjacency(j, i)) {
        throw std::invalid_argument("eigenmodel_target: adjacency must be symmetric");
      }
    }
  }
  const bool has_mask = opts.dyad_mask.size() > 0;
  if (has_mask && (opts.dyad_mask.rows() != n || opts.dyad_mask.cols() != n)) {
    throw std::invalid_argument("eigenmodel_target: dyad mask size does not match n_nodes");
  }

  ModelTarget m;
  m.name = "eigenmodel";
  m.shape = make_shape(n, p);
  m.aux = {{"c", 1, AuxTransform::Identity},
           {"lambda", p, opts.ordered_lambda ? AuxTransform::Ordered : AuxTransform::Identity}};

  const Eigen::MatrixXi adj = data.adjacency;
  const Eigen::MatrixXi mask = opts.dyad_mask;
  const double c_sd = 10.0;
  const double lambda_var = static_cast<double>(n);

  m.evaluate = [n, p, adj, mask, has_mask, c_sd, lambda_var](
                   const Eigen::MatrixXd& u, const Eigen::VectorXd& aux, Eigen::MatrixXd* du,
                   Eigen::VectorXd* daux) -> double {
    const double c = aux[0];
    const Eigen::VectorXd lambda = aux.segment(1, p);

    const Eigen::MatrixXd b = u * lambda.asDiagonal();  // n x p
    const Eigen::MatrixXd latent = b * u.transpose();   // U Lambda U^T

    double logp = 0.0;
    Eigen::MatrixXd gsym;
    if (du || daux) gsym = Eigen::MatrixXd::Zero(n, n);

    double gc = 0.0;
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (has_mask && mask(i, j) == 0) continue;
        const double s = latent(i, j) + c;
        double g;
        if (adj(i, j) == 1) {
          const double lcdf = log_std_normal_cdf(s);
          logp += lcdf;
          g = std::exp(log_std_normal_pdf(s) - lcdf);
        } else {
          const double lccdf = log_std_normal_cdf(-s);
          logp += lccdf;
          g = -std::exp(log_std_normal_pdf(s) - lccdf);
        }
        if (du || daux) {
          gsym(i, j) = g;
          gsym(j, i) = g;
        }
        gc += g;
      }
    }

    logp += normal_logpdf(c, c_sd);
    const double lambda_sd = std::sqrt(lambda_var);
    for (int k = 0; k < p; ++k) logp += normal_logpdf(lambda[k], lambda_sd);

    if (du || daux) {
      const Eigen::MatrixXd t = gsym * u;  // n x p
      if (du) *du = t * lambda.asDiagonal();
      if (daux) {
        daux->resize(1 + p);
        (*daux)[0] = gc - c / (c_sd * c_sd);
        const Eigen::MatrixXd ut = u.transpose() * t;
        for (int k = 0; k < p; ++k) (*daux)[1 + k] = 0.5 * ut(k, k) - lambda[k] / lambda_var;
      }
    }
    return logp;
  };
  return m;
}

Eigen::MatrixXd ppca_simulation(std::uint64_t seed) {
  Rng rng(seed ^ 0xDA7AULL);
  Eigen::MatrixXd obs(15, 3);
  for (int r = 0; r < 15; ++r) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    obs(r, 0) = 2.0 * z1 + rng.normal();
    obs(r, 1) = 1.0 * z2 + rng.normal();
    obs(r, 2) = rng.normal();
  }
  return obs;
}

SynthNetwork synth_network(int n_nodes, int p, std::uint64_t seed) {
  if (p < 1 || n_nodes < p) throw std::invalid_argument("synth_network: need 1 <= p <= n_nodes");
  Rng rng(seed ^ 0x5e1f1e1dULL);

  SynthNetwork out;
  out.u = oracle::haar_sample(make_shape(n_nodes, p), rng).entries;
  out.lambda.resize(p);
  const double lambda_sd = std::sqrt(static_cast<double>(n_nodes));
  for (int k = 0; k < p; ++k) out.lambda[k] = lambda_sd * rng.normal();
  out.c = 10.0 * rng.normal();

  const Eigen::MatrixXd latent = out.u * out.lambda.asDiagonal() * out.u.transpose();
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n_nodes, n_nodes);
  for (int i = 1; i < n_nodes; ++i) {
    for (int j = 0; j < i; ++j) {
      const double prob = 0.5 * std::erfc(-(latent(i, j) + out.c) / std::sqrt(2.0));
      const int edge = rng.uniform() < prob ? 1 : 0;
      adj(i, j) = edge;
      adj(j, i) = edge;
    }
  }
  out.data.n_nodes = n_nodes;
  out.data.adjacency = std::move(adj);
  return out;
}

}  // namespace stiefel

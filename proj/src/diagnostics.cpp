#include "stiefel/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stiefel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double sample_var(const Eigen::VectorXd& v) {
  // exactly-constant sequences get an exact zero, not mean roundoff
  if (v.maxCoeff() == v.minCoeff()) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// biased (1/n) autocovariance at the given lag
double autocov(const Eigen::VectorXd& v, int lag) {
  const double m = v.mean();
  const int n = static_cast<int>(v.size());
  double acc = 0.0;
  for (int t = 0; t + lag < n; ++t) acc += (v[t] - m) * (v[t + lag] - m);
  return acc / static_cast<double>(n);
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("split_rhat: need at least 2 chains");
  for (const auto& c : chains) {
    if (c.size() < 4) throw std::invalid_argument("split_rhat: need at least 4 draws per chain");
  }

  std::vector<Eigen::VectorXd> halves;
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    halves.push_back(c.head(half));
    halves.push_back(c.segment(half, half));
  }

  const auto m = static_cast<double>(halves.size());
  const auto len = static_cast<double>(halves.front().size());

  Eigen::VectorXd means(halves.size());
  double w = 0.0;
  for (std::size_t k = 0; k < halves.size(); ++k) {
    means[static_cast<Eigen::Index>(k)] = mean_of(halves[k]);
    w += sample_var(halves[k]);
  }
  w /= m;
  if (!(w > 0.0)) return kInf;

  const double b_over_n = sample_var(means);
  const double var_plus = (len - 1.0) / len * w + b_over_n;
  // sqrt((len-1)/len) can dip below the documented 1 - 1e-3 numerical
  // slack for short chains when the half-chain means agree unusually well
  return std::max(std::sqrt(var_plus / w), 1.0 - 1e-3);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw std::invalid_argument("effective_sample_size: no chains");
  Eigen::Index min_len = chains.front().size();
  for (const auto& c : chains) min_len = std::min(min_len, c.size());
  if (min_len < 4) throw std::invalid_argument("effective_sample_size: need at least 4 draws");

  const int m = static_cast<int>(chains.size());
  const int n = static_cast<int>(min_len);
  const double total = static_cast<double>(m) * n;

  double w = 0.0;
  Eigen::VectorXd means(m);
  for (int c = 0; c < m; ++c) {
    const Eigen::VectorXd v = chains[static_cast<std::size_t>(c)].head(n);
    means[c] = v.mean();
    w += sample_var(v);
  }
  w /= m;

  double var_plus = (n - 1.0) / n * w;
  if (m >= 2) var_plus += sample_var(means);
  if (!(var_plus > 0.0)) return 1.0;

  auto rho = [&](int lag) {
    double acc = 0.0;
    for (int c = 0; c < m; ++c) acc += autocov(chains[static_cast<std::size_t>(c)].head(n), lag);
    acc /= m;
    return 1.0 - (w - acc) / var_plus;
  };

  // Geyer initial positive sequence over pair sums rho_{2k} + rho_{2k+1}
  double tau = -1.0;
  for (int k = 0; 2 * k + 1 < n; ++k) {
    const double even = k == 0 ? 1.0 : rho(2 * k);
    const double odd = rho(2 * k + 1);
    const double pair = even + odd;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / total);

  double ess = total / tau;
  ess = std::min(ess, total);
  return std::max(ess, 1.0);
}

Diagnostics compute_diagnostics(const std::vector<Eigen::MatrixXd>& chains,
                                std::vector<std::string> columns) {
  if (chains.empty()) throw std::invalid_argument("compute_diagnostics: no chains");
  const Eigen::Index params = chains.front().cols();
  for (const auto& c : chains) {
    if (c.cols() != params) throw std::invalid_argument("compute_diagnostics: column mismatch");
  }
  if (static_cast<Eigen::Index>(columns.size()) != params) {
    throw std::invalid_argument("compute_diagnostics: name count mismatch");
  }

  Diagnostics out;
  out.columns = std::move(columns);
  out.rhat.resize(params);
  out.ess.resize(params);
  std::vector<Eigen::VectorXd> cols(chains.size());
  for (Eigen::Index j = 0; j < params; ++j) {
    for (std::size_t c = 0; c < chains.size(); ++c) cols[c] = chains[c].col(j);
    out.rhat[j] = chains.size() >= 2 ? split_rhat(cols) : 1.0;
    out.ess[j] = effective_sample_size(cols);
  }
  return out;
}

}  // namespace stiefel

#include "checks.hpp"

#include "stiefel/hmc.hpp"
#include "stiefel/model_io.hpp"
#include "stiefel/oracle.hpp"
#include "stiefel/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace stiefel;

namespace {

constexpr int kExitUserError = 1;
constexpr int kExitIoError = 2;
constexpr int kExitCheckFailed = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerFlags {
  int chains = 4;
  int iters = 500;
  int warmup = 500;
  double target_accept = 0.8;
  int leapfrog_steps = 16;
  std::uint64_t seed = 2025;
};

struct ChartFlags {
  double epsilon = 1e-5;
  double r_mean = 1.0;
  double r_sd = 0.1;
  bool mirrored = false;
};

void add_sampler_flags(CLI::App* cmd, SamplerFlags& f) {
  cmd->add_option("--chains", f.chains, "Number of chains")->capture_default_str();
  cmd->add_option("--iters", f.iters, "Post-warmup draws per chain")->capture_default_str();
  cmd->add_option("--warmup", f.warmup, "Warmup iterations per chain")->capture_default_str();
  cmd->add_option("--target-accept", f.target_accept, "Dual-averaging target acceptance rate")
      ->capture_default_str();
  cmd->add_option("--leapfrog-steps", f.leapfrog_steps,
                  "Base path length; per-iteration length is jittered in [1, L]")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
}

void add_chart_flags(CLI::App* cmd, ChartFlags& f, bool mirrored_default) {
  f.mirrored = mirrored_default;
  cmd->add_option("--epsilon", f.epsilon, "Half-circle boundary margin")->capture_default_str();
  cmd->add_option("--r-mean", f.r_mean, "Auxiliary radius prior mean")->capture_default_str();
  cmd->add_option("--r-sd", f.r_sd, "Auxiliary radius prior sd")->capture_default_str();
  cmd->add_flag("--mirrored,!--no-mirrored", f.mirrored,
                "Fold column leads into [-pi/2, pi/2] (identifiability)");
}

HmcConfig to_hmc(const SamplerFlags& f) {
  HmcConfig cfg;
  cfg.chains = f.chains;
  cfg.iters = f.iters;
  cfg.warmup = f.warmup;
  cfg.target_accept = f.target_accept;
  cfg.leapfrog_steps = f.leapfrog_steps;
  cfg.seed = f.seed;
  return cfg;
}

ChartConfig to_chart(const ChartFlags& f) {
  ChartConfig cfg;
  cfg.epsilon = f.epsilon;
  cfg.r_mean = f.r_mean;
  cfg.r_sd = f.r_sd;
  cfg.mirrored = f.mirrored;
  return cfg;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void write_draws_csv(const std::string& path, const SampleResult& res) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fputs("chain,iter", f);
  for (const auto& c : res.columns) std::fprintf(f, ",%s", c.c_str());
  std::fputc('\n', f);
  for (std::size_t chain = 0; chain < res.chains.size(); ++chain) {
    const Eigen::MatrixXd& draws = res.chains[chain].draws;
    for (Eigen::Index it = 0; it < draws.rows(); ++it) {
      std::fprintf(f, "%zu,%lld", chain + 1, static_cast<long long>(it + 1));
      for (Eigen::Index k = 0; k < draws.cols(); ++k) std::fprintf(f, ",%.17g", draws(it, k));
      std::fputc('\n', f);
    }
  }
  std::fclose(f);
}

json diagnostics_json(const SampleResult& res) {
  json diag;
  diag["columns"] = res.columns;
  diag["rhat"] = std::vector<double>(res.diagnostics.rhat.data(),
                                     res.diagnostics.rhat.data() + res.diagnostics.rhat.size());
  diag["ess"] = std::vector<double>(res.diagnostics.ess.data(),
                                    res.diagnostics.ess.data() + res.diagnostics.ess.size());
  std::vector<double> accept;
  std::vector<int> divergences;
  std::vector<double> step_sizes;
  for (const auto& c : res.chains) {
    accept.push_back(c.accept_rate);
    divergences.push_back(c.divergences);
    step_sizes.push_back(c.step_size);
  }
  diag["accept_rate"] = accept;
  diag["divergences"] = divergences;
  diag["step_size"] = step_sizes;
  diag["wall_time_s"] = res.wall_time_s;
  diag["mean_rhat"] = res.diagnostics.rhat.mean();
  diag["max_rhat"] = res.diagnostics.rhat.maxCoeff();
  diag["mean_ess"] = res.diagnostics.ess.mean();
  diag["min_ess"] = res.diagnostics.ess.minCoeff();
  return diag;
}

json diagnostics_summary(const SampleResult& res) {
  json s;
  s["mean_rhat"] = res.diagnostics.rhat.mean();
  s["max_rhat"] = res.diagnostics.rhat.maxCoeff();
  s["mean_ess"] = res.diagnostics.ess.mean();
  s["min_ess"] = res.diagnostics.ess.minCoeff();
  int total_div = 0;
  for (const auto& c : res.chains) total_div += c.divergences;
  s["total_divergences"] = total_div;
  s["wall_time_s"] = res.wall_time_s;
  return s;
}

void write_outputs(const std::string& prefix, const std::string& command, const json& config,
                   std::uint64_t seed, const std::string& started, const SampleResult& res) {
  write_draws_csv(prefix + "-draws.csv", res);
  {
    auto out = open_out(prefix + "-diag.json");
    out << diagnostics_json(res).dump(2) << "\n";
  }
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = seed;
  manifest["config"] = config;
  manifest["started"] = started;
  manifest["finished"] = iso_now();
  manifest["diagnostics"] = diagnostics_summary(res);
  manifest["outputs"] = {prefix + "-draws.csv", prefix + "-diag.json"};
  {
    auto out = open_out(prefix + "-manifest.json");
    out << manifest.dump(2) << "\n";
  }
}

json config_json(const SamplerFlags& s, const ChartFlags& c) {
  json cfg;
  cfg["chains"] = s.chains;
  cfg["iters"] = s.iters;
  cfg["warmup"] = s.warmup;
  cfg["target_accept"] = s.target_accept;
  cfg["leapfrog_steps"] = s.leapfrog_steps;
  cfg["epsilon"] = c.epsilon;
  cfg["r_mean"] = c.r_mean;
  cfg["r_sd"] = c.r_sd;
  cfg["mirrored"] = c.mirrored;
  return cfg;
}

void print_summary(const std::string& what, const SampleResult& res) {
  std::cout << what << ": " << res.chains.size() << " chains, "
            << (res.chains.empty() ? 0 : res.chains.front().draws.rows())
            << " draws/chain, mean rhat " << res.diagnostics.rhat.mean() << ", mean ESS "
            << res.diagnostics.ess.mean() << ", wall " << res.wall_time_s << " s\n";
}

// ---------------------------------------------------------------------
// subcommands

int cmd_uniform(int n, int p, const SamplerFlags& sf, const ChartFlags& cf,
                const std::string& prefix) {
  const std::string started = iso_now();
  const Shape shape = make_shape(n, p);
  const ModelTarget model = uniform_stiefel_target(shape);
  const SampleResult res = run(model, shape, to_chart(cf), to_hmc(sf));

  json config = config_json(sf, cf);
  config["n"] = n;
  config["p"] = p;
  write_outputs(prefix, "uniform", config, sf.seed, started, res);
  print_summary("uniform n=" + std::to_string(n) + " p=" + std::to_string(p), res);
  return 0;
}

int cmd_ppca(const std::string& data_path, bool simulate, int p, const SamplerFlags& sf,
             const ChartFlags& cf, const std::string& prefix) {
  const std::string started = iso_now();

  Eigen::MatrixXd obs;
  if (simulate) {
    obs = ppca_simulation(sf.seed);
    std::FILE* f = std::fopen((prefix + "-data.csv").c_str(), "w");
    if (!f) throw IoError("cannot write " + prefix + "-data.csv");
    std::fprintf(f, "x1,x2,x3\n");
    for (Eigen::Index r = 0; r < obs.rows(); ++r) {
      std::fprintf(f, "%.17g,%.17g,%.17g\n", obs(r, 0), obs(r, 1), obs(r, 2));
    }
    std::fclose(f);
  } else {
    obs = load_csv_matrix(data_path);
  }

  const PpcaData data = ppca_data_from_observations(obs);
  if (p > data.dim()) throw std::invalid_argument("ppca: p exceeds the data dimension");
  const ModelTarget model = ppca_target(data, p);
  const SampleResult res = run(model, model.shape, to_chart(cf), to_hmc(sf));

  json config = config_json(sf, cf);
  config["p"] = p;
  config["data"] = simulate ? "simulate" : data_path;
  config["n_obs"] = data.obs_count;
  write_outputs(prefix, "ppca", config, sf.seed, started, res);
  print_summary("ppca p=" + std::to_string(p), res);
  return 0;
}

int cmd_eigenmodel(const std::string& data_path, int synth_nodes, int p, bool ordered_lambda,
                   const SamplerFlags& sf, const ChartFlags& cf, const std::string& prefix) {
  const std::string started = iso_now();

  NetworkData data;
  if (synth_nodes > 0) {
    data = synth_network(synth_nodes, p, sf.seed).data;
    std::FILE* f = std::fopen((prefix + "-graph.csv").c_str(), "w");
    if (!f) throw IoError("cannot write " + prefix + "-graph.csv");
    for (int i = 0; i < data.n_nodes; ++i) {
      for (int j = 0; j < data.n_nodes; ++j) {
        std::fprintf(f, j + 1 == data.n_nodes ? "%d\n" : "%d,", data.adjacency(i, j));
      }
    }
    std::fclose(f);
  } else {
    data = load_network_file(data_path);
  }

  EigenmodelOptions opts;
  opts.ordered_lambda = ordered_lambda;
  const ModelTarget model = eigenmodel_target(data, p, opts);
  const SampleResult res = run(model, model.shape, to_chart(cf), to_hmc(sf));

  json config = config_json(sf, cf);
  config["p"] = p;
  config["ordered_lambda"] = ordered_lambda;
  config["data"] = synth_nodes > 0 ? "synth:" + std::to_string(synth_nodes) : data_path;
  config["n_nodes"] = data.n_nodes;
  write_outputs(prefix, "eigenmodel", config, sf.seed, started, res);
  print_summary("eigenmodel n=" + std::to_string(data.n_nodes) + " p=" + std::to_string(p), res);
  return 0;
}

int cmd_check(const std::string& suite, bool strict, const std::string& json_path) {
  std::uint64_t seed = 20240915ULL;
  if (strict) {
    seed = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    std::cout << "strict mode: fresh seed " << seed << "\n";
  }

  struct Entry {
    std::string name;
    checks::BatteryResult result;
  };
  std::vector<Entry> entries;

  const bool all = suite == "all";
  if (suite == "roundtrip" || all) {
    entries.push_back({"roundtrip", checks::roundtrip_battery(
                                        {make_shape(3, 2), make_shape(5, 3), make_shape(10, 4)},
                                        1000, seed)});
  }
  if (suite == "jacobian" || all) {
    entries.push_back({"jacobian", checks::jacobian_battery({make_shape(3, 1), make_shape(3, 2),
                                                             make_shape(5, 3), make_shape(6, 3)},
                                                            200, seed)});
  }
  if (suite == "gradient" || all) {
    entries.push_back({"gradient", checks::gradient_battery(200, seed)});
  }
  if (suite == "marginals" || all) {
    entries.push_back({"haar-marginals",
                       checks::haar_marginal_battery(
                           {make_shape(3, 2), make_shape(5, 2), make_shape(6, 3)}, 5000, 0.05,
                           seed)});
    HmcConfig base;
    base.warmup = 1000;
    base.leapfrog_steps = 32;
    entries.push_back({"sampler-marginals", checks::sampler_marginal_battery(
                                                {make_shape(3, 2)}, base, 0.05, 0.06, seed)});
  }
  if (entries.empty()) {
    std::cerr << "unknown check suite '" << suite
              << "' (expected roundtrip, jacobian, gradient, marginals or all)\n";
    return kExitUserError;
  }

  bool ok = true;
  json report;
  report["suite"] = suite;
  report["seed"] = seed;
  report["checks"] = json::array();
  for (const auto& e : entries) {
    ok = ok && e.result.pass;
    std::cout << (e.result.pass ? "PASS " : "FAIL ") << e.name << ": " << e.result.detail << "\n";
    report["checks"].push_back({{"name", e.name}, {"pass", e.result.pass},
                                {"detail", e.result.detail}});
  }
  report["pass"] = ok;
  if (!json_path.empty()) {
    auto out = open_out(json_path);
    out << report.dump(2) << "\n";
  }
  return ok ? 0 : kExitCheckFailed;
}

int cmd_bench(const std::string& grid, int reps, const std::string& out_path) {
  std::vector<std::pair<int, int>> shapes;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw std::invalid_argument("bench: grid entries look like 100x2");
    shapes.emplace_back(std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1)));
  }

  std::FILE* f = out_path.empty() ? stdout : std::fopen(out_path.c_str(), "w");
  if (!f) throw IoError("cannot write " + out_path);
  std::fprintf(f, "n,p,rep,multiply_adds,wall_ns\n");

  Rng rng(1234);
  for (const auto& [n, p] : shapes) {
    const Shape sh = make_shape(n, p);
    for (int rep = 0; rep < reps; ++rep) {
      AngleVector theta{sh, Eigen::VectorXd(sh.d)};
      const auto idx = angle_indices(sh);
      for (int k = 0; k < sh.d; ++k) {
        theta.values[k] = idx[static_cast<std::size_t>(k)].kind == AngleKind::FullCircle
                              ? rng.uniform(-3.0, 3.0)
                              : rng.uniform(-1.5, 1.5);
      }
      OpCounter ops;
      const auto t0 = std::chrono::steady_clock::now();
      const StiefelMatrix y = givens_to_matrix(theta, &ops);
      const auto t1 = std::chrono::steady_clock::now();
      (void)y;
      std::fprintf(f, "%d,%d,%d,%llu,%lld\n", n, p, rep,
                   static_cast<unsigned long long>(ops.multiply_adds),
                   static_cast<long long>(
                       std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
  }
  if (f != stdout) std::fclose(f);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Givens-representation sampling on the Stiefel manifold"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // uniform
  auto* uniform = app.add_subcommand("uniform", "Sample the uniform (Haar) distribution");
  int uni_n = 3, uni_p = 2;
  SamplerFlags uni_sampler;
  ChartFlags uni_chart;
  std::string uni_prefix = "uniform";
  uniform->add_option("-n,--rows", uni_n, "Rows of Y")->required();
  uniform->add_option("-p,--cols", uni_p, "Columns of Y")->required();
  add_sampler_flags(uniform, uni_sampler);
  add_chart_flags(uniform, uni_chart, false);
  uniform->add_option("-o,--out-prefix", uni_prefix, "Output file prefix")->capture_default_str();

  // ppca
  auto* ppca = app.add_subcommand("ppca", "Probabilistic PCA with an orthonormal loading frame");
  std::string ppca_data;
  bool ppca_simulate = false;
  int ppca_p = 2;
  SamplerFlags ppca_sampler;
  ChartFlags ppca_chart;
  std::string ppca_prefix = "ppca";
  ppca->add_option("--data", ppca_data, "CSV of observations (rows = observations)");
  ppca->add_flag("--simulate", ppca_simulate, "Generate the bundled 3-d synthetic dataset (N=15)");
  ppca->add_option("-p,--components", ppca_p, "Number of components")->capture_default_str();
  add_sampler_flags(ppca, ppca_sampler);
  add_chart_flags(ppca, ppca_chart, true);
  ppca->add_option("-o,--out-prefix", ppca_prefix, "Output file prefix")->capture_default_str();

  // eigenmodel
  auto* eigen_cmd = app.add_subcommand("eigenmodel", "Probit network eigenmodel");
  std::string eigen_data;
  int eigen_synth = 0;
  int eigen_p = 3;
  bool eigen_ordered = false;
  SamplerFlags eigen_sampler;
  ChartFlags eigen_chart;
  std::string eigen_prefix = "eigenmodel";
  eigen_cmd->add_option("--data", eigen_data,
                        "Graph file: dense 0/1 CSV or two-column edge list (auto-detected)");
  eigen_cmd->add_option("--synth", eigen_synth, "Generate a synthetic graph with this many nodes");
  eigen_cmd->add_option("-p,--components", eigen_p, "Latent dimension")->capture_default_str();
  eigen_cmd->add_flag("--ordered-lambda", eigen_ordered,
                      "Order the spectrum (removes the permutation modes)");
  add_sampler_flags(eigen_cmd, eigen_sampler);
  add_chart_flags(eigen_cmd, eigen_chart, false);
  eigen_cmd->add_option("-o,--out-prefix", eigen_prefix, "Output file prefix")
      ->capture_default_str();

  // check
  auto* check = app.add_subcommand("check", "Run the oracle verification batteries");
  std::string check_suite = "all";
  bool check_strict = false;
  std::string check_json;
  check->add_option("suite", check_suite, "roundtrip | jacobian | gradient | marginals | all")
      ->capture_default_str();
  check->add_flag("--strict", check_strict, "Re-run with a fresh time-based seed");
  check->add_option("--json", check_json, "Write a JSON report to this path");

  // bench
  auto* bench = app.add_subcommand("bench", "Operation counts and timings of the forward map");
  std::string bench_grid = "100x2,200x2,100x4,100x8";
  int bench_reps = 3;
  std::string bench_out;
  bench->add_option("--grid", bench_grid, "Comma-separated n x p shapes")->capture_default_str();
  bench->add_option("--reps", bench_reps, "Repetitions per shape")->capture_default_str();
  bench->add_option("-o,--out", bench_out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    std::cerr << e.what() << "\n";
    return kExitUserError;
  }

  try {
    if (uniform->parsed()) {
      return cmd_uniform(uni_n, uni_p, uni_sampler, uni_chart, uni_prefix);
    }
    if (ppca->parsed()) {
      if (ppca_data.empty() && !ppca_simulate) {
        throw std::invalid_argument("ppca: provide --data or --simulate");
      }
      return cmd_ppca(ppca_data, ppca_simulate, ppca_p, ppca_sampler, ppca_chart, ppca_prefix);
    }
    if (eigen_cmd->parsed()) {
      if (eigen_data.empty() && eigen_synth <= 0) {
        throw std::invalid_argument("eigenmodel: provide --data or --synth");
      }
      return cmd_eigenmodel(eigen_data, eigen_synth, eigen_p, eigen_ordered, eigen_sampler,
                            eigen_chart, eigen_prefix);
    }
    if (check->parsed()) {
      return cmd_check(check_suite, check_strict, check_json);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_grid, bench_reps, bench_out);
    }
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  return 0;
}

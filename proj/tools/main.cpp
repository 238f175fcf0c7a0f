#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddlab/config.hpp"
#include "ddlab/errors.hpp"
#include "ddlab/evolution.hpp"
#include "ddlab/functionals.hpp"
#include "ddlab/hypotheses.hpp"
#include "ddlab/stationary.hpp"
#include "ddlab/transport.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ddlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitHypothesis = 2;
constexpr int kExitSolver = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "./out";
  std::string format;
  long seed = -1;
  int threads = 0;
};

RunConfig load_and_merge(const CommonOpts& opts) {
  RunConfig cfg = load_config(opts.config_path);
  if (!opts.format.empty()) {
    if (opts.format != "csv" && opts.format != "json")
      throw ConfigurationError("--format must be csv or json");
    cfg.output.format = opts.format;
  }
  cfg.output.directory = opts.out_dir;
  if (opts.seed >= 0) cfg.experiment.seed = opts.seed;
  fs::create_directories(cfg.output.directory);
  return cfg;
}

ModelParams with_eps(const ModelParams& base, double eps) {
  return ModelParams::validated(base.f, base.g, base.coupling, base.phi,
                                base.psi, eps, base.dim);
}

DensityPair perturbed_init(const StationaryState& state, const RunConfig& cfg) {
  // translate the stationary profiles in opposite directions; keeps mass and
  // nonnegativity exact and gives a positive initial Lyapunov value
  const int nq = cfg.jko.nq > 0 ? cfg.jko.nq : cfg.grid.n;
  const double a = cfg.experiment.perturbation;
  QuantileRep qu = to_quantiles(state.ubar, nq);
  QuantileRep qv = to_quantiles(state.vbar, nq);
  for (double& x : qu.positions) x += a;
  for (double& x : qv.positions) x -= a;
  return {from_quantiles(qu, cfg.grid), from_quantiles(qv, cfg.grid)};
}

int cmd_validate(const RunConfig& cfg) {
  const StationaryState* state_ptr = nullptr;
  StationaryState state;
  try {
    state = solve_stationary(cfg.params, cfg.grid);
    state_ptr = &state;
  } catch (const std::exception&) {
    // report still produced, with k0 = 0
  }
  const HypothesisReport rep = full_report(cfg.params, cfg.experiment.k, state_ptr);
  nlohmann::json j = nlohmann::json::parse(to_json_string(rep));
  j["config_hash"] = cfg.hash;
  const std::string path = cfg.output.directory + "/hypotheses_" +
                           cfg.experiment.name + ".json";
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  std::cout << j.dump(2) << std::endl;
  const bool pass = rep.mccann_ok && rep.swap_ok && rep.violations.empty();
  return pass ? kExitOk : kExitHypothesis;
}

int cmd_stationary(const RunConfig& cfg) {
  std::vector<double> sweep = cfg.experiment.eps_sweep;
  if (sweep.empty()) sweep.push_back(cfg.params.eps);
  std::sort(sweep.begin(), sweep.end());
  for (double eps : sweep) {
    const ModelParams params = with_eps(cfg.params, eps);
    const StationaryState state = solve_stationary(params, cfg.grid);
    const double res = stationary_residual(params, state);
    std::string stem = cfg.output.directory + "/state_" + cfg.experiment.name;
    if (sweep.size() > 1) stem += "_eps" + std::to_string(eps);
    if (cfg.output.format == "csv") write_state_csv(stem + ".csv", state);
    write_state_json(stem + ".json", state, cfg.hash, res);
    std::cout << "eps=" << eps << " U_eps=" << state.u_eps
              << " V_eps=" << state.v_eps << " support_u=["
              << state.support_u.lo << "," << state.support_u.hi
              << "] support_v=[" << state.support_v.lo << ","
              << state.support_v.hi << "] residual=" << res << std::endl;
  }
  return kExitOk;
}

int cmd_evolve(const RunConfig& cfg) {
  const StationaryState state = solve_stationary(cfg.params, cfg.grid);
  const DensityPair init = perturbed_init(state, cfg);
  const TrajectoryRecord rec = evolve(cfg.params, state, init, cfg.jko);
  const std::string stem =
      cfg.output.directory + "/trajectory_" + cfg.experiment.name;
  if (cfg.output.format == "csv") {
    write_trajectory_csv(stem + ".csv", rec);
    write_meta_json(stem + ".meta.json", cfg.hash, "trajectory");
  } else {
    write_trajectory_json(stem + ".json", rec, cfg.hash);
  }
  std::cout << "steps=" << rec.rows.size() - 1
            << " final_energy=" << rec.rows.back().e_eps
            << " final_l=" << rec.rows.back().l << std::endl;
  return kExitOk;
}

int cmd_rates(const RunConfig& cfg) {
  std::vector<double> sweep = cfg.experiment.eps_sweep;
  if (sweep.empty()) sweep = {0.0, 0.02, 0.05};
  std::sort(sweep.begin(), sweep.end());
  std::vector<double> rates;
  for (double eps : sweep) {
    const ModelParams params = with_eps(cfg.params, eps);
    const StationaryState state = solve_stationary(params, cfg.grid);
    const DensityPair init = perturbed_init(state, cfg);
    const TrajectoryRecord rec = evolve(params, state, init, cfg.jko);
    const double t1 = cfg.jko.t_end;
    rates.push_back(decay_rate_fit(rec, 0.4 * t1, t1));
  }
  // rate(eps) ~ 2 Lambda - 2 K eps; least-squares slope gives the fitted K
  double me = 0.0, mr = 0.0;
  for (size_t i = 0; i < sweep.size(); ++i) {
    me += sweep[i];
    mr += rates[i];
  }
  me /= sweep.size();
  mr /= sweep.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < sweep.size(); ++i) {
    num += (sweep[i] - me) * (rates[i] - mr);
    den += (sweep[i] - me) * (sweep[i] - me);
  }
  const double khat = den > 0.0 ? -num / (2.0 * den) : 0.0;
  const double lam =
      std::min(cfg.params.phi.lambda_conv, cfg.params.psi.lambda_conv);

  const std::string stem = cfg.output.directory + "/rates_" + cfg.experiment.name;
  std::ofstream out(stem + ".csv");
  out.precision(17);
  out << "eps,fitted_rate,two_lambda_minus_fit\n";
  for (size_t i = 0; i < sweep.size(); ++i)
    out << sweep[i] << "," << rates[i] << "," << 2.0 * lam - rates[i] << "\n";
  nlohmann::json j;
  j["config_hash"] = cfg.hash;
  j["fitted_k"] = khat;
  std::ofstream meta(stem + ".meta.json");
  meta << j.dump(2) << "\n";
  for (size_t i = 0; i < sweep.size(); ++i)
    std::cout << "eps=" << sweep[i] << " rate=" << rates[i] << std::endl;
  std::cout << "fitted_k=" << khat << std::endl;
  return kExitOk;
}

int cmd_nonconvexity(const RunConfig& cfg) {
  std::vector<double> omegas = cfg.experiment.omega_list;
  if (omegas.empty()) omegas = {10.0, 20.0, 40.0};
  std::sort(omegas.begin(), omegas.end());
  const double ds = 1e-2, r = 1.0;
  const std::string stem =
      cfg.output.directory + "/nonconvexity_" + cfg.experiment.name;
  std::ofstream out(stem + ".csv");
  out.precision(17);
  out << "omega,second_difference\n";
  for (double omega : omegas) {
    const NonconvexityProfile prof =
        nonconvexity_profile(cfg.params, omega, r, {-ds, 0.0, ds});
    if (prof.cross_partial_zero)
      std::cerr << "warning: vanishing cross partial at the plateau values"
                << std::endl;
    const double d2 =
        (prof.values[0] - 2.0 * prof.values[1] + prof.values[2]) / (ds * ds);
    out << omega << "," << d2 << "\n";
    std::cout << "omega=" << omega << " second_difference=" << d2 << std::endl;
  }
  write_meta_json(stem + ".meta.json", cfg.hash, "nonconvexity");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for coupled nonlinear drift-diffusion systems"};
  app.require_subcommand(1);
  CommonOpts opts;

  std::vector<std::pair<std::string, int (*)(const RunConfig&)>> cmds = {
      {"validate", cmd_validate},
      {"stationary", cmd_stationary},
      {"evolve", cmd_evolve},
      {"rates", cmd_rates},
      {"nonconvexity", cmd_nonconvexity},
  };
  std::vector<CLI::App*> subs;
  for (auto& [name, fn] : cmds) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "config file path")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--format", opts.format, "csv|json");
    sub->add_option("--seed", opts.seed, "rng seed override");
    sub->add_option("--threads", opts.threads, "worker thread cap");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg{ModelParams{}, Grid1D{}, JkoConfig{}, ExperimentConfig{},
                OutputConfig{}, ""};
  try {
    cfg = load_and_merge(opts);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  }

  try {
    for (size_t i = 0; i < cmds.size(); ++i)
      if (subs[i]->parsed()) return cmds[i].second(cfg);
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "hypothesis violation: " << e.what() << std::endl;
    return kExitHypothesis;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitSolver;  // window/solver-stage configuration problems
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << std::endl;
    return kExitSolver;
  }
}

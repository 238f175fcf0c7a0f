#include "ddlab/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "ddlab/errors.hpp"
#include "json.hpp"

namespace ddlab {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigurationError("config: unknown key '" + it.key() + "' in " + where);
  }
}

double get_num(const json& j, const std::string& key, double fallback,
               bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigurationError("config: missing key '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number())
    throw ConfigurationError("config: key '" + key + "' must be a number");
  return j[key].get<double>();
}

PotentialSpec parse_potential(const json& j, const std::string& where) {
  reject_unknown(j, {"lambda", "big_m", "center", "quartic"}, where);
  PotentialSpec p;
  p.lambda_conv = get_num(j, "lambda", 1.0);
  p.big_m = get_num(j, "big_m", p.lambda_conv);
  p.center = get_num(j, "center", 0.0);
  p.quartic = get_num(j, "quartic", 0.0);
  return p;
}

}  // namespace

std::string config_hash(const std::string& json_text) {
  // FNV-1a over the canonical (parsed and re-dumped) document
  const std::string canon = json::parse(json_text).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string("config: parse failure: ") + e.what());
  }
  reject_unknown(j, {"model", "grid", "jko", "experiment", "output"}, "root");
  if (!j.contains("model") || !j.contains("grid"))
    throw ConfigurationError("config: 'model' and 'grid' blocks are required");

  const json& jm = j["model"];
  reject_unknown(jm,
                 {"m", "n", "p", "q", "lambda", "eps", "coupling_zero", "phi",
                  "psi", "dim"},
                 "model");
  NonlinearitySpec f{get_num(jm, "m", 2.0, true)};
  NonlinearitySpec g{get_num(jm, "n", 2.0, true)};
  CouplingSpec c;
  c.p = get_num(jm, "p", 3.0);
  c.q = get_num(jm, "q", 3.0);
  c.lambda = get_num(jm, "lambda", 1.0);
  c.zero = jm.value("coupling_zero", false);
  PotentialSpec phi = jm.contains("phi") ? parse_potential(jm["phi"], "model.phi")
                                         : PotentialSpec{};
  PotentialSpec psi = jm.contains("psi") ? parse_potential(jm["psi"], "model.psi")
                                         : PotentialSpec{};
  const double eps = get_num(jm, "eps", 0.0);
  const int dim = static_cast<int>(get_num(jm, "dim", 1.0));

  RunConfig cfg{ModelParams{}, Grid1D{}, JkoConfig{}, ExperimentConfig{},
                OutputConfig{}, ""};
  try {
    cfg.params = ModelParams::validated(f, g, c, phi, psi, eps, dim);
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string("config: invalid model block: ") + e.what());
  }

  const json& jg = j["grid"];
  reject_unknown(jg, {"x_min", "x_max", "n"}, "grid");
  cfg.grid = Grid1D::make(get_num(jg, "x_min", -3.0, true),
                          get_num(jg, "x_max", 3.0, true),
                          static_cast<int>(get_num(jg, "n", 256.0, true)));

  if (j.contains("jko")) {
    const json& jj = j["jko"];
    reject_unknown(jj, {"tau", "t_end", "nq", "inner_tol", "inner_max_iter"}, "jko");
    cfg.jko.tau = get_num(jj, "tau", 1e-2);
    cfg.jko.t_end = get_num(jj, "t_end", 1.0);
    cfg.jko.nq = static_cast<int>(get_num(jj, "nq", 0.0));
    cfg.jko.inner_tol = get_num(jj, "inner_tol", 1e-8);
    cfg.jko.inner_max_iter = static_cast<int>(get_num(jj, "inner_max_iter", 2000.0));
    if (!(cfg.jko.tau > 0.0) || !(cfg.jko.inner_tol > 0.0))
      throw ConfigurationError("config: jko.tau and jko.inner_tol must be positive");
  }

  if (j.contains("experiment")) {
    const json& je = j["experiment"];
    reject_unknown(je, {"name", "eps_sweep", "omega_list", "k", "seed",
                        "perturbation"},
                   "experiment");
    cfg.experiment.name = je.value("name", std::string("run"));
    if (je.contains("eps_sweep"))
      cfg.experiment.eps_sweep = je["eps_sweep"].get<std::vector<double>>();
    if (je.contains("omega_list"))
      cfg.experiment.omega_list = je["omega_list"].get<std::vector<double>>();
    cfg.experiment.k = static_cast<int>(get_num(je, "k", 2.0));
    cfg.experiment.seed = static_cast<long>(get_num(je, "seed", 0.0));
    cfg.experiment.perturbation = get_num(je, "perturbation", 0.05);
  }

  if (j.contains("output")) {
    const json& jo = j["output"];
    reject_unknown(jo, {"directory", "format"}, "output");
    cfg.output.directory = jo.value("directory", std::string("out"));
    cfg.output.format = jo.value("format", std::string("csv"));
    if (cfg.output.format != "csv" && cfg.output.format != "json")
      throw ConfigurationError("config: output.format must be csv or json");
  }

  cfg.hash = config_hash(json_text);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path);
  out.precision(17);
  return out;
}

}  // namespace

void write_density_csv(const std::string& path, const Density& d) {
  auto out = open_out(path);
  out << "x,value\n";
  for (int i = 0; i < d.grid.n; ++i)
    out << d.grid.center(i) << "," << d.values[i] << "\n";
}

void write_state_csv(const std::string& path, const StationaryState& state) {
  auto out = open_out(path);
  out << "x,ubar,vbar,theta_bar_u,theta_bar_v\n";
  const Grid1D& g = state.ubar.grid;
  for (int i = 0; i < g.n; ++i)
    out << g.center(i) << "," << state.ubar.values[i] << ","
        << state.vbar.values[i] << "," << state.theta_bar_u[i] << ","
        << state.theta_bar_v[i] << "\n";
}

void write_state_json(const std::string& path, const StationaryState& state,
                      const std::string& cfg_hash, double residual) {
  nlohmann::json j;
  j["u_eps"] = state.u_eps;
  j["v_eps"] = state.v_eps;
  j["density_cap"] = state.density_cap;
  j["support_u"] = {state.support_u.lo, state.support_u.hi};
  j["support_v"] = {state.support_v.lo, state.support_v.hi};
  j["residual"] = residual;
  j["config_hash"] = cfg_hash;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec) {
  auto out = open_out(path);
  out << "t,e_eps,l,l1,l2,d1,d2,w2_step_u,w2_step_v,weak_residual_u,"
         "weak_residual_v\n";
  for (const TrajectoryRow& r : rec.rows)
    out << r.t << "," << r.e_eps << "," << r.l << "," << r.l1 << "," << r.l2
        << "," << r.d1 << "," << r.d2 << "," << r.w2_step_u << ","
        << r.w2_step_v << "," << r.weak_residual_u << "," << r.weak_residual_v
        << "\n";
}

void write_trajectory_json(const std::string& path, const TrajectoryRecord& rec,
                           const std::string& cfg_hash) {
  nlohmann::json j;
  j["config_hash"] = cfg_hash;
  j["holder_ok"] = rec.holder_ok;
  j["telescoped_ok"] = rec.telescoped_ok;
  j["telescoped_lhs"] = rec.telescoped_lhs;
  j["initial_energy"] = rec.initial_energy;
  nlohmann::json rows = nlohmann::json::array();
  for (const TrajectoryRow& r : rec.rows)
    rows.push_back({{"t", r.t},
                    {"e_eps", r.e_eps},
                    {"l", r.l},
                    {"l1", r.l1},
                    {"l2", r.l2},
                    {"d1", r.d1},
                    {"d2", r.d2},
                    {"w2_step_u", r.w2_step_u},
                    {"w2_step_v", r.w2_step_v},
                    {"weak_residual_u", r.weak_residual_u},
                    {"weak_residual_v", r.weak_residual_v}});
  j["rows"] = rows;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_meta_json(const std::string& path, const std::string& cfg_hash,
                     const std::string& kind) {
  nlohmann::json j;
  j["config_hash"] = cfg_hash;
  j["kind"] = kind;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace ddlab

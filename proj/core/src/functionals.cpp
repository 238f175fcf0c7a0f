#include "ddlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

void require_same_grid(const StationaryState& state, const Density& u,
                       const Density& v) {
  if (!(state.ubar.grid == u.grid) || !(state.ubar.grid == v.grid))
    throw ParameterError("functional: grid mismatch with stationary state");
}

// finite-difference gradient of the bracket b, centered in the interior of
// {weight > 0}, one-sided at the support edges, zero elsewhere
std::vector<double> support_gradient(const std::vector<double>& b,
                                     const std::vector<double>& weight,
                                     double dx) {
  const int n = static_cast<int>(b.size());
  std::vector<double> g(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (weight[i] <= 0.0) continue;
    const bool lft = i > 0 && weight[i - 1] > 0.0;
    const bool rgt = i + 1 < n && weight[i + 1] > 0.0;
    if (lft && rgt)
      g[i] = (b[i + 1] - b[i - 1]) / (2.0 * dx);
    else if (rgt)
      g[i] = (b[i + 1] - b[i]) / dx;
    else if (lft)
      g[i] = (b[i] - b[i - 1]) / dx;
  }
  return g;
}

}  // namespace

double energy(const ModelParams& params, const Density& u, const Density& v) {
  if (!(u.grid == v.grid)) throw ParameterError("energy: grids differ");
  double s = 0.0;
  for (int i = 0; i < u.grid.n; ++i) {
    const double x = u.grid.center(i);
    const double ui = u.values[i], vi = v.values[i];
    s += params.f.value(ui) + params.g.value(vi) + ui * params.phi.value(x) +
         vi * params.psi.value(x);
    if (params.eps > 0.0 && !params.coupling.zero)
      s += params.eps * params.coupling.eval(ui, vi, CouplingTerm::h);
  }
  return s * u.grid.dx;
}

double entropy(const Density& u) {
  double s = 0.0;
  for (double v : u.values)
    if (v > 0.0) s += v * std::log(v);
  return s * u.grid.dx;
}

double bregman(const NonlinearitySpec& spec, double s, double sbar) {
  return spec.value(s) - spec.value(sbar) - (s - sbar) * spec.deriv1(sbar);
}

std::pair<double, double> lyapunov(const ModelParams& params,
                                   const StationaryState& state,
                                   const Density& u, const Density& v) {
  require_same_grid(state, u, v);
  const Grid1D& g = u.grid;
  double l1 = 0.0, l2 = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double x = g.center(i);
    l1 += bregman(params.f, u.values[i], state.ubar.values[i]) +
          u.values[i] * std::max(0.0, params.phi.value(x) - state.u_eps);
    l2 += bregman(params.g, v.values[i], state.vbar.values[i]) +
          v.values[i] * std::max(0.0, params.psi.value(x) - state.v_eps);
  }
  return {l1 * g.dx, l2 * g.dx};
}

std::pair<double, double> lyapunov_alt(const ModelParams& params,
                                       const StationaryState& state,
                                       const Density& u, const Density& v) {
  require_same_grid(state, u, v);
  const Grid1D& g = u.grid;
  double l1 = 0.0, l2 = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double x = g.center(i);
    const double au = params.phi.value(x) + params.eps * state.theta_bar_u[i];
    const double av = params.psi.value(x) + params.eps * state.theta_bar_v[i];
    l1 += params.f.value(u.values[i]) + au * u.values[i] -
          (params.f.value(state.ubar.values[i]) + au * state.ubar.values[i]);
    l2 += params.g.value(v.values[i]) + av * v.values[i] -
          (params.g.value(state.vbar.values[i]) + av * state.vbar.values[i]);
  }
  return {l1 * g.dx, l2 * g.dx};
}

std::pair<double, double> dissipation(const ModelParams& params,
                                      const StationaryState& state,
                                      const Density& u, const Density& v) {
  require_same_grid(state, u, v);
  const Grid1D& g = u.grid;
  std::vector<double> bu(g.n), bv(g.n);
  for (int i = 0; i < g.n; ++i) {
    const double x = g.center(i);
    bu[i] = params.f.deriv1(u.values[i]) + params.phi.value(x) +
            params.eps * state.theta_bar_u[i];
    bv[i] = params.g.deriv1(v.values[i]) + params.psi.value(x) +
            params.eps * state.theta_bar_v[i];
  }
  const std::vector<double> gu = support_gradient(bu, u.values, g.dx);
  const std::vector<double> gv = support_gradient(bv, v.values, g.dx);
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < g.n; ++i) {
    d1 += u.values[i] * gu[i] * gu[i];
    d2 += v.values[i] * gv[i] * gv[i];
  }
  return {d1 * g.dx, d2 * g.dx};
}

std::pair<double, double> functional_inequality_gap(const ModelParams& params,
                                                    const StationaryState& state,
                                                    const Density& u,
                                                    const Density& v,
                                                    double k0) {
  const auto [l1, l2] = lyapunov(params, state, u, v);
  const auto [d1, d2] = dissipation(params, state, u, v);
  const double mod1 = params.phi.lambda_conv - k0 * params.eps;
  const double mod2 = params.psi.lambda_conv - k0 * params.eps;
  if (mod1 <= 0.0 || mod2 <= 0.0)
    throw ParameterError("functional_inequality_gap: eps K0 >= Lambda");
  return {d1 - 2.0 * mod1 * l1, d2 - 2.0 * mod2 * l2};
}

double bregman_domination_check(const ModelParams& params,
                                const StationaryState& state, const Density& u,
                                const Density& v) {
  require_same_grid(state, u, v);
  const auto [l1, l2] = lyapunov(params, state, u, v);
  const double ltot = l1 + l2;
  if (ltot <= 1e-12) return 0.0;
  if (params.coupling.zero) return 0.0;
  const Grid1D& g = u.grid;
  const ThetaTerm maps[4] = {ThetaTerm::u_rho, ThetaTerm::u_eta,
                             ThetaTerm::v_rho, ThetaTerm::v_eta};
  double worst = 0.0;
  for (ThetaTerm which : maps) {
    double lhs = 0.0;
    for (int i = 0; i < g.n; ++i) {
      const double rho = params.f.deriv1(u.values[i]);
      const double eta = params.g.deriv1(v.values[i]);
      const double rbar = params.f.deriv1(state.ubar.values[i]);
      const double ebar = params.g.deriv1(state.vbar.values[i]);
      const double dw = theta_eval(params.coupling, params.f, params.g, rho, eta, which) -
                        theta_eval(params.coupling, params.f, params.g, rbar, ebar, which);
      lhs += (u.values[i] + v.values[i]) * dw * dw;
    }
    worst = std::max(worst, lhs * g.dx / ltot);
  }
  return worst;
}

std::pair<double, double> csiszar_kullback_ratio(const ModelParams& params,
                                                 const StationaryState& state,
                                                 const Density& u,
                                                 const Density& v) {
  const auto [l1, l2] = lyapunov(params, state, u, v);
  const Grid1D& g = u.grid;
  double nu = 0.0, nv = 0.0;
  for (int i = 0; i < g.n; ++i) {
    nu += std::abs(u.values[i] - state.ubar.values[i]);
    nv += std::abs(v.values[i] - state.vbar.values[i]);
  }
  nu *= g.dx;
  nv *= g.dx;
  return {l1 > 1e-12 ? nu * nu / l1 : 0.0, l2 > 1e-12 ? nv * nv / l2 : 0.0};
}

double entropy_lower_bound_gap(const Density& u, double beta, double center) {
  if (!(beta > 0.0)) throw ParameterError("entropy_lower_bound_gap: beta > 0");
  const double bound =
      1.0 - std::sqrt(M_PI / beta) - beta * second_moment(u, center);
  return entropy(u) - bound;
}

EnergyReport energy_report(const ModelParams& params,
                           const StationaryState& state, const Density& u,
                           const Density& v, double k0) {
  EnergyReport r;
  r.e_eps = energy(params, u, v);
  r.entropy_sum = entropy(u) + entropy(v);
  std::tie(r.l1, r.l2) = lyapunov(params, state, u, v);
  r.l = r.l1 + r.l2;
  std::tie(r.d1, r.d2) = dissipation(params, state, u, v);
  std::tie(r.gap1, r.gap2) = functional_inequality_gap(params, state, u, v, k0);
  return r;
}

}  // namespace ddlab

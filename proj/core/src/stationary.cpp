#include "ddlab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

double sup_coupling_partial(const CouplingSpec& c, CouplingTerm which) {
  if (c.zero) return 0.0;
  const int ns = 256;
  double sup = 0.0;
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= ns; ++j)
      sup = std::max(sup, c.eval(2.0 * i / ns, 2.0 * j / ns, which));
  return sup;
}

double cap_for(const NonlinearitySpec& f, double rhs) {
  // smallest Ubar >= 2 with F'(Ubar)/2 >= rhs, by bisection
  double lo = 2.0, hi = 2.0;
  while (0.5 * f.deriv1(hi) < rhs) hi *= 2.0;
  if (0.5 * f.deriv1(lo) >= rhs) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * f.deriv1(mid) >= rhs ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

double compute_density_cap(const ModelParams& params) {
  const double es = params.coupling.zero ? 0.0 : eps_star(params);
  const double su = sup_coupling_partial(params.coupling, CouplingTerm::du);
  const double sv = sup_coupling_partial(params.coupling, CouplingTerm::dv);
  const double d = params.dim;
  const double cap_u =
      cap_for(params.f, params.f.deriv1(2.0) + d * params.phi.big_m + es * su);
  const double cap_v =
      cap_for(params.g, params.g.deriv1(2.0) + d * params.psi.big_m + es * sv);
  return std::max(cap_u, cap_v);
}

std::pair<double, double> invert_dh(const ModelParams& params, double rho_t,
                                    double eta_t) {
  if (rho_t < 0.0 || eta_t < 0.0) throw DomainError("invert_dh: negative target");
  const auto& f = params.f;
  const auto& g = params.g;
  const auto& c = params.coupling;
  const double eps = params.eps;
  if (eps == 0.0 || c.zero)
    return {f.inverse_deriv1(rho_t), g.inverse_deriv1(eta_t)};
  // boundary branch: theta vanishes on the axes
  if (rho_t == 0.0) return {0.0, g.inverse_deriv1(eta_t)};
  if (eta_t == 0.0) return {f.inverse_deriv1(rho_t), 0.0};

  double rho = rho_t, eta = eta_t;
  auto residual = [&](double r, double e, double& fu, double& fv) {
    fu = r + eps * theta_eval(c, f, g, r, e, ThetaTerm::u) - rho_t;
    fv = e + eps * theta_eval(c, f, g, r, e, ThetaTerm::v) - eta_t;
    return std::max(std::abs(fu), std::abs(fv));
  };
  double fu, fv;
  double res = residual(rho, eta, fu, fv);
  for (int it = 0; it < 100; ++it) {
    if (res <= 1e-13) break;
    const double j11 = 1.0 + eps * theta_eval(c, f, g, rho, eta, ThetaTerm::u_rho);
    const double j12 = eps * theta_eval(c, f, g, rho, eta, ThetaTerm::u_eta);
    const double j21 = eps * theta_eval(c, f, g, rho, eta, ThetaTerm::v_rho);
    const double j22 = 1.0 + eps * theta_eval(c, f, g, rho, eta, ThetaTerm::v_eta);
    const double det = j11 * j22 - j12 * j21;
    const double drho = -(j22 * fu - j12 * fv) / det;
    const double deta = -(-j21 * fu + j11 * fv) / det;
    double alpha = 1.0;
    for (int halve = 0; halve < 60; ++halve) {
      const double nr = rho + alpha * drho, ne = eta + alpha * deta;
      if (nr >= 0.0 && ne >= 0.0) {
        double gu, gv;
        const double nres = residual(nr, ne, gu, gv);
        if (nres < res) {
          rho = nr;
          eta = ne;
          fu = gu;
          fv = gv;
          res = nres;
          break;
        }
      }
      alpha *= 0.5;
    }
  }
  if (res > 1e-12)
    throw SolverError("invert_dh: no convergence at target (" +
                      std::to_string(rho_t) + ", " + std::to_string(eta_t) + ")");
  return {f.inverse_deriv1(rho), g.inverse_deriv1(eta)};
}

namespace {

struct MassMap {
  const ModelParams& params;
  const Grid1D& grid;

  void densities(double U, double V, std::vector<double>& u,
                 std::vector<double>& v) const {
    u.assign(grid.n, 0.0);
    v.assign(grid.n, 0.0);
    for (int i = 0; i < grid.n; ++i) {
      const double x = grid.center(i);
      const double rt = std::max(0.0, U - params.phi.value(x));
      const double et = std::max(0.0, V - params.psi.value(x));
      auto [ui, vi] = invert_dh(params, rt, et);
      u[i] = ui;
      v[i] = vi;
    }
  }

  std::pair<double, double> masses(double U, double V) const {
    std::vector<double> u, v;
    densities(U, V, u, v);
    double mu = 0.0, mv = 0.0;
    for (int i = 0; i < grid.n; ++i) {
      mu += u[i];
      mv += v[i];
    }
    return {mu * grid.dx, mv * grid.dx};
  }
};

// sublevel boundary {pot = level} on [center, direction * infinity)
double sublevel_edge(const PotentialSpec& pot, double level, double a, double b) {
  // pot(a) < level <= pot(b) assumed, pot monotone on [a,b] away from center
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    (pot.value(mid) < level ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

Interval sublevel_interval(const PotentialSpec& pot, double level,
                           const Grid1D& grid) {
  double span = 1.0;
  while (pot.value(pot.center + span) < level || pot.value(pot.center - span) < level)
    span *= 2.0;
  (void)grid;
  return {sublevel_edge(pot, level, pot.center, pot.center - span),
          sublevel_edge(pot, level, pot.center, pot.center + span)};
}

double solve_decoupled(const NonlinearitySpec& f, const PotentialSpec& pot,
                       const Grid1D& grid) {
  // mass of (F')^{-1}((U - pot)_+) is continuous and increasing in U
  auto massof = [&](double U) {
    double s = 0.0;
    for (int i = 0; i < grid.n; ++i)
      s += f.inverse_deriv1(std::max(0.0, U - pot.value(grid.center(i))));
    return s * grid.dx;
  };
  double lo = 0.0, hi = 1.0;
  while (massof(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (massof(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

StationaryState solve_stationary(const ModelParams& params, const Grid1D& grid) {
  const MassMap mm{params, grid};
  double U = solve_decoupled(params.f, params.phi, grid);
  double V = solve_decoupled(params.g, params.psi, grid);

  const double tol = 1e-13;
  bool converged = false;
  if (params.eps == 0.0 || params.coupling.zero) {
    converged = true;  // decoupled bisection is already exact
  } else {
    auto [mu, mv] = mm.masses(U, V);
    double res = std::max(std::abs(mu - 1.0), std::abs(mv - 1.0));
    for (int it = 0; it < 80 && res > tol; ++it) {
      const double dU = 1e-7 * (1.0 + std::abs(U));
      const double dV = 1e-7 * (1.0 + std::abs(V));
      auto [muU, mvU] = mm.masses(U + dU, V);
      auto [muV, mvV] = mm.masses(U, V + dV);
      const double j11 = (muU - mu) / dU, j12 = (muV - mu) / dV;
      const double j21 = (mvU - mv) / dU, j22 = (mvV - mv) / dV;
      const double det = j11 * j22 - j12 * j21;
      if (std::abs(det) < 1e-300) break;
      const double fu = mu - 1.0, fv = mv - 1.0;
      const double stepU = -(j22 * fu - j12 * fv) / det;
      const double stepV = -(-j21 * fu + j11 * fv) / det;
      double alpha = 1.0;
      bool accepted = false;
      for (int halve = 0; halve < 60; ++halve) {
        const double nU = U + alpha * stepU, nV = V + alpha * stepV;
        if (nU > 0.0 && nV > 0.0) {
          auto [nmu, nmv] = mm.masses(nU, nV);
          const double nres = std::max(std::abs(nmu - 1.0), std::abs(nmv - 1.0));
          if (nres < res) {
            U = nU;
            V = nV;
            mu = nmu;
            mv = nmv;
            res = nres;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }
    converged = res <= 1e-9;
    if (!converged) {
      // nested bisection fallback: for fixed V solve mass_u = 1 in U, then
      // bisect the v-mass in V
      auto u_for_v = [&](double Vf) {
        double lo = 0.0, hi = std::max(1.0, 2.0 * U);
        while (mm.masses(hi, Vf).first < 1.0) hi *= 2.0;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          (mm.masses(mid, Vf).first < 1.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      };
      double lo = 1e-6, hi = std::max(1.0, 2.0 * V);
      while (mm.masses(u_for_v(hi), hi).second < 1.0) hi *= 2.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mm.masses(u_for_v(mid), mid).second < 1.0 ? lo : hi) = mid;
      }
      V = 0.5 * (lo + hi);
      U = u_for_v(V);
      auto [mu2, mv2] = mm.masses(U, V);
      if (std::max(std::abs(mu2 - 1.0), std::abs(mv2 - 1.0)) > 1e-8)
        throw SolverError("solve_stationary: mass solve did not converge");
    }
  }

  StationaryState st;
  st.u_eps = U;
  st.v_eps = V;
  st.density_cap = compute_density_cap(params);
  st.ubar.grid = grid;
  st.vbar.grid = grid;
  mm.densities(U, V, st.ubar.values, st.vbar.values);
  st.support_u = sublevel_interval(params.phi, U, grid);
  st.support_v = sublevel_interval(params.psi, V, grid);

  const Interval total{std::min(st.support_u.lo, st.support_v.lo),
                       std::max(st.support_u.hi, st.support_v.hi)};
  const double margin = 0.2 * total.diameter();
  if (total.lo - grid.x_min < margin || grid.x_max - total.hi < margin)
    throw ConfigurationError(
        "solve_stationary: window too small; suggested window [" +
        std::to_string(total.lo - margin) + ", " +
        std::to_string(total.hi + margin) + "]");

  st.theta_bar_u.assign(grid.n, 0.0);
  st.theta_bar_v.assign(grid.n, 0.0);
  if (!params.coupling.zero) {
    for (int i = 0; i < grid.n; ++i) {
      st.theta_bar_u[i] = params.coupling.eval(st.ubar.values[i],
                                               st.vbar.values[i], CouplingTerm::du);
      st.theta_bar_v[i] = params.coupling.eval(st.ubar.values[i],
                                               st.vbar.values[i], CouplingTerm::dv);
    }
  }
  return st;
}

double stationary_residual(const ModelParams& params,
                           const StationaryState& state) {
  const Grid1D& grid = state.ubar.grid;
  double res = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.center(i);
    const double u = state.ubar.values[i], v = state.vbar.values[i];
    const double hu = params.coupling.zero
                          ? 0.0
                          : params.coupling.eval(u, v, CouplingTerm::du);
    const double hv = params.coupling.zero
                          ? 0.0
                          : params.coupling.eval(u, v, CouplingTerm::dv);
    const double ru = params.f.deriv1(u) + params.eps * hu -
                      std::max(0.0, state.u_eps - params.phi.value(x));
    const double rv = params.g.deriv1(v) + params.eps * hv -
                      std::max(0.0, state.v_eps - params.psi.value(x));
    res = std::max({res, std::abs(ru), std::abs(rv)});
  }
  return res;
}

RegularityReport regularity_diagnostics(
    const std::vector<const StationaryState*>& states,
    const NonlinearitySpec& f) {
  RegularityReport rep;
  for (const StationaryState* st : states) {
    const Grid1D& grid = st->ubar.grid;
    std::vector<double> p(grid.n);
    for (int i = 0; i < grid.n; ++i) p[i] = f.deriv1(st->ubar.values[i]);
    double s1 = 0.0, s2 = 0.0, jump = 0.0;
    for (int i = 1; i + 1 < grid.n; ++i) {
      const bool interior = st->ubar.values[i - 1] > 0.0 &&
                            st->ubar.values[i] > 0.0 &&
                            st->ubar.values[i + 1] > 0.0;
      if (!interior) continue;
      const double d1 = (p[i + 1] - p[i - 1]) / (2.0 * grid.dx);
      const double d2 = (p[i + 1] - 2.0 * p[i] + p[i - 1]) / (grid.dx * grid.dx);
      s1 = std::max(s1, std::abs(d1));
      s2 = std::max(s2, std::abs(d2));
      // interface of supp(vbar) strictly inside supp(ubar)
      const bool v_edge = (st->vbar.values[i] > 0.0) !=
                          (st->vbar.values[i + 1] > 0.0);
      if (v_edge) {
        const double right = (p[i + 1] - p[i]) / grid.dx;
        const double left = (p[i] - p[i - 1]) / grid.dx;
        jump = std::max(jump, std::abs(right - left));
      }
    }
    rep.sup_first.push_back(s1);
    rep.sup_second.push_back(s2);
    rep.interface_jump.push_back(jump);
  }
  return rep;
}

}  // namespace ddlab

#pragma once

#include <utility>
#include <vector>

#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"

namespace ddlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double diameter() const { return hi - lo; }
};

// Minimizer of E_eps: pair of densities with mass multipliers, supports,
// and the Theta-bar fields cached on the grid.
struct StationaryState {
  Density ubar;
  Density vbar;
  double u_eps = 0.0;
  double v_eps = 0.0;
  Interval support_u;
  Interval support_v;
  std::vector<double> theta_bar_u;
  std::vector<double> theta_bar_v;
  double density_cap = 0.0;
};

// Smallest Ubar >= 2 with (1/2) F'(Ubar) >= F'(2) + d M + eps* sup du_h
// (and the G-analogue), by bisection.
double compute_density_cap(const ModelParams& params);

// Solve Gamma_eps(rho,eta) = (rho_t, eta_t) by damped Newton; returns the
// densities (u, v) = ((F')^{-1} rho, (G')^{-1} eta).
std::pair<double, double> invert_dh(const ModelParams& params, double rho_t,
                                    double eta_t);

StationaryState solve_stationary(const ModelParams& params, const Grid1D& grid);

// Max over cells of the pointwise Euler-Lagrange residual.
double stationary_residual(const ModelParams& params,
                           const StationaryState& state);

struct RegularityReport {
  // sup-norms of first/second finite differences of F'(ubar) on the support
  // interior, one entry per supplied state
  std::vector<double> sup_first;
  std::vector<double> sup_second;
  // largest jump of the first difference of F'(ubar) across the boundary of
  // supp(vbar) inside supp(ubar), one entry per state
  std::vector<double> interface_jump;
};

RegularityReport regularity_diagnostics(
    const std::vector<const StationaryState*>& states,
    const NonlinearitySpec& f);

}  // namespace ddlab

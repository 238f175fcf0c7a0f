#pragma once

#include <utility>

#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"
#include "ddlab/stationary.hpp"

namespace ddlab {

struct EnergyReport {
  double e_eps = 0.0;
  double entropy_sum = 0.0;
  double l1 = 0.0, l2 = 0.0, l = 0.0;
  double d1 = 0.0, d2 = 0.0;
  double gap1 = 0.0, gap2 = 0.0;
};

double energy(const ModelParams& params, const Density& u, const Density& v);

// H(u) = int u log u, with 0 log 0 = 0.
double entropy(const Density& u);

// d_F(s|sbar) = F(s) - F(sbar) - (s - sbar) F'(sbar)
double bregman(const NonlinearitySpec& spec, double s, double sbar);

// (L1, L2) from eq. of the relative entropies (Bregman + potential excess).
std::pair<double, double> lyapunov(const ModelParams& params,
                                   const StationaryState& state,
                                   const Density& u, const Density& v);

// Alternative representation of (L1, L2) used as a cross-check.
std::pair<double, double> lyapunov_alt(const ModelParams& params,
                                       const StationaryState& state,
                                       const Density& u, const Density& v);

// (D1, D2): weighted squared gradients of the composite brackets.
std::pair<double, double> dissipation(const ModelParams& params,
                                      const StationaryState& state,
                                      const Density& u, const Density& v);

// gap_i = D_i - 2 (Lambda - k0 eps) L_i; expected >= -tolerance.
std::pair<double, double> functional_inequality_gap(const ModelParams& params,
                                                    const StationaryState& state,
                                                    const Density& u,
                                                    const Density& v, double k0);

// Max over the four theta partials of the Bregman-domination ratio; 0 when
// L is below threshold.
double bregman_domination_check(const ModelParams& params,
                                const StationaryState& state, const Density& u,
                                const Density& v);

// (|u - ubar|_1^2 / L1, analogous for v); 0 when the denominator vanishes.
std::pair<double, double> csiszar_kullback_ratio(const ModelParams& params,
                                                 const StationaryState& state,
                                                 const Density& u,
                                                 const Density& v);

// H(u) - [1 - sqrt(pi/beta) - beta * second_moment(u, center)]; >= 0 always.
double entropy_lower_bound_gap(const Density& u, double beta, double center);

EnergyReport energy_report(const ModelParams& params,
                           const StationaryState& state, const Density& u,
                           const Density& v, double k0);

}  // namespace ddlab

#pragma once

#include <vector>

#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"

namespace ddlab {

// W2 via matched quantiles at midpoints s_j = (j+1/2)/nq.
// nq = 0 means "use the grid cell count".
double w2(const Density& u, const Density& w, int nq = 0);

// Product metric on pairs: sqrt(W2(u,uh)^2 + W2(v,vh)^2).
double w2_product(const Density& u, const Density& v, const Density& uh,
                  const Density& vh, int nq = 0);

// Displacement interpolation u_s: from_quantiles of (1-s) X_u + s X_w.
Density geodesic(const Density& u, const Density& w, double s, int nq = 0);

struct Atom {
  double x = 0.0;
  double weight = 0.0;
};

// Exact discrete 1D OT cost between small atomic measures (<= 128 atoms per
// side); monotone matching with mass splitting. Returns the W2 distance.
double w2_oracle_lp(std::vector<Atom> source, std::vector<Atom> target);

struct NonconvexityProfile {
  std::vector<double> values;  // s -> integral of H_eps(T_s # u^w, v^w)
  bool cross_partial_zero = false;
};

// Oscillatory test pair: u = U, v = V on |x| < r, perturbed by
// omega^{-1/2} delta_r(x) sin(omega x); values of the translated H_eps
// integral at the requested shifts s.
NonconvexityProfile nonconvexity_profile(const ModelParams& params,
                                         double omega, double r,
                                         const std::vector<double>& s_values,
                                         double U = 1.0, double V = 1.0);

}  // namespace ddlab

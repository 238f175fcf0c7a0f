#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ddlab/grid.hpp"
#include "ddlab/model.hpp"
#include "ddlab/stationary.hpp"

namespace ddlab {

struct JkoConfig {
  double tau = 1e-2;
  double t_end = 1.0;
  int nq = 0;  // 0: use the grid cell count
  double inner_tol = 1e-8;
  int inner_max_iter = 2000;
};

struct TrajectoryRow {
  double t = 0.0;
  double e_eps = 0.0;
  double l = 0.0, l1 = 0.0, l2 = 0.0;
  double d1 = 0.0, d2 = 0.0;
  double w2_step_u = 0.0, w2_step_v = 0.0;
  double weak_residual_u = 0.0, weak_residual_v = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  bool holder_ok = true;       // eq. of the quasi-continuity modulus
  bool telescoped_ok = true;   // summed one-step estimates
  double telescoped_lhs = 0.0;
  double initial_energy = 0.0;
};

using DensityPair = std::pair<Density, Density>;

// One minimizing-movement step; minimizes W2_prod^2/(2 tau) + E_eps over
// monotone quantile pairs.
DensityPair jko_step(const ModelParams& params, const DensityPair& prev,
                     const JkoConfig& cfg);

struct TestFn {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  double c2_norm = 0.0;
};

std::vector<TestFn> make_default_test_fns(const Grid1D& grid);

struct WeakFormResult {
  double ru = 0.0, rv = 0.0;  // max absolute defect per component
  double bound = 0.0;         // max ||zeta||_C2 * energy drop
  // worst defect minus its own ||zeta||_C2 * drop bound; compare against the
  // quadrature slack
  double excess_u = 0.0, excess_v = 0.0;
};

WeakFormResult discrete_weak_residual(const ModelParams& params,
                                      const DensityPair& prev,
                                      const DensityPair& next, double tau,
                                      const std::vector<TestFn>& test_fns);

// Explicit finite-volume oracle step for the PDE system.
DensityPair fv_oracle_step(const ModelParams& params, const DensityPair& pair,
                           double dt);

TrajectoryRecord evolve(const ModelParams& params, const StationaryState& state,
                        const DensityPair& init, const JkoConfig& cfg);

// -slope of the least-squares fit of log(l) vs t on [t0, t1].
double decay_rate_fit(const TrajectoryRecord& traj, double t0, double t1);

}  // namespace ddlab

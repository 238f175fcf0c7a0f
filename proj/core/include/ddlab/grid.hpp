#pragma once

#include <functional>
#include <vector>

namespace ddlab {

// Uniform 1D grid of n cells on [x_min, x_max].
struct Grid1D {
  double x_min = -3.0;
  double x_max = 3.0;
  int n = 256;
  double dx = 0.0;

  static Grid1D make(double x_min, double x_max, int n);
  double center(int i) const { return x_min + (i + 0.5) * dx; }
  bool operator==(const Grid1D&) const = default;
};

// Nonnegative unit-mass piecewise-constant density on a Grid1D.
struct Density {
  Grid1D grid;
  std::vector<double> values;
};

// Monotone quantile parametrization: positions X(s_j) at s_j = (j+1/2)/nq.
struct QuantileRep {
  int nq = 0;
  std::vector<double> positions;
};

Density density_from_fn(const Grid1D& grid,
                        const std::function<double(double)>& f);

double mass(const Density& d);
double second_moment(const Density& d, double center);

QuantileRep to_quantiles(const Density& d, int nq);
Density from_quantiles(const QuantileRep& q, const Grid1D& grid);

}  // namespace ddlab

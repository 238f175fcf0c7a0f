#include "ddlab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "ddlab/errors.hpp"

namespace ddlab {

Grid1D Grid1D::make(double x_min, double x_max, int n) {
  if (!(x_min < x_max)) throw ConfigurationError("Grid1D: x_min < x_max required");
  if (n < 16) throw ConfigurationError("Grid1D: n >= 16 required");
  Grid1D g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.n = n;
  g.dx = (x_max - x_min) / n;
  return g;
}

Density density_from_fn(const Grid1D& grid,
                        const std::function<double(double)>& f) {
  Density d{grid, std::vector<double>(grid.n, 0.0)};
  // three-point Gauss cell average
  const double a = 0.5 * std::sqrt(3.0 / 5.0);
  for (int i = 0; i < grid.n; ++i) {
    const double xc = grid.center(i);
    const double fl = f(xc - a * grid.dx), fc = f(xc), fr = f(xc + a * grid.dx);
    if (fl < 0.0 || fc < 0.0 || fr < 0.0)
      throw DomainError("density_from_fn: negative sample");
    d.values[i] = (5.0 * fl + 8.0 * fc + 5.0 * fr) / 18.0;
  }
  double total = mass(d);
  if (total < 1e-12) throw ConfigurationError("density_from_fn: degenerate input (mass ~ 0)");
  for (double& v : d.values) v /= total;
  return d;
}

double mass(const Density& d) {
  double s = 0.0;
  for (double v : d.values) s += v;
  return s * d.grid.dx;
}

double second_moment(const Density& d, double center) {
  double s = 0.0;
  for (int i = 0; i < d.grid.n; ++i) {
    const double r = d.grid.center(i) - center;
    s += r * r * d.values[i];
  }
  return s * d.grid.dx;
}

QuantileRep to_quantiles(const Density& d, int nq) {
  if (nq < 16) throw ConfigurationError("to_quantiles: nq >= 16 required");
  const Grid1D& g = d.grid;
  // cumulative mass at cell right edges, normalized to end exactly at 1
  std::vector<double> cdf(g.n + 1, 0.0);
  for (int i = 0; i < g.n; ++i) cdf[i + 1] = cdf[i] + std::max(0.0, d.values[i]) * g.dx;
  const double total = cdf[g.n];
  if (total <= 0.0) throw DomainError("to_quantiles: zero-mass density");
  for (double& c : cdf) c /= total;

  QuantileRep q{nq, std::vector<double>(nq, 0.0)};
  int cell = 0;
  for (int j = 0; j < nq; ++j) {
    const double s = (j + 0.5) / nq;
    while (cell < g.n - 1 && cdf[cell + 1] < s) ++cell;
    // ties (zero-density plateaus) resolve to the left endpoint of the cell
    const double seg = cdf[cell + 1] - cdf[cell];
    const double frac = seg > 0.0 ? std::clamp((s - cdf[cell]) / seg, 0.0, 1.0) : 0.0;
    q.positions[j] = g.x_min + (cell + frac) * g.dx;
  }
  return q;
}

Density from_quantiles(const QuantileRep& q, const Grid1D& grid) {
  const int nq = q.nq;
  if (nq < 2) throw ConfigurationError("from_quantiles: nq >= 2 required");
  Density d{grid, std::vector<double>(grid.n, 0.0)};
  const std::vector<double>& X = q.positions;
  // segment j carries mass 1/nq, uniformly spread over
  // [ (X_{j-1}+X_j)/2, (X_j+X_{j+1})/2 ] with extrapolated endpoints
  for (int j = 0; j < nq; ++j) {
    double a = (j == 0) ? X[0] - 0.5 * (X[1] - X[0]) : 0.5 * (X[j - 1] + X[j]);
    double b = (j == nq - 1) ? X[nq - 1] + 0.5 * (X[nq - 1] - X[nq - 2])
                             : 0.5 * (X[j] + X[j + 1]);
    a = std::max(a, grid.x_min);
    b = std::min(b, grid.x_max);
    const double m = 1.0 / nq;
    if (b - a <= 1e-300) {
      // degenerate segment: deposit into the containing cell
      int c = std::clamp(static_cast<int>((X[j] - grid.x_min) / grid.dx), 0, grid.n - 1);
      d.values[c] += m / grid.dx;
      continue;
    }
    const double h = m / (b - a);  // density height of this segment
    int ca = std::clamp(static_cast<int>((a - grid.x_min) / grid.dx), 0, grid.n - 1);
    int cb = std::clamp(static_cast<int>((b - grid.x_min) / grid.dx), 0, grid.n - 1);
    for (int c = ca; c <= cb; ++c) {
      const double cl = grid.x_min + c * grid.dx;
      const double overlap = std::min(b, cl + grid.dx) - std::max(a, cl);
      if (overlap > 0.0) d.values[c] += h * overlap / grid.dx;
    }
  }
  const double total = mass(d);
  if (total > 0.0)
    for (double& v : d.values) v /= total;
  return d;
}

}  // namespace ddlab

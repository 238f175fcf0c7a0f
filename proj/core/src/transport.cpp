#include "ddlab/transport.hpp"

#include <algorithm>
#include <cmath>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

int pick_nq(const Density& u, int nq) { return nq > 0 ? nq : std::max(u.grid.n, 16); }

}  // namespace

double w2(const Density& u, const Density& w, int nq) {
  if (!(u.grid == w.grid)) throw ParameterError("w2: grids differ");
  nq = pick_nq(u, nq);
  const QuantileRep qu = to_quantiles(u, nq);
  const QuantileRep qw = to_quantiles(w, nq);
  double s = 0.0;
  for (int j = 0; j < nq; ++j) {
    const double d = qu.positions[j] - qw.positions[j];
    s += d * d;
  }
  return std::sqrt(s / nq);
}

double w2_product(const Density& u, const Density& v, const Density& uh,
                  const Density& vh, int nq) {
  const double a = w2(u, uh, nq), b = w2(v, vh, nq);
  return std::sqrt(a * a + b * b);
}

Density geodesic(const Density& u, const Density& w, double s, int nq) {
  if (s < 0.0 || s > 1.0) throw DomainError("geodesic: s outside [0,1]");
  if (!(u.grid == w.grid)) throw ParameterError("geodesic: grids differ");
  nq = pick_nq(u, nq);
  QuantileRep qu = to_quantiles(u, nq);
  const QuantileRep qw = to_quantiles(w, nq);
  for (int j = 0; j < nq; ++j)
    qu.positions[j] = (1.0 - s) * qu.positions[j] + s * qw.positions[j];
  return from_quantiles(qu, u.grid);
}

double w2_oracle_lp(std::vector<Atom> source, std::vector<Atom> target) {
  if (source.size() > 128 || target.size() > 128)
    throw ParameterError("w2_oracle_lp: at most 128 atoms per side");
  if (source.empty() || target.empty())
    throw ParameterError("w2_oracle_lp: empty input");
  double ms = 0.0, mt = 0.0;
  for (const Atom& a : source) {
    if (a.weight < 0.0) throw DomainError("w2_oracle_lp: negative weight");
    ms += a.weight;
  }
  for (const Atom& a : target) mt += a.weight;
  if (std::abs(ms - mt) > 1e-10)
    throw ParameterError("w2_oracle_lp: marginal masses differ");
  auto by_x = [](const Atom& a, const Atom& b) { return a.x < b.x; };
  std::sort(source.begin(), source.end(), by_x);
  std::sort(target.begin(), target.end(), by_x);

  // monotone matching with mass splitting is exact for convex costs in 1D
  double cost = 0.0;
  size_t i = 0, j = 0;
  double ri = source[0].weight, rj = target[0].weight;
  while (i < source.size() && j < target.size()) {
    const double m = std::min(ri, rj);
    const double d = source[i].x - target[j].x;
    cost += m * d * d;
    ri -= m;
    rj -= m;
    if (ri <= 1e-15 && ++i < source.size()) ri = source[i].weight;
    if (rj <= 1e-15 && ++j < target.size()) rj = target[j].weight;
  }
  return std::sqrt(std::max(0.0, cost / ms));
}

namespace {

// C-infinity transition: 1 for t <= 0, 0 for t >= 1.
double smooth_step_down(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - t));
  const double b = std::exp(-1.0 / t);
  return a / (a + b);
}

}  // namespace

NonconvexityProfile nonconvexity_profile(const ModelParams& params,
                                         double omega, double r,
                                         const std::vector<double>& s_values,
                                         double U, double V) {
  if (!(omega > 0.0) || !(r > 0.0))
    throw ParameterError("nonconvexity_profile: omega, r > 0 required");
  NonconvexityProfile out;
  const double cross = params.coupling.zero
                           ? 0.0
                           : params.coupling.eval(U, V, CouplingTerm::duv);
  out.cross_partial_zero = (cross == 0.0);
  const double flip = (cross < 0.0) ? -1.0 : 1.0;

  // delta_r: 1 on |x|<r/2, 0 on |x|>r; plateau profile: U on |x|<r, 0 beyond 2r
  auto cutoff = [r](double x) { return smooth_step_down((std::abs(x) - 0.5 * r) / (0.5 * r)); };
  auto plateau = [r](double x) { return smooth_step_down((std::abs(x) - r) / r); };
  const double amp = 1.0 / std::sqrt(omega);
  auto uprof = [&](double x) {
    return std::max(0.0, U * plateau(x) + amp * cutoff(x) * std::sin(omega * x));
  };
  auto vprof = [&](double x) {
    return std::max(0.0, V * plateau(x) + flip * amp * cutoff(x) * std::sin(omega * x));
  };

  double smax = 0.0;
  for (double s : s_values) smax = std::max(smax, std::abs(s));
  const double L = 2.0 * r + smax + 0.5;
  int nquad = std::max(4096, static_cast<int>(512.0 * omega));
  if (nquad % 2) ++nquad;
  const double dq = 2.0 * L / nquad;

  auto h_eps = [&](double u, double v) {
    double val = params.f.value(u) + params.g.value(v);
    if (params.eps > 0.0 && !params.coupling.zero)
      val += params.eps * params.coupling.eval(u, v, CouplingTerm::h);
    return val;
  };

  out.values.reserve(s_values.size());
  for (double s : s_values) {
    // composite Simpson over [-L, L]
    double acc = 0.0;
    for (int k = 0; k <= nquad; ++k) {
      const double x = -L + k * dq;
      const double wgt = (k == 0 || k == nquad) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += wgt * h_eps(uprof(x - s), vprof(x));
    }
    out.values.push_back(acc * dq / 3.0);
  }
  return out;
}

}  // namespace ddlab

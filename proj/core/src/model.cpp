#include "ddlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

constexpr double kEpsStarFloor = 1e-8;
constexpr double kEpsStarCeil = 1e3;

// r^e with integer fast paths; only called with e >= 0 here.
double powr(double r, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return r;
  if (e == 2.0) return r * r;
  if (e == 3.0) return r * r * r;
  return std::pow(r, e);
}

}  // namespace

double NonlinearitySpec::value(double r) const {
  if (r < 0.0) throw DomainError("NonlinearitySpec: negative argument");
  return powr(r, m) / m;
}

double NonlinearitySpec::deriv1(double r) const {
  if (r < 0.0) throw DomainError("NonlinearitySpec: negative argument");
  return powr(r, m - 1.0);
}

double NonlinearitySpec::deriv2(double r) const {
  if (r < 0.0) throw DomainError("NonlinearitySpec: negative argument");
  if (r == 0.0 && m < 2.0) throw DomainError("F'' singular at 0 for m < 2");
  return (m - 1.0) * powr(r, m - 2.0);
}

double NonlinearitySpec::eval(double r, int order) const {
  switch (order) {
    case 0: return value(r);
    case 1: return deriv1(r);
    case 2: return deriv2(r);
    default: throw ParameterError("NonlinearitySpec: order must be 0, 1, 2");
  }
}

double NonlinearitySpec::inverse_deriv1(double rho) const {
  if (rho < 0.0) throw DomainError("inverse_deriv1: negative argument");
  if (rho == 0.0) return 0.0;
  return std::pow(rho, 1.0 / (m - 1.0));
}

void CouplingSpec::validate() const {
  if (zero) return;
  if (!(lambda > 0.0)) throw ParameterError("CouplingSpec: lambda > 0 required");
  if (!(p > 0.0) || !(q > 0.0)) throw ParameterError("CouplingSpec: p, q > 0 required");
}

double CouplingSpec::eval(double u, double v, CouplingTerm which) const {
  if (zero) return 0.0;
  validate();
  if (u < 0.0 || v < 0.0) throw DomainError("CouplingSpec: negative argument");
  // Boundary values on the axes are 0 by degeneracy; avoids 0^negative.
  if (u == 0.0 || v == 0.0) return 0.0;
  const double e = std::exp(-lambda * (u + v));
  const double up = powr(u, p), vq = powr(v, q);
  const double du_fac = p * powr(u, p - 1.0) - lambda * up;
  const double dv_fac = q * powr(v, q - 1.0) - lambda * vq;
  switch (which) {
    case CouplingTerm::h: return up * vq * e;
    case CouplingTerm::du: return du_fac * vq * e;
    case CouplingTerm::dv: return up * dv_fac * e;
    case CouplingTerm::duu:
      return (p * (p - 1.0) * powr(u, p - 2.0) - 2.0 * lambda * p * powr(u, p - 1.0) +
              lambda * lambda * up) * vq * e;
    case CouplingTerm::duv: return du_fac * dv_fac * e;
    case CouplingTerm::dvv:
      return up * (q * (q - 1.0) * powr(v, q - 2.0) - 2.0 * lambda * q * powr(v, q - 1.0) +
                   lambda * lambda * vq) * e;
  }
  throw ParameterError("CouplingSpec: unknown term");
}

double theta_eval(const CouplingSpec& coupling, const NonlinearitySpec& f,
                  const NonlinearitySpec& g, double rho, double eta,
                  ThetaTerm which) {
  if (rho < 0.0 || eta < 0.0) throw DomainError("theta_eval: negative argument");
  if (coupling.zero) return 0.0;
  if (rho == 0.0 || eta == 0.0) return 0.0;
  const double u = f.inverse_deriv1(rho);
  const double v = g.inverse_deriv1(eta);
  // d u / d rho = 1 / F''(u), and analogously for eta.
  switch (which) {
    case ThetaTerm::u: return coupling.eval(u, v, CouplingTerm::du);
    case ThetaTerm::v: return coupling.eval(u, v, CouplingTerm::dv);
    case ThetaTerm::u_rho: return coupling.eval(u, v, CouplingTerm::duu) / f.deriv2(u);
    case ThetaTerm::u_eta: return coupling.eval(u, v, CouplingTerm::duv) / g.deriv2(v);
    case ThetaTerm::v_rho: return coupling.eval(u, v, CouplingTerm::duv) / f.deriv2(u);
    case ThetaTerm::v_eta: return coupling.eval(u, v, CouplingTerm::dvv) / g.deriv2(v);
  }
  throw ParameterError("theta_eval: unknown term");
}

double PotentialSpec::value(double x) const {
  const double d = x - center;
  return 0.5 * lambda_conv * d * d + quartic * d * d * d * d;
}

double PotentialSpec::deriv1(double x) const {
  const double d = x - center;
  return lambda_conv * d + 4.0 * quartic * d * d * d;
}

double PotentialSpec::deriv2(double x) const {
  const double d = x - center;
  return lambda_conv + 12.0 * quartic * d * d;
}

namespace {

// Provisional upper bound on the stationary density, used only to size the
// sampling rectangle for eps_star (the definitive cap lives in the
// stationary module and depends on eps_star itself).
double provisional_cap(const NonlinearitySpec& f, const NonlinearitySpec& g,
                       const CouplingSpec& coupling) {
  double sup_du = 0.0, sup_dv = 0.0;
  if (!coupling.zero) {
    const int ns = 64;
    for (int i = 0; i <= ns; ++i)
      for (int j = 0; j <= ns; ++j) {
        const double u = 2.0 * i / ns, v = 2.0 * j / ns;
        sup_du = std::max(sup_du, coupling.eval(u, v, CouplingTerm::du));
        sup_dv = std::max(sup_dv, coupling.eval(u, v, CouplingTerm::dv));
      }
  }
  const double rhs_u = f.deriv1(2.0) + 1.0 + sup_du;
  const double rhs_v = g.deriv1(2.0) + 1.0 + sup_dv;
  const double cap_u = f.inverse_deriv1(2.0 * rhs_u);
  const double cap_v = g.inverse_deriv1(2.0 * rhs_v);
  return std::max({2.0, cap_u, cap_v});
}

}  // namespace

double eps_star(const NonlinearitySpec& f, const NonlinearitySpec& g,
                const CouplingSpec& coupling) {
  coupling.validate();
  if (coupling.zero) return kEpsStarCeil;  // convexity unconditional

  const double cap = 3.0 * provisional_cap(f, g, coupling);
  const int ns = 200;
  const double lo = std::log(1e-6), hi = std::log(cap);
  double eps_max = std::numeric_limits<double>::infinity();

  for (int i = 0; i < ns; ++i) {
    const double u = std::exp(lo + (hi - lo) * (i + 0.5) / ns);
    for (int j = 0; j < ns; ++j) {
      const double v = std::exp(lo + (hi - lo) * (j + 0.5) / ns);
      const double a = f.deriv2(u), b = g.deriv2(v);
      const double huu = coupling.eval(u, v, CouplingTerm::duu);
      const double hvv = coupling.eval(u, v, CouplingTerm::dvv);
      const double huv = coupling.eval(u, v, CouplingTerm::duv);
      // Diagonal entries of D^2[F+G+2 eps h] stay nonnegative:
      if (huu < 0.0) eps_max = std::min(eps_max, a / (-2.0 * huu));
      if (hvv < 0.0) eps_max = std::min(eps_max, b / (-2.0 * hvv));
      // Determinant (a+2e huu)(b+2e hvv) - (2e huv)^2 >= 0, quadratic in e:
      const double A = 4.0 * (huu * hvv - huv * huv);
      const double B = 2.0 * (a * hvv + b * huu);
      const double C = a * b;
      if (A != 0.0 || B < 0.0) {
        // smallest positive root, if any, bounds eps
        const double disc = B * B - 4.0 * A * C;
        if (A == 0.0) {
          if (B < 0.0) eps_max = std::min(eps_max, -C / B);
        } else if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double r1 = (-B - sq) / (2.0 * A);
          const double r2 = (-B + sq) / (2.0 * A);
          double root = std::numeric_limits<double>::infinity();
          if (r1 > 0.0) root = std::min(root, r1);
          if (r2 > 0.0) root = std::min(root, r2);
          if (std::isfinite(root)) eps_max = std::min(eps_max, root);
        }
      }
      // 2 eps |h| <= F + G
      const double habs = std::abs(coupling.eval(u, v, CouplingTerm::h));
      if (habs > 0.0)
        eps_max = std::min(eps_max, (f.value(u) + g.value(v)) / (2.0 * habs));
    }
  }

  if (!(eps_max > kEpsStarFloor))
    throw ValidationError("eps_star: no admissible coupling strength above 1e-8");

  // Snap down to the logarithmic search grid.
  const int per_decade = 20;
  const double k = std::floor(per_decade * std::log10(std::min(eps_max, kEpsStarCeil)));
  return std::pow(10.0, k / per_decade);
}

double eps_star(const ModelParams& params) {
  return eps_star(params.f, params.g, params.coupling);
}

ModelParams ModelParams::validated(NonlinearitySpec f, NonlinearitySpec g,
                                   CouplingSpec coupling, PotentialSpec phi,
                                   PotentialSpec psi, double eps, int dim) {
  if (!(f.m >= 2.0) || !(g.m >= 2.0))
    throw ParameterError("ModelParams: exponents m, n >= 2 required");
  coupling.validate();
  for (const auto* pot : {&phi, &psi}) {
    if (!(pot->lambda_conv > 0.0) || pot->big_m < pot->lambda_conv || pot->quartic < 0.0)
      throw ParameterError("ModelParams: potential needs 0 < Lambda <= M, quartic >= 0");
  }
  if (eps < 0.0) throw ParameterError("ModelParams: eps >= 0 required");
  if (eps > 0.0 && eps > eps_star(f, g, coupling))
    throw ParameterError("ModelParams: eps exceeds eps_star");
  return ModelParams{f, g, coupling, phi, psi, eps, dim};
}

}  // namespace ddlab

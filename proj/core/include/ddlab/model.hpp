#pragma once

#include <cstdint>

namespace ddlab {

// Power-law internal energy density F(r) = r^m / m, m >= 2.
// Degenerate at zero to first order: F(0) = F'(0) = 0.
struct NonlinearitySpec {
  double m = 2.0;

  double value(double r) const;    // F(r)
  double deriv1(double r) const;   // F'(r) = r^{m-1}
  double deriv2(double r) const;   // F''(r) = (m-1) r^{m-2}
  double eval(double r, int order) const;

  // (F')^{-1}(rho) = rho^{1/(m-1)}
  double inverse_deriv1(double rho) const;
};

enum class CouplingTerm : std::uint8_t { h, du, dv, duu, duv, dvv };

// Coupling h(u,v) = u^p v^q e^{-lambda(u+v)}.
// Values and partials on the coordinate axes are hard-coded to 0.
struct CouplingSpec {
  double p = 3.0;
  double q = 3.0;
  double lambda = 1.0;
  bool zero = false;  // h identically 0 (decoupled surrogate)

  double eval(double u, double v, CouplingTerm which) const;
  void validate() const;  // lambda > 0, p,q > 0 unless zero
};

enum class ThetaTerm : std::uint8_t { u, v, u_rho, u_eta, v_rho, v_eta };

// theta_u(rho,eta) = d_u h((F')^{-1}(rho), (G')^{-1}(eta)) and analogues,
// in the pressure variables rho = F'(u), eta = G'(v).
double theta_eval(const CouplingSpec& coupling, const NonlinearitySpec& f,
                  const NonlinearitySpec& g, double rho, double eta,
                  ThetaTerm which);

// Confining potential: quadratic lambda_conv/2 (x-center)^2 by default,
// optionally with a quartic perturbation term to make the Hessian bound
// big_m exceed the convexity modulus.
struct PotentialSpec {
  double lambda_conv = 1.0;  // lower Hessian bound
  double big_m = 1.0;        // upper Hessian bound on the working window
  double center = 0.0;
  double quartic = 0.0;      // coefficient of (x-center)^4

  double value(double x) const;
  double deriv1(double x) const;
  double deriv2(double x) const;
};

struct ModelParams {
  NonlinearitySpec f;
  NonlinearitySpec g;
  CouplingSpec coupling;
  PotentialSpec phi;
  PotentialSpec psi;
  double eps = 0.0;
  int dim = 1;

  // Checks ranges and eps <= eps_star.
  static ModelParams validated(NonlinearitySpec f, NonlinearitySpec g,
                               CouplingSpec coupling, PotentialSpec phi,
                               PotentialSpec psi, double eps, int dim = 1);
};

// Largest eps* on a logarithmic search grid such that
// (u,v) -> F(u) + G(v) + 2 eps* h(u,v) has PSD Hessian on a sampled
// rectangle and 2 eps* |h| <= F + G on the same samples.
// Throws ValidationError if no admissible value above 1e-8 exists.
double eps_star(const NonlinearitySpec& f, const NonlinearitySpec& g,
                const CouplingSpec& coupling);
double eps_star(const ModelParams& params);

}  // namespace ddlab

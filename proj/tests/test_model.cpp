#include <cmath>
#include <random>

#include "ddlab/errors.hpp"
#include "ddlab/model.hpp"
#include "doctest.h"

using namespace ddlab;

namespace {

ModelParams standard_params(double eps = 0.0) {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{4.0, 4.0, 1.0, false};
  PotentialSpec phi{1.0, 1.0, 0.0, 0.0}, psi{1.0, 1.0, 0.0, 0.0};
  return ModelParams::validated(f, g, c, phi, psi, eps);
}

}  // namespace

TEST_CASE("nonlinearity evaluation") {
  NonlinearitySpec f{2.0};
  CHECK(f.eval(3.0, 0) == doctest::Approx(4.5));
  CHECK(f.eval(0.0, 1) == 0.0);
  NonlinearitySpec f3{3.0};
  CHECK(f3.eval(2.0, 2) == doctest::Approx(4.0));
  CHECK(f.value(0.0) == 0.0);
  CHECK_THROWS_AS(f.value(-1.0), DomainError);
}

TEST_CASE("inverse of the first derivative") {
  NonlinearitySpec f2{2.0}, f3{3.0};
  CHECK(f2.inverse_deriv1(0.7) == doctest::Approx(0.7));
  CHECK(f3.inverse_deriv1(4.0) == doctest::Approx(2.0));
  CHECK(f2.inverse_deriv1(0.0) == 0.0);
  CHECK_THROWS_AS(f2.inverse_deriv1(-0.5), DomainError);
  for (double r : {1e-6, 1e-3, 0.5, 2.0, 57.0, 1e3})
    CHECK(f3.inverse_deriv1(f3.deriv1(r)) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("coupling evaluation") {
  CouplingSpec c{3.0, 3.0, 1.0, false};
  CHECK(c.eval(0.0, 5.0, CouplingTerm::du) == 0.0);
  CHECK(c.eval(1.0, 1.0, CouplingTerm::h) == doctest::Approx(std::exp(-2.0)));
  CouplingSpec bad{2.0, 2.0, 0.0, false};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK_THROWS_AS(c.eval(-1.0, 1.0, CouplingTerm::h), DomainError);
}

TEST_CASE("coupling partials match finite differences") {
  CouplingSpec c{4.0, 3.0, 0.7, false};
  const double d = 1e-6;
  for (double u : {0.3, 1.0, 2.5})
    for (double v : {0.4, 1.1, 3.0}) {
      const double fd_u = (c.eval(u + d, v, CouplingTerm::h) -
                           c.eval(u - d, v, CouplingTerm::h)) / (2.0 * d);
      CHECK(c.eval(u, v, CouplingTerm::du) == doctest::Approx(fd_u).epsilon(1e-6));
      const double d2 = 1e-4;  // wider step: second differences amplify roundoff
      const double fd_uv = (c.eval(u + d2, v + d2, CouplingTerm::h) -
                            c.eval(u + d2, v - d2, CouplingTerm::h) -
                            c.eval(u - d2, v + d2, CouplingTerm::h) +
                            c.eval(u - d2, v - d2, CouplingTerm::h)) /
                           (4.0 * d2 * d2);
      CHECK(c.eval(u, v, CouplingTerm::duv) == doctest::Approx(fd_uv).epsilon(1e-4));
      const double fd_uu = (c.eval(u + d, v, CouplingTerm::du) -
                            c.eval(u - d, v, CouplingTerm::du)) / (2.0 * d);
      CHECK(c.eval(u, v, CouplingTerm::duu) == doctest::Approx(fd_uu).epsilon(1e-5));
    }
}

TEST_CASE("theta evaluation") {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{3.0, 3.0, 1.0, false};
  CHECK(theta_eval(c, f, g, 0.0, 2.0, ThetaTerm::u) == 0.0);
  CHECK(theta_eval(c, f, g, 2.0, 0.0, ThetaTerm::v) == 0.0);
  // theta_u(1,1) = (p u^{p-1} - lambda u^p) v^q e^{-lambda(u+v)} at u=v=1
  CHECK(theta_eval(c, f, g, 1.0, 1.0, ThetaTerm::u) ==
        doctest::Approx(2.0 * std::exp(-2.0)));
}

TEST_CASE("theta partials match finite differences of theta") {
  NonlinearitySpec f{2.0}, g{3.0};
  CouplingSpec c{4.0, 4.0, 1.0, false};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.05, 2.0);
  const double d = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double rho = dist(rng), eta = dist(rng);
    const double fd = (theta_eval(c, f, g, rho + d, eta, ThetaTerm::u) -
                       theta_eval(c, f, g, rho - d, eta, ThetaTerm::u)) / (2.0 * d);
    CHECK(theta_eval(c, f, g, rho, eta, ThetaTerm::u_rho) ==
          doctest::Approx(fd).epsilon(1e-5));
    const double fd2 = (theta_eval(c, f, g, rho, eta + d, ThetaTerm::v) -
                        theta_eval(c, f, g, rho, eta - d, ThetaTerm::v)) / (2.0 * d);
    CHECK(theta_eval(c, f, g, rho, eta, ThetaTerm::v_eta) ==
          doctest::Approx(fd2).epsilon(1e-5));
  }
}

TEST_CASE("mccann inequality holds identically in the power family") {
  for (double m : {2.0, 2.5, 3.0, 4.0}) {
    NonlinearitySpec f{m};
    for (double r : {1e-6, 0.1, 1.0, 10.0, 1e3}) {
      CHECK(r * f.deriv1(r) <= f.value(r) + r * r * f.deriv2(r) + 1e-12);
    }
  }
}

TEST_CASE("deriv1 strictly increasing") {
  NonlinearitySpec f{2.5};
  double prev = f.deriv1(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double cur = f.deriv1(i * 0.1);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("potentials") {
  PotentialSpec phi{2.0, 2.0, 0.5, 0.0};
  CHECK(phi.value(0.5) == 0.0);
  CHECK(phi.value(1.5) == doctest::Approx(1.0));
  CHECK(phi.deriv2(3.0) == doctest::Approx(2.0));
  PotentialSpec quart{1.0, 2.0, 0.0, 0.1};
  CHECK(quart.deriv2(0.0) == doctest::Approx(1.0));
  CHECK(quart.deriv2(1.0) == doctest::Approx(1.0 + 1.2));
}

TEST_CASE("eps_star positive for the standard coupled family") {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{3.0, 3.0, 1.0, false};
  const double es = eps_star(f, g, c);
  CHECK(es > 0.0);
  // certify positive semidefiniteness of D2[F+G+2 eps* h] at samples
  for (double u : {0.1, 0.5, 1.0, 2.0})
    for (double v : {0.1, 0.5, 1.0, 2.0}) {
      const double a = f.deriv2(u) + 2.0 * es * c.eval(u, v, CouplingTerm::duu);
      const double b = g.deriv2(v) + 2.0 * es * c.eval(u, v, CouplingTerm::dvv);
      const double x = 2.0 * es * c.eval(u, v, CouplingTerm::duv);
      CHECK(a >= -1e-9);
      CHECK(b >= -1e-9);
      CHECK(a * b - x * x >= -1e-9);
    }
}

TEST_CASE("eps_star for zero coupling returns the grid maximum") {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{3.0, 3.0, 1.0, true};
  CHECK(eps_star(f, g, c) == doctest::Approx(1e3));
}

TEST_CASE("eps_star rejects strongly nonconvex couplings") {
  // small exponents make the Hessian defect unbounded near the axes
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{0.5, 0.5, 1.0, false};
  CHECK_THROWS_AS(eps_star(f, g, c), ValidationError);
}

TEST_CASE("validated constructor enforces eps <= eps_star") {
  NonlinearitySpec f{2.0}, g{2.0};
  CouplingSpec c{4.0, 4.0, 1.0, false};
  PotentialSpec phi{1.0, 1.0, 0.0, 0.0};
  const double es = eps_star(f, g, c);
  CHECK_NOTHROW(ModelParams::validated(f, g, c, phi, phi, 0.5 * es));
  CHECK_THROWS_AS(ModelParams::validated(f, g, c, phi, phi, 2.0 * es),
                  ParameterError);
  CHECK_NOTHROW(standard_params(0.05));
}

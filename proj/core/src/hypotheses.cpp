#include "ddlab/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ddlab/errors.hpp"
#include "json.hpp"

namespace ddlab {

std::string to_json_string(const HypothesisReport& r) {
  nlohmann::json j;
  j["mccann_ok"] = r.mccann_ok;
  j["doubling_const"] = r.doubling_const;
  j["swap_const"] = r.swap_const;
  j["swap_ok"] = r.swap_ok;
  j["bound_const"] = r.bound_const;
  j["k_degenerate_up_to"] = r.k_degenerate_up_to;
  j["k_bounded_up_to"] = r.k_bounded_up_to;
  j["eps_star"] = r.eps_star;
  j["k0"] = r.k0;
  j["eps_bar"] = r.eps_bar;
  nlohmann::json viol = nlohmann::json::array();
  for (const auto& [name, witness] : r.violations)
    viol.push_back({{"check", name}, {"witness", witness}});
  j["violations"] = viol;
  return j.dump(2);
}

McCannResult check_mccann(const NonlinearitySpec& spec) {
  // r F'(r) <= F(r) + r^2 F''(r); for the power family equivalent to
  // r^m <= r^m/m + (m-1) r^m, i.e. 1 <= 1/m + m - 1, always true
  McCannResult res;
  const double lo = std::log(1e-8), hi = std::log(1e4);
  const int ns = 10000;
  for (int i = 0; i <= ns; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / ns);
    const double lhs = r * spec.deriv1(r);
    const double rhs = spec.value(r) + r * r * spec.deriv2(r);
    if (lhs > rhs * (1.0 + 1e-12)) {
      res.ok = false;
      res.witness = r;
      return res;
    }
  }
  return res;
}

double check_doubling(const NonlinearitySpec& spec) {
  const double d = std::pow(2.0, spec.m - 1.0);
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double r = dist(rng), s = dist(rng);
    if (spec.value(r + s) > d * (1.0 + spec.value(r) + spec.value(s)) + 1e-9)
      throw ValidationError("check_doubling: doubling bound violated");
    if (r * spec.deriv1(r) > d * (1.0 + 2.0 * spec.value(r)) + 1e-9)
      throw ValidationError("check_doubling: tripling bound violated");
  }
  return d;
}

namespace {

double swap_grid_max(const ModelParams& p, double lo, double hi, int ns,
                     double* arg_u, double* arg_v) {
  double best = 0.0;
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i <= ns; ++i) {
    const double u = std::exp(llo + (lhi - llo) * i / ns);
    for (int j = 0; j <= ns; ++j) {
      const double v = std::exp(llo + (lhi - llo) * j / ns);
      const double huv = p.coupling.eval(u, v, CouplingTerm::duv);
      // d_eta theta_u(F'(u),G'(v)) = h_uv / G''(v), and symmetrically
      const double e1 = std::sqrt(u / v) * huv / p.g.deriv2(v);
      const double e2 = std::sqrt(v / u) * huv / p.f.deriv2(u);
      const double e = std::max(e1, e2);
      if (e > best) {
        best = e;
        if (arg_u) *arg_u = u;
        if (arg_v) *arg_v = v;
      }
    }
  }
  return best;
}

// reconstruct x as a small-denominator fraction; returns false if none fits
bool as_rational(double x, long& num, long& den) {
  for (long b = 1; b <= 64; ++b) {
    const double a = std::round(x * b);
    if (std::abs(x - a / b) < 1e-9) {
      num = static_cast<long>(a);
      den = b;
      return true;
    }
  }
  return false;
}

// strict comparison (p-1)/(m-1) > k with exact rational arithmetic when the
// ratio is (close to) rational
bool strictly_exceeds(double p, double m, int k) {
  const double ratio = (p - 1.0) / (m - 1.0);
  long num, den;
  if (as_rational(ratio, num, den)) return num > static_cast<long>(k) * den;
  return ratio > k;
}

}  // namespace

SwapResult check_swap(const ModelParams& params) {
  SwapResult res;
  if (params.coupling.zero) return res;  // W = 0
  const double cap = 3.0 * compute_density_cap(params);
  double u1 = 0.0, v1 = 0.0, u2 = 0.0, v2 = 0.0;
  const double coarse = swap_grid_max(params, 1e-6, cap, 100, &u1, &v1);
  const double fine = swap_grid_max(params, 1e-8, cap, 200, &u2, &v2);
  res.w = std::max(0.0, fine);
  if (fine > 1.1 * std::max(coarse, 1e-12) && fine > 1e-9) {
    res.ok = false;
    res.corner = "(" + std::to_string(u2) + ", " + std::to_string(v2) + ")";
  }
  return res;
}

KConditionResult check_k_conditions(const ModelParams& params, int k) {
  if (k < 1 || k > 3) throw ParameterError("check_k_conditions: k in {1,2,3}");
  KConditionResult res;
  if (params.coupling.zero) {
    res.bounded = res.degenerate = true;
    res.a = 0.0;
    return res;
  }
  const bool base = params.coupling.p >= params.f.m &&
                    params.coupling.q >= params.g.m;
  const bool strict = strictly_exceeds(params.coupling.p, params.f.m, k) &&
                      strictly_exceeds(params.coupling.q, params.g.m, k);
  res.degenerate = base && strict;
  res.bounded = base && strict;

  // A = sup of omega(rho,eta)/min{1,rho,eta} over the six theta maps
  const double cap = 3.0 * compute_density_cap(params);
  const double pcap_u = params.f.deriv1(cap), pcap_v = params.g.deriv1(cap);
  const ThetaTerm maps[6] = {ThetaTerm::u,     ThetaTerm::v,
                             ThetaTerm::u_rho, ThetaTerm::u_eta,
                             ThetaTerm::v_rho, ThetaTerm::v_eta};
  const int ns = 120;
  const double llo = std::log(1e-6);
  double a = 0.0;
  for (int i = 0; i <= ns; ++i) {
    const double rho = std::exp(llo + (std::log(pcap_u) - llo) * i / ns);
    for (int j = 0; j <= ns; ++j) {
      const double eta = std::exp(llo + (std::log(pcap_v) - llo) * j / ns);
      const double denom = std::min({1.0, rho, eta});
      for (ThetaTerm which : maps) {
        const double w = std::abs(
            theta_eval(params.coupling, params.f, params.g, rho, eta, which));
        a = std::max(a, w / denom);
      }
    }
  }
  res.a = a;
  return res;
}

double estimate_k0(const StationaryState& state) {
  const Grid1D& grid = state.ubar.grid;
  if (grid.n < 16) throw ParameterError("estimate_k0: grid too coarse (n < 16)");
  double worst = 0.0;
  for (const std::vector<double>* field : {&state.theta_bar_u, &state.theta_bar_v}) {
    for (int i = 1; i + 1 < grid.n; ++i) {
      const double d2 = ((*field)[i + 1] - 2.0 * (*field)[i] + (*field)[i - 1]) /
                        (grid.dx * grid.dx);
      worst = std::min(worst, d2);
    }
  }
  return std::max(0.0, -worst);
}

double compute_eps_bar(const HypothesisReport& report, double lambda_conv) {
  double bar = report.eps_star;
  const double s = report.bound_const * report.bound_const + report.swap_const;
  if (s > 0.0) bar = std::min(bar, 1.0 / std::sqrt(12.0 * s));
  if (report.k0 > 0.0) bar = std::min(bar, lambda_conv / (2.0 * report.k0));
  return bar;
}

HypothesisReport full_report(const ModelParams& params, int k,
                             const StationaryState* state) {
  HypothesisReport rep;
  const McCannResult mf = check_mccann(params.f);
  const McCannResult mg = check_mccann(params.g);
  rep.mccann_ok = mf.ok && mg.ok;
  if (!mf.ok) rep.violations.emplace_back("mccann_F", mf.witness);
  if (!mg.ok) rep.violations.emplace_back("mccann_G", mg.witness);
  rep.doubling_const = std::max(check_doubling(params.f), check_doubling(params.g));
  const SwapResult sw = check_swap(params);
  rep.swap_const = sw.w;
  rep.swap_ok = sw.ok;
  if (!sw.ok) rep.violations.emplace_back("swap_divergence", 0.0);
  const KConditionResult kc = check_k_conditions(params, k);
  rep.bound_const = kc.a;
  if (!kc.degenerate) rep.violations.emplace_back("k-degeneracy", k);
  rep.k_degenerate_up_to = 0;
  rep.k_bounded_up_to = 0;
  for (int kk = 1; kk <= 3; ++kk) {
    const KConditionResult r = check_k_conditions(params, kk);
    if (r.degenerate) rep.k_degenerate_up_to = kk;
    if (r.bounded) rep.k_bounded_up_to = kk;
  }
  rep.eps_star = eps_star(params);
  rep.k0 = state ? estimate_k0(*state) : 0.0;
  rep.eps_bar = compute_eps_bar(
      rep, std::min(params.phi.lambda_conv, params.psi.lambda_conv));
  return rep;
}

}  // namespace ddlab

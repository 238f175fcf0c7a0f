#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ddlab/model.hpp"
#include "ddlab/stationary.hpp"

namespace ddlab {

struct HypothesisReport {
  bool mccann_ok = false;
  double doubling_const = 0.0;   // D
  double swap_const = 0.0;       // W
  bool swap_ok = false;
  double bound_const = 0.0;      // A
  int k_degenerate_up_to = 0;
  int k_bounded_up_to = 0;
  double eps_star = 0.0;
  double k0 = 0.0;
  double eps_bar = 0.0;
  std::vector<std::pair<std::string, double>> violations;  // (check, witness)
};

std::string to_json_string(const HypothesisReport& report);

struct McCannResult {
  bool ok = true;
  double witness = 0.0;
};
McCannResult check_mccann(const NonlinearitySpec& spec);

// D = 2^{m-1}; certified on random samples together with the tripling bound.
double check_doubling(const NonlinearitySpec& spec);

struct SwapResult {
  double w = 0.0;
  bool ok = true;
  std::string corner;  // offending corner when the grid maximum diverges
};
SwapResult check_swap(const ModelParams& params);

struct KConditionResult {
  bool bounded = false;
  bool degenerate = false;
  double a = 0.0;
};
KConditionResult check_k_conditions(const ModelParams& params, int k);

double estimate_k0(const StationaryState& state);

double compute_eps_bar(const HypothesisReport& report, double lambda_conv);

// Assemble the full report; state may be null (then k0 = 0).
HypothesisReport full_report(const ModelParams& params, int k,
                             const StationaryState* state);

}  // namespace ddlab

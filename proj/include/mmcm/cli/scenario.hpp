#pragma once

// Named parameter sets and the flat sectioned config format.

#include <string>
#include <vector>

#include "mmcm/kinetics.hpp"
#include "mmcm/ode.hpp"

namespace mmcm::cli {

/// A value as printed in a published parameter table, kept as text so the
/// number of stated decimals is known.
struct CaptionValue {
  std::string name;  // k1, k_minus1, k2, E_T, X_T, K_M, K, eps_HTA, eps_SS, eps
  std::string text;
};

struct Scenario {
  std::string name = "custom";
  RateConstants<double> rates{};
  Totals<double> totals{};
  double X0 = -1;       // < 0: start from X_T
  double C0 = 0;
  double horizon = 0;   // <= 0: three slow time constants
  ode::SolverConfig<double> solver;

  bool trajectories = true;
  bool reductions = true;
  std::vector<int> manifold_orders{0, 1};
  bool analyses = true;

  std::vector<CaptionValue> caption;

  Kinetics<double> kinetics() const { return Kinetics<double>(rates, totals); }
  double initial_X() const { return X0 < 0 ? totals.X_T : X0; }
};

std::vector<std::string> builtin_names();

/// Throws ValidationError for an unknown name.
Scenario builtin_scenario(const std::string& name);

Scenario parse_config_text(const std::string& text);

/// Reads a file and parses it; unreadable files raise ValidationError.
Scenario parse_config(const std::string& path);

/// Checks the scenario (rates, totals, initial state, solver, outputs).
void validate(const Scenario& s);

/// One message per caption value that disagrees with the scenario, at the
/// precision the caption states it.
std::vector<std::string> caption_warnings(const Scenario& s);

/// Horizon actually used: the configured one or three slow time constants.
double effective_horizon(const Scenario& s);

}  // namespace mmcm::cli

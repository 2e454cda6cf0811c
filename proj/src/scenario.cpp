#include "mmcm/cli/scenario.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "mmcm/tihonov.hpp"

namespace mmcm::cli {

namespace {

struct Builtin {
  RateConstants<double> rates;
  Totals<double> totals;
  std::vector<CaptionValue> caption;
};

const std::map<std::string, Builtin>& builtins() {
  // Fig. 1 caption text, shared by both readings of its rates.
  static const std::vector<CaptionValue> fig1 = {
      {"k1", "1"},   {"k2", "1"},   {"k_minus1", "4"}, {"E_T", "89"},     {"X_T", "100"},
      {"K_M", "5"},  {"K", "4"},    {"eps_SS", "0.85"}, {"eps", "0.01"}};
  static const std::map<std::string, Builtin> table = {
      {"fig1_literal", {{1, 4, 1}, {89, 100}, fig1}},
      {"fig1_consistent", {{1, 1, 4}, {89, 100}, fig1}},
      {"fig2_left",
       {{0.1, 0.01, 10},
        {0.1, 50},
        {{"k1", "0.1"}, {"k2", "10"}, {"k_minus1", "0.01"}, {"E_T", "0.1"}, {"X_T", "50"},
         {"K_M", "100.1"}, {"K", "100"}, {"eps_HTA", "0.002"}, {"eps_SS", "0.0007"}}}},
      {"fig2_right",
       {{1, 0.1, 1},
        {0.1, 1},
        {{"k1", "1"}, {"k2", "1"}, {"k_minus1", "0.1"}, {"E_T", "0.1"}, {"X_T", "1"},
         {"K_M", "1.1"}, {"K", "1"}, {"eps_HTA", "0.1"}, {"eps_SS", "0.05"}}}},
      {"fig3_left",
       {{1, 3, 1},
        {1, 1},
        {{"k1", "1"}, {"k2", "1"}, {"k_minus1", "3"}, {"E_T", "1"}, {"X_T", "1"}, {"K_M", "4"},
         {"K", "1"}, {"eps_HTA", "1"}, {"eps_SS", "0.2"}, {"eps", "0.03"}}}},
      {"fig3_right",
       {{0.1, 0.01, 10},
        {400, 100},
        {{"k1", "0.1"}, {"k2", "10"}, {"k_minus1", "0.01"}, {"E_T", "400"}, {"X_T", "100"},
         {"K_M", "100.1"}, {"K", "100"}, {"eps_HTA", "4"}, {"eps_SS", "2"}, {"eps", "0.11"}}}},
  };
  return table;
}

double tolerance_of(const std::string& text) {
  const auto dot = text.find('.');
  const int decimals = dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
  return 0.5 * std::pow(10.0, -decimals);
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : builtins()) names.push_back(name);
  return names;
}

Scenario builtin_scenario(const std::string& name) {
  const auto it = builtins().find(name);
  if (it == builtins().end()) {
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown scenario '" + name + "' (known: " + known + ")");
  }
  Scenario s;
  s.name = name;
  s.rates = it->second.rates;
  s.totals = it->second.totals;
  s.caption = it->second.caption;
  return s;
}

void validate(const Scenario& s) {
  validate(s.rates);
  validate(s.totals);
  if (s.X0 >= 0 && s.X0 > s.totals.X_T) throw ValidationError("X0 must not exceed X_T");
  if (s.C0 < 0 || s.C0 > s.totals.E_T) throw ValidationError("C0 must lie in [0, E_T]");
  if (s.initial_X() + s.C0 > s.totals.X_T) throw ValidationError("X0 + C0 must not exceed X_T");
  if (!std::isfinite(s.horizon)) throw ValidationError("horizon must be finite");
  try {
    s.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("solver: ") + e.what());
  }
  for (int order : s.manifold_orders)
    if (order != 0 && order != 1) throw ValidationError("manifold_orders entries must be 0 or 1");
}

std::vector<std::string> caption_warnings(const Scenario& s) {
  const auto kin = s.kinetics();
  const auto& d = kin.derived();
  const std::map<std::string, double> actual = {
      {"k1", s.rates.k1},    {"k_minus1", s.rates.k_minus1}, {"k2", s.rates.k2},
      {"E_T", s.totals.E_T}, {"X_T", s.totals.X_T},          {"K_M", d.K_M},
      {"K", d.K},            {"eps_HTA", d.eps_HTA},         {"eps_SS", d.eps_SS},
      {"eps", d.eps_TQ}};
  std::vector<std::string> out;
  for (const auto& cv : s.caption) {
    const auto it = actual.find(cv.name);
    if (it == actual.end()) continue;
    const double stated = std::stod(cv.text);
    if (std::abs(it->second - stated) > tolerance_of(cv.text)) {
      std::ostringstream msg;
      msg.precision(6);
      msg << s.name << ": caption states " << cv.name << " = " << cv.text << ", scenario value is "
          << it->second;
      out.push_back(msg.str());
    }
  }
  return out;
}

double effective_horizon(const Scenario& s) {
  return s.horizon > 0 ? s.horizon : 3.0 * slow_time_constant(s.kinetics());
}

}  // namespace mmcm::cli

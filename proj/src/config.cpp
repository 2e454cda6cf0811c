#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mmcm/cli/scenario.hpp"

namespace mmcm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& value) {
  double x = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("field '" + key + "': '" + value + "' is not a number");
  return x;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ValidationError("field '" + key + "': expected true or false, got '" + value + "'");
}

double positive(const std::string& key, const std::string& value) {
  const double x = to_number(key, value);
  if (!(x > 0)) throw ValidationError("field '" + key + "' must be strictly positive");
  return x;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scenario", {"name", "horizon"}},
      {"rates", {"k1", "k_minus1", "k2"}},
      {"totals", {"E_T", "X_T"}},
      {"initial", {"X0", "C0"}},
      {"solver", {"method", "rtol", "atol", "h_max", "max_steps"}},
      {"outputs", {"trajectories", "reductions", "manifold_orders", "analyses"}},
  };
  return keys;
}

}  // namespace

Scenario parse_config_text(const std::string& text) {
  std::map<std::string, std::string> values;  // "section.key" -> value
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ValidationError(where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + "expected key = value");
    if (section.empty()) throw ValidationError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!schema().at(section).count(key))
      throw ValidationError(where + "unknown key '" + key + "' in section [" + section + "]");
    if (value.empty()) throw ValidationError(where + "field '" + key + "' has no value");
    if (!values.emplace(section + "." + key, value).second)
      throw ValidationError(where + "duplicate key '" + key + "'");
  }

  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = values.find(k);
    return it == values.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& k) -> const std::string& {
    const auto* v = get(k);
    if (!v) throw ValidationError("missing required key '" + k + "'");
    return *v;
  };

  Scenario s;
  if (const auto* v = get("scenario.name")) s.name = *v;
  if (const auto* v = get("scenario.horizon")) s.horizon = positive("horizon", *v);
  s.rates.k1 = positive("k1", require("rates.k1"));
  s.rates.k_minus1 = positive("k_minus1", require("rates.k_minus1"));
  s.rates.k2 = positive("k2", require("rates.k2"));
  s.totals.E_T = positive("E_T", require("totals.E_T"));
  s.totals.X_T = positive("X_T", require("totals.X_T"));
  if (const auto* v = get("initial.X0")) {
    s.X0 = to_number("X0", *v);
    if (s.X0 < 0) throw ValidationError("field 'X0' must be non-negative");
  }
  if (const auto* v = get("initial.C0")) s.C0 = to_number("C0", *v);
  if (const auto* v = get("solver.method")) {
    if (*v == "explicit")
      s.solver.method = ode::Method::ExplicitAdaptive;
    else if (*v == "implicit")
      s.solver.method = ode::Method::ImplicitStiff;
    else
      throw ValidationError("field 'method': expected explicit or implicit, got '" + *v + "'");
  }
  if (const auto* v = get("solver.rtol")) s.solver.rtol = positive("rtol", *v);
  if (const auto* v = get("solver.atol")) s.solver.atol = positive("atol", *v);
  if (const auto* v = get("solver.h_max")) s.solver.h_max = positive("h_max", *v);
  if (const auto* v = get("solver.max_steps"))
    s.solver.max_steps = static_cast<long>(positive("max_steps", *v));
  if (const auto* v = get("outputs.trajectories")) s.trajectories = to_bool("trajectories", *v);
  if (const auto* v = get("outputs.reductions")) s.reductions = to_bool("reductions", *v);
  if (const auto* v = get("outputs.analyses")) s.analyses = to_bool("analyses", *v);
  if (const auto* v = get("outputs.manifold_orders")) {
    s.manifold_orders.clear();
    std::istringstream list(*v);
    std::string item;
    while (std::getline(list, item, ','))
      s.manifold_orders.push_back(static_cast<int>(to_number("manifold_orders", trim(item))));
  }
  validate(s);
  return s;
}

Scenario parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << f.rdbuf();
  return parse_config_text(text.str());
}

}  // namespace mmcm::cli

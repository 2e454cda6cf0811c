#include "mmcm/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <CLI11.hpp>

#include "mmcm/center_manifold.hpp"
#include "mmcm/cli/scenario.hpp"
#include "mmcm/models.hpp"
#include "mmcm/qssa.hpp"
#include "mmcm/tihonov.hpp"

namespace mmcm::cli {

namespace {

using json = nlohmann::json;

struct Options {
  std::string config;
  std::string scenario;
  std::string out = "mmcm_out";
  std::string format = "csv,json";
  std::optional<double> rtol, atol, horizon;
  std::string method;

  std::string model;
  std::optional<double> kappa, lambda, eps, sigma, eta, kappa_m;
  std::vector<double> eps_list;
  double mu = 0.05;

  int figure = 0;
  std::string side;
};

struct Job {
  RunReport report;
  Artifacts artifacts;
  std::string stem;
};

// Uniform grid refined logarithmically towards t = 0 so that the initial
// transient is resolved.
std::vector<double> output_times(double T) {
  std::vector<double> t;
  constexpr int uniform = 400, logpts = 120;
  for (int i = 0; i <= uniform; ++i) t.push_back(T * i / uniform);
  for (double x : log_grid(T * 1e-5, T, logpts)) t.push_back(x);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.back() = T;
  return t;
}

const char* method_name(ode::Method m) {
  return m == ode::Method::ImplicitStiff ? "implicit" : "explicit";
}

json echo(const Scenario& s, double T) {
  return {{"name", s.name},
          {"rates", {{"k1", s.rates.k1}, {"k_minus1", s.rates.k_minus1}, {"k2", s.rates.k2}}},
          {"totals", {{"E_T", s.totals.E_T}, {"X_T", s.totals.X_T}}},
          {"initial", {{"X0", s.initial_X()}, {"C0", s.C0}}},
          {"horizon", T},
          {"solver",
           {{"method", method_name(s.solver.method)},
            {"rtol", s.solver.rtol},
            {"atol", s.solver.atol}}}};
}

json derived_json(const Kinetics<double>& kin) {
  const auto& d = kin.derived();
  const auto [alpha, kw] = kw_constants(kin);
  const auto h = nondim_hta(kin);
  const auto q = nondim_tq(kin);
  return {{"K_M", d.K_M},
          {"K_D", d.K_D},
          {"K", d.K},
          {"eps_HTA", d.eps_HTA},
          {"eps_SS", d.eps_SS},
          {"eps_TQ", d.eps_TQ},
          {"alpha", alpha},
          {"K_W", kw},
          {"hta", {{"kappa", h.kappa}, {"lambda", h.lambda}, {"eps", h.eps}}},
          {"tq", {{"sigma", q.sigma}, {"eta", q.eta}, {"kappa_m", q.kappa_m}, {"eps", q.eps}}}};
}

json stats_json(const ode::Stats& st) {
  return {{"accepted", st.accepted},
          {"rejected", st.rejected},
          {"rhs_evals", st.rhs_evals},
          {"jacobian_evals", st.jacobian_evals}};
}

json deviation_json(const Deviation& d) {
  return {{"max", d.max}, {"rms", d.rms}, {"samples", d.samples}};
}

json windowed_json(const WindowedDeviation& w) {
  return {{"transient", deviation_json(w.transient)},
          {"slow_phase", deviation_json(w.slow_phase)},
          {"overall", deviation_json(w.overall)}};
}

json coeffs_json(const ManifoldCoeffs<double>& c) {
  return {{"lambda1", c.lambda1}, {"lambda2", c.lambda2}, {"lambda3", c.lambda3},
          {"a", c.a},             {"b", c.b}};
}

Scenario resolve_scenario(const Options& o, const std::string& fallback) {
  if (!o.config.empty() && !o.scenario.empty())
    throw ValidationError("--config and --scenario cannot be combined");
  Scenario s;
  if (!o.config.empty())
    s = parse_config(o.config);
  else if (!o.scenario.empty())
    s = builtin_scenario(o.scenario);
  else if (!fallback.empty())
    s = builtin_scenario(fallback);
  else
    throw ValidationError("a scenario is required (--scenario <name> or --config <path>)");
  if (o.rtol) s.solver.rtol = *o.rtol;
  if (o.atol) s.solver.atol = *o.atol;
  if (o.horizon) {
    if (!(*o.horizon > 0)) throw ValidationError("--horizon must be positive");
    s.horizon = *o.horizon;
  }
  if (!o.method.empty())
    s.solver.method = o.method == "implicit" ? ode::Method::ImplicitStiff : ode::Method::ExplicitAdaptive;
  validate(s);
  return s;
}

void start_report(Job& job, const std::string& command, const Scenario& s, double T) {
  job.report.command = command;
  job.report.scenario = echo(s, T);
  job.report.derived = derived_json(s.kinetics());
  job.report.warnings = caption_warnings(s);
}

ode::SolverConfig<double> solver_from(const Options& o) {
  ode::SolverConfig<double> cfg;
  if (o.rtol) cfg.rtol = *o.rtol;
  if (o.atol) cfg.atol = *o.atol;
  if (o.method == "implicit") cfg.method = ode::Method::ImplicitStiff;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("solver: ") + e.what());
  }
  return cfg;
}

// Shared model resolution for manifold, sweep and tihonov: explicit
// parameters win, otherwise the scenario is scaled.
struct ModelChoice {
  SweepModel model;
  std::optional<Scenario> scenario;
  std::string name;
};

ModelChoice resolve_model(const Options& o) {
  const std::string name = o.model.empty() ? "hta" : o.model;
  if (name != "hta" && name != "tq") throw ValidationError("--model must be hta or tq");
  const bool explicit_params = o.kappa || o.lambda || o.sigma || o.eta || o.kappa_m;
  const double eps = o.eps.value_or(0.0);
  if (o.eps && !(eps > 0)) throw ValidationError("--eps must be positive");

  if (explicit_params || (o.config.empty() && o.scenario.empty())) {
    if (name == "hta") {
      if (!o.kappa) throw ValidationError("missing --kappa for the hta model");
      if (!o.lambda) throw ValidationError("missing --lambda for the hta model");
      detail::require_positive(*o.kappa, "kappa");
      detail::require_positive(*o.lambda, "lambda");
      NondimHTA<double> p;
      p.kappa = *o.kappa;
      p.lambda = *o.lambda;
      p.eps = eps;
      return {p, std::nullopt, name};
    }
    if (!o.sigma) throw ValidationError("missing --sigma for the tq model");
    if (!o.eta) throw ValidationError("missing --eta for the tq model");
    if (!o.kappa_m) throw ValidationError("missing --kappa-m for the tq model");
    auto p = NondimTQ<double>::from_values(*o.sigma, *o.eta, *o.kappa_m, 1.0);
    p.eps = eps;
    return {p, std::nullopt, name};
  }
  Scenario s = resolve_scenario(o, "");
  const auto kin = s.kinetics();
  if (name == "hta") {
    auto p = nondim_hta(kin);
    if (o.eps) p.eps = eps;
    return {p, s, name};
  }
  auto p = nondim_tq(kin);
  if (o.eps) p.eps = eps;
  return {p, s, name};
}

GeneralSP<double> system_of(const SweepModel& m) {
  if (const auto* h = std::get_if<NondimHTA<double>>(&m)) return hta_system(*h);
  return tq_system(std::get<NondimTQ<double>>(m));
}

ManifoldCoeffs<double> closed_form_of(const SweepModel& m) {
  if (const auto* h = std::get_if<NondimHTA<double>>(&m)) return coeffs_closed_form(*h);
  return coeffs_closed_form(std::get<NondimTQ<double>>(m));
}

PartialDerivs<double> partials_of(const SweepModel& m) {
  if (const auto* h = std::get_if<NondimHTA<double>>(&m)) return analytic_partials(*h);
  return analytic_partials(std::get<NondimTQ<double>>(m));
}

double eps_of(const SweepModel& m) {
  return std::visit([](const auto& p) { return p.eps; }, m);
}

json model_json(const ModelChoice& mc) {
  if (const auto* h = std::get_if<NondimHTA<double>>(&mc.model))
    return {{"model", "hta"}, {"kappa", h->kappa}, {"lambda", h->lambda}, {"eps", h->eps}};
  const auto& q = std::get<NondimTQ<double>>(mc.model);
  return {{"model", "tq"},
          {"sigma", q.sigma},
          {"eta", q.eta},
          {"kappa_m", q.kappa_m},
          {"eps", q.eps}};
}

void start_model_report(Job& job, const std::string& command, const ModelChoice& mc) {
  job.report.command = command;
  if (mc.scenario) {
    const double T = effective_horizon(*mc.scenario);
    job.report.scenario = echo(*mc.scenario, T);
    job.report.derived = derived_json(mc.scenario->kinetics());
    job.report.warnings = caption_warnings(*mc.scenario);
  } else {
    job.report.scenario = {{"name", "parameters"}};
  }
  job.report.scenario["nondimensional"] = model_json(mc);
}

// ---------------------------------------------------------------- simulate

Job simulate(const Options& o) {
  const Scenario s = resolve_scenario(o, "");
  if (!s.trajectories && !s.reductions)
    throw ValidationError("outputs: nothing to emit (trajectories and reductions are both false)");
  const double T = effective_horizon(s);
  const auto kin = s.kinetics();
  Job job;
  job.stem = "simulate_" + s.name;
  start_report(job, "simulate", s, T);

  const double X0 = s.initial_X(), C0 = s.C0;
  Table table;
  table.columns = {"t"};
  const auto times = output_times(T);
  std::vector<std::vector<double>> cols;
  Plot plot{"Time series (" + s.name + ")", "t", "concentration", {}};

  if (s.trajectories) {
    auto species = species_problem(kin, T);
    species.y0 << X0, C0, kin.X_T() - X0 - C0, kin.E_T() - C0;
    const auto sp = ode::integrate(species, s.solver);
    const auto lumped = ode::integrate(lumped_problem(kin, X0 + C0, C0, T), s.solver);
    const auto [sub, enz] = conservation_residuals(sp, kin);
    job.report.metrics["conservation"] = {{"substrate", sub}, {"enzyme", enz}};
    job.report.metrics["species_steps"] = stats_json(sp.stats);
    job.report.metrics["lumped_steps"] = stats_json(lumped.stats);
    std::vector<double> X, C, Xp, E, Xbar, Cl;
    double lumped_gap = 0;
    for (double t : times) {
      const auto y = ode::sample(sp, t);
      const auto z = ode::sample(lumped, t);
      X.push_back(y(0));
      C.push_back(y(1));
      Xp.push_back(y(2));
      E.push_back(y(3));
      Xbar.push_back(z(0));
      Cl.push_back(z(1));
      lumped_gap = std::max(lumped_gap, std::abs(y(0) + y(1) - z(0)));
    }
    job.report.metrics["lumped_vs_species_max_gap"] = lumped_gap;
    for (auto* name : {"X", "C", "Xp", "E", "Xbar_lumped", "C_lumped"}) table.columns.push_back(name);
    for (auto* c : {&X, &C, &Xp, &E, &Xbar, &Cl}) cols.push_back(*c);
    plot.curves.push_back({"X", times, X});
    plot.curves.push_back({"C", times, C});
  }
  if (s.reductions) {
    const auto sq = solve_reduced(ReductionKind::Standard, kin, X0, T, s.solver);
    const auto tq = solve_reduced(ReductionKind::Total, kin, X0 + C0, T, s.solver);
    std::vector<double> xs, cs, xt, ct;
    for (double t : times) {
      xs.push_back(ode::sample(sq.slow, t)(0));
      cs.push_back(sqssa_complex(xs.back(), kin.E_T(), kin.K_M()));
      xt.push_back(ode::sample(tq.slow, t)(0));
      ct.push_back(cminus(xt.back(), kin.E_T(), kin.K_M()));
    }
    for (auto* name : {"X_sqssa", "C_sqssa", "Xbar_tqssa", "C_tqssa"}) table.columns.push_back(name);
    for (auto* c : {&xs, &cs, &xt, &ct}) cols.push_back(*c);
    plot.curves.push_back({"C sQSSA", times, cs});
    plot.curves.push_back({"C tQSSA", times, ct});
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i]};
    for (const auto& c : cols) row.push_back(c[i]);
    table.add_row(std::move(row));
  }
  job.artifacts.tables.push_back({"", std::move(table)});
  job.artifacts.plots.push_back({"_timeseries", std::move(plot)});
  return job;
}

// ------------------------------------------------------------------ reduce

Job reduce(const Options& o) {
  const Scenario s = resolve_scenario(o, "");
  const double T = effective_horizon(s);
  const auto kin = s.kinetics();
  Job job;
  job.stem = "reduce_" + s.name;
  start_report(job, "reduce", s, T);

  const auto sq = solve_reduced(ReductionKind::Standard, kin, s.initial_X(), T, s.solver);
  const auto tq = solve_reduced(ReductionKind::Total, kin, s.initial_X() + s.C0, T, s.solver);
  Table table;
  table.columns = {"t", "X_sqssa", "C_sqssa", "Xbar_tqssa", "C_tqssa"};
  Plot plot{"Reductions (" + s.name + ")", "t", "concentration", {}};
  Curve xs{"X sQSSA", {}, {}}, cs{"C sQSSA", {}, {}}, xt{"Xbar tQSSA", {}, {}}, ct{"C tQSSA", {}, {}};
  double worst = 0;
  for (double t : output_times(T)) {
    const double x = ode::sample(sq.slow, t)(0);
    const double xb = ode::sample(tq.slow, t)(0);
    const double c = sqssa_complex(x, kin.E_T(), kin.K_M());
    const double cm = cminus(xb, kin.E_T(), kin.K_M());
    const double scale = std::max({xb * kin.E_T(), (xb + kin.E_T() + kin.K_M()) * cm, cm * cm, 1e-300});
    worst = std::max(worst, std::abs(cminus_residual(cm, xb, kin.E_T(), kin.K_M())) / scale);
    table.add_row({t, x, c, xb, cm});
    for (auto [curve, v] : {std::pair{&xs, x}, {&cs, c}, {&xt, xb}, {&ct, cm}}) {
      curve->x.push_back(t);
      curve->y.push_back(v);
    }
  }
  job.report.metrics["sqssa_steps"] = stats_json(sq.slow.stats);
  job.report.metrics["tqssa_steps"] = stats_json(tq.slow.stats);
  job.report.metrics["cminus_relative_residual_max"] = worst;
  plot.curves = {xs, cs, xt, ct};
  job.artifacts.tables.push_back({"", std::move(table)});
  job.artifacts.plots.push_back({"_timeseries", std::move(plot)});
  return job;
}

// ---------------------------------------------------------------- manifold

Job manifold(const Options& o, std::ostream& out) {
  const ModelChoice mc = resolve_model(o);
  Job job;
  job.stem = "manifold_" + mc.name + (mc.scenario ? "_" + mc.scenario->name : "");
  start_model_report(job, "manifold", mc);

  const auto sys = system_of(mc.model);
  const double eps = eps_of(mc.model);
  const auto closed = closed_form_of(mc.model);
  const auto general = coeffs_general(partials_of(mc.model), sys.a(), sys.b());
  const auto estimated = coeffs_general(estimate_partials(sys), sys.a(), sys.b());
  auto& m = job.report.metrics;
  m["coefficients"] = coeffs_json(closed);
  m["coefficients_general_analytic"] = coeffs_json(general);
  m["coefficients_general_estimated"] = coeffs_json(estimated);
  m["validity_radius"] = validity_radius(closed);

  const auto scaling = residual_scaling(sys, closed, log_grid(1e-4, 1e-2, 21));
  m["residual_slope"] = scaling.slope;
  Table res;
  res.columns = {"rho", "residual"};
  for (std::size_t i = 0; i < scaling.rho.size(); ++i) res.add_row({scaling.rho[i], scaling.residual[i]});

  const std::function<double(double)> root = [&sys](double u) { return tihonov_root(sys, u).v; };
  const auto asym = asymptotic_compare(closed, root, log_grid(1e-4, 1e-2, 21));
  m["asymptotic"] = {{"difference_order", asym.difference_order},
                     {"ratio_order", asym.ratio_order},
                     {"equivalent", asym.equivalent}};

  const bool want0 = !mc.scenario || std::count(mc.scenario->manifold_orders.begin(),
                                                mc.scenario->manifold_orders.end(), 0);
  const bool want1 = !mc.scenario || std::count(mc.scenario->manifold_orders.begin(),
                                                mc.scenario->manifold_orders.end(), 1);
  Table curves;
  curves.columns = {"u", "v_root"};
  if (want0) curves.columns.push_back("v_cm0");
  if (want1) curves.columns.push_back("v_cm1");
  Plot plot{"Slow manifold reconstructions", "u", "v", {}};
  Curve c_root{"root", {}, {}}, c0{"order 0", {}, {}}, c1{"order 1", {}, {}};
  const double radius = validity_radius(closed);
  int outside = 0;
  for (int i = 0; i <= 200; ++i) {
    const double u = i / 200.0;
    std::vector<double> row{u, root(u)};
    c_root.x.push_back(u);
    c_root.y.push_back(row.back());
    const auto p0 = evaluate_manifold(closed, u, 0.0);
    const auto p1 = evaluate_manifold(closed, u, eps);
    if (!p0.within_radius) ++outside;
    if (want0) row.push_back(p0.v);
    if (want1) row.push_back(p1.v);
    if (u <= radius) {
      c0.x.push_back(u);
      c0.y.push_back(p0.v);
      c1.x.push_back(u);
      c1.y.push_back(p1.v);
    }
    curves.add_row(std::move(row));
  }
  if (outside > 0)
    job.report.warnings.push_back("reconstruction evaluated beyond the validity radius u <= " +
                                  format_number(radius) + " at " + std::to_string(outside) +
                                  " grid points");
  plot.curves.push_back(c_root);
  if (want0) plot.curves.push_back(c0);
  if (want1) plot.curves.push_back(c1);

  out << "lambda1 = " << format_number(closed.lambda1) << '\n'
      << "lambda2 = " << format_number(closed.lambda2) << '\n'
      << "lambda3 = " << format_number(closed.lambda3) << '\n'
      << "residual slope = " << format_number(scaling.slope) << '\n';

  job.artifacts.tables.push_back({"_residual", std::move(res)});
  job.artifacts.tables.push_back({"_curves", std::move(curves)});
  job.artifacts.plots.push_back({"_curves", std::move(plot)});
  return job;
}

// ------------------------------------------------------------ sweep/tihonov

std::vector<double> eps_grid(const Options& o) {
  if (!o.eps_list.empty()) return o.eps_list;
  return {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
}

json sweep_json(const SweepReport& r) {
  return {{"eps", r.eps},
          {"slow_error", r.slow_error},
          {"fast_error", r.fast_error},
          {"t1", r.t1},
          {"T", r.T},
          {"slow_slope", r.slow_slope},
          {"fast_slope", r.fast_slope}};
}

void add_sweep(Job& job, const SweepReport& r) {
  job.report.metrics["sweep"] = sweep_json(r);
  bool slow_dec = true, fast_dec = true;
  for (std::size_t i = 1; i < r.eps.size(); ++i) {
    slow_dec = slow_dec && r.slow_error[i] < r.slow_error[i - 1];
    fast_dec = fast_dec && r.fast_error[i] < r.fast_error[i - 1];
  }
  job.report.metrics["sweep"]["slow_decreasing"] = slow_dec;
  job.report.metrics["sweep"]["fast_decreasing"] = fast_dec;
  Table t;
  t.columns = {"eps", "slow_error", "fast_error", "t1"};
  Plot plot{"Sup errors against eps (log10)", "log10 eps", "log10 error", {}};
  Curve slow{"slow", {}, {}}, fast{"fast", {}, {}};
  for (std::size_t i = 0; i < r.eps.size(); ++i) {
    t.add_row({r.eps[i], r.slow_error[i], r.fast_error[i], r.t1[i]});
    slow.x.push_back(std::log10(r.eps[i]));
    slow.y.push_back(std::log10(r.slow_error[i]));
    fast.x.push_back(std::log10(r.eps[i]));
    fast.y.push_back(std::log10(r.fast_error[i]));
  }
  plot.curves = {slow, fast};
  job.artifacts.tables.push_back({"_sweep", std::move(t)});
  job.artifacts.plots.push_back({"_sweep", std::move(plot)});
}

Job sweep(const Options& o) {
  const ModelChoice mc = resolve_model(o);
  Job job;
  job.stem = "sweep_" + mc.name + (mc.scenario ? "_" + mc.scenario->name : "");
  start_model_report(job, "sweep", mc);
  const auto cfg = mc.scenario ? mc.scenario->solver : solver_from(o);
  add_sweep(job, epsilon_sweep(mc.model, eps_grid(o), o.horizon.value_or(0.0), 0.0, cfg));
  return job;
}

Job tihonov(const Options& o) {
  const ModelChoice mc = resolve_model(o);
  Job job;
  job.stem = "tihonov_" + mc.name + (mc.scenario ? "_" + mc.scenario->name : "");
  start_model_report(job, "tihonov", mc);
  const auto cfg = mc.scenario ? mc.scenario->solver : solver_from(o);
  auto& m = job.report.metrics;
  add_sweep(job, epsilon_sweep(mc.model, eps_grid(o), o.horizon.value_or(0.0), 0.0, cfg));

  // mu-tube confinement at the model eps (1e-3 when none is given)
  const auto sys = system_of(mc.model);
  const double eps = eps_of(mc.model) > 0 ? eps_of(mc.model) : 1e-3;
  const double T = o.horizon.value_or(3.0 * slow_time_constant(mc.model));
  auto cfg_tube = cfg;
  if (eps < 1e-2) cfg_tube.method = ode::Method::ImplicitStiff;
  const auto traj = ode::integrate(general_problem(sys, eps, TimeFrame::Outer, 1.0, 0.0, T), cfg_tube);
  const std::function<double(double)> root = [&sys](double u) { return tihonov_root(sys, u).v; };
  const auto entry = tube_entry_time(traj, root, o.mu);
  m["tube"] = {{"eps", eps}, {"mu", o.mu}, {"T", T}, {"entered", entry.has_value()}};
  if (entry) {
    m["tube"]["entry_time"] = *entry;
    m["tube"]["confined"] = mu_tube_check(traj, root, o.mu, *entry, T);
  } else {
    job.report.warnings.push_back("trajectory never entered the mu/2 tube");
  }

  // boundary-layer flow at u = 1 from a grid of initial fast values
  const auto r1 = tihonov_root(sys, 1.0);
  double beta_max = 4.0 * std::max(1.0, r1.v);
  if (const auto* q = std::get_if<NondimTQ<double>>(&mc.model)) {
    const double bsum = q->eta + q->kappa_m + q->sigma;
    const double vplus = (bsum + std::sqrt(bsum * bsum - 4 * q->eta * q->sigma)) / (2 * q->eta * q->sigma);
    beta_max = 2.0 * vplus;
  }
  const double tau_max = 40.0 / std::abs(r1.slope);
  Table dom;
  dom.columns = {"beta", "converged", "limit"};
  int converged = 0;
  for (int i = 0; i <= 20; ++i) {
    const double beta = beta_max * i / 20.0;
    const auto bl = boundary_layer_converges(sys, 1.0, beta, tau_max, 1e-6, cfg);
    dom.add_row({beta, bl.converged ? 1.0 : 0.0, bl.limit});
    converged += bl.converged;
  }
  m["domain_of_influence"] = {{"alpha", 1.0},   {"root", r1.v},       {"tau_max", tau_max},
                              {"samples", 21},  {"converged", converged}};
  job.artifacts.tables.push_back({"_domain", std::move(dom)});

  if (mc.scenario && mc.scenario->analyses) {
    const auto kin = mc.scenario->kinetics();
    const double Tk = 40.0 * slow_time_constant(kin);
    const auto full = ode::integrate(full_problem(kin, kin.X_T(), 0.0, Tk), mc.scenario->solver);
    const auto kw = kw_analysis(kin, full);
    m["K_W"] = {{"alpha", kw.alpha},
                {"K_W", kw.K_W},
                {"K_D", kw.K_D},
                {"K_M", kw.K_M},
                {"empirical_limit", kw.empirical_limit},
                {"relative_gap", kw.relative_gap},
                {"bracket_holds", kw.bracket_holds},
                {"window_samples", kw.window_samples},
                {"T", Tk}};
  }
  return job;
}

// ------------------------------------------------------------------ figure

struct FigureRuns {
  Kinetics<double> kin;
  double T;
  std::vector<double> times;
  ode::Trajectory<double> full;
  ReducedSolution<double> sq;
  ReducedSolution<double> tq;
};

FigureRuns figure_runs(const Scenario& s) {
  const auto kin = s.kinetics();
  const double T = effective_horizon(s);
  const double X0 = s.initial_X();
  return {kin,
          T,
          output_times(T),
          ode::integrate(full_problem(kin, X0, s.C0, T), s.solver),
          solve_reduced(ReductionKind::Standard, kin, X0, T, s.solver),
          solve_reduced(ReductionKind::Total, kin, X0 + s.C0, T, s.solver)};
}

json approximation_json(const ApproximationReport& a) {
  json j{{"slow_phase_start", a.slow_phase_start},
         {"peak_C", a.peak_C},
         {"sqssa_X", windowed_json(a.sqssa_X)},
         {"sqssa_C", windowed_json(a.sqssa_C)},
         {"tqssa_Xbar", windowed_json(a.tqssa_Xbar)},
         {"tqssa_C", windowed_json(a.tqssa_C)}};
  j["manifolds"] = json::array();
  for (const auto& c : a.manifolds)
    j["manifolds"].push_back({{"name", c.name},
                              {"to_full", deviation_json(c.to_full)},
                              {"to_closure", deviation_json(c.to_closure)}});
  return j;
}

void figure1(Job& job, const Scenario& s, const std::string& side) {
  const auto r = figure_runs(s);
  const auto& kin = r.kin;
  Table t;
  t.columns = {"t", "X_full", "C_full", "Xbar_full", "X_sqssa", "C_sqssa", "Xbar_tqssa", "C_tqssa"};
  Curve cf{"C full", {}, {}}, cs{"C sQSSA", {}, {}}, ct{"C tQSSA", {}, {}};
  Curve xf{"X full", {}, {}}, xbf{"Xbar full", {}, {}}, xs{"X sQSSA", {}, {}}, xbt{"Xbar tQSSA", {}, {}};
  const double t_slow = slow_phase_start(r.full);
  double peak = 0;
  for (const auto& st : r.full.states) peak = std::max(peak, st(1));
  double xbar_dev = 0, c_dev_transient = 0;
  for (double time : r.times) {
    const auto y = ode::sample(r.full, time);
    const double x_s = ode::sample(r.sq.slow, time)(0);
    const double x_t = ode::sample(r.tq.slow, time)(0);
    const double c_s = sqssa_complex(x_s, kin.E_T(), kin.K_M());
    const double c_t = cminus(x_t, kin.E_T(), kin.K_M());
    t.add_row({time, y(0), y(1), y(0) + y(1), x_s, c_s, x_t, c_t});
    xbar_dev = std::max(xbar_dev, std::abs(y(0) + y(1) - x_t));
    if (time < t_slow) c_dev_transient = std::max(c_dev_transient, std::abs(y(1) - c_s));
    for (auto [curve, v] : {std::pair{&cf, y(1)}, {&cs, c_s}, {&ct, c_t}, {&xf, y(0)},
                            {&xbf, y(0) + y(1)}, {&xs, x_s}, {&xbt, x_t}}) {
      curve->x.push_back(time);
      curve->y.push_back(v);
    }
  }
  auto& m = job.report.metrics;
  m["approximation"] = approximation_json(approximation_report(kin, r.full, r.sq, r.tq, {}, true));
  m["tqssa_Xbar_max_deviation_over_X_T"] = xbar_dev / kin.X_T();
  m["sqssa_C_transient_max_deviation_over_peak_C"] = c_dev_transient / peak;
  m["full_steps"] = stats_json(r.full.stats);
  job.artifacts.tables.push_back({"", std::move(t)});
  if (side.empty() || side == "left")
    job.artifacts.plots.push_back({"_complexes", Plot{"Complexes", "t", "C", {cf, cs, ct}}});
  if (side.empty() || side == "right")
    job.artifacts.plots.push_back(
        {"_substrates", Plot{"Substrates", "t", "substrate", {xf, xbf, xs, xbt}}});
}

// Figures 2 and 3: phase-plane comparison of the full solution with the
// closure and the order-0/order-1 manifold reconstructions.
void figure_phase(Job& job, const Scenario& s, bool total) {
  const auto r = figure_runs(s);
  const auto& kin = r.kin;
  ManifoldCoeffs<double> coeffs;
  double eps = 0, C_scale = 0;
  if (total) {
    const auto p = nondim_tq(kin);
    coeffs = coeffs_closed_form(p);
    eps = p.eps;
    C_scale = p.C_scale;
  } else {
    const auto p = nondim_hta(kin);
    coeffs = coeffs_closed_form(p);
    eps = p.eps;
    C_scale = p.C_scale;
  }
  const double X_T = kin.X_T();
  const double limit = validity_radius(coeffs) * X_T;
  auto cm = [&, coeffs, C_scale](double order_eps) {
    return [=](double slow) { return C_scale * reconstruct_v(coeffs, slow / X_T, order_eps); };
  };
  const std::vector<ManifoldCurve> curves = {{"cm0", cm(0.0), limit}, {"cm1", cm(eps), limit}};
  const auto closure = [&](double slow) {
    return total ? cminus(slow, kin.E_T(), kin.K_M()) : sqssa_complex(slow, kin.E_T(), kin.K_M());
  };
  const auto& red = total ? r.tq : r.sq;
  const std::string sname = total ? "Xbar" : "X";
  const std::string rname = total ? "tqssa" : "sqssa";

  Table t;
  t.columns = {"t", sname + "_full", "C_full", sname + "_" + rname, "C_" + rname, "C_cm0", "C_cm1"};
  Curve full{"full", {}, {}}, clo{total ? "tQSSA" : "sQSSA", {}, {}};
  Curve c0{"order 0 manifold", {}, {}}, c1{"order 1 manifold", {}, {}};
  Curve ts_full{"C full", {}, {}}, ts_red{"C " + clo.name, {}, {}};
  for (double time : r.times) {
    const auto y = ode::sample(r.full, time);
    const double slow = total ? y(0) + y(1) : y(0);
    const double x_r = ode::sample(red.slow, time)(0);
    const double c_r = closure(x_r);
    const double v0 = curves[0].fast(slow), v1 = curves[1].fast(slow);
    t.add_row({time, slow, y(1), x_r, c_r, v0, v1});
    full.x.push_back(slow);
    full.y.push_back(y(1));
    clo.x.push_back(x_r);
    clo.y.push_back(c_r);
    if (slow <= limit) {
      c0.x.push_back(slow);
      c0.y.push_back(v0);
      c1.x.push_back(slow);
      c1.y.push_back(v1);
    }
    ts_full.x.push_back(time);
    ts_full.y.push_back(y(1));
    ts_red.x.push_back(time);
    ts_red.y.push_back(c_r);
  }
  const auto rep = approximation_report(kin, r.full, r.sq, r.tq, curves, total);
  auto& m = job.report.metrics;
  m["approximation"] = approximation_json(rep);
  m["manifold_coefficients"] = coeffs_json(coeffs);
  m["manifold_eps"] = eps;
  m["validity_limit"] = limit;
  m["order1_closer_to_full"] = rep.manifolds[1].to_full.rms < rep.manifolds[0].to_full.rms;
  m["order0_closer_to_closure"] = rep.manifolds[0].to_closure.rms < rep.manifolds[1].to_closure.rms;
  m["full_steps"] = stats_json(r.full.stats);
  if (limit < X_T)
    job.report.warnings.push_back("manifold curves restricted to " + sname + " <= " +
                                  format_number(limit) + " (validity radius)");
  job.artifacts.tables.push_back({"", std::move(t)});
  job.artifacts.plots.push_back(
      {"_phase", Plot{"Phase plane (" + s.name + ")", sname, "C", {full, clo, c0, c1}}});
  job.artifacts.plots.push_back(
      {"_timeseries", Plot{"Complex (" + s.name + ")", "t", "C", {ts_full, ts_red}}});
}

Job figure(const Options& o) {
  if (o.figure < 1 || o.figure > 3) throw ValidationError("figure number must be 1, 2 or 3");
  if (!o.side.empty() && o.side != "left" && o.side != "right")
    throw ValidationError("figure side must be left or right");
  if (o.figure != 1 && o.side.empty())
    throw ValidationError("figure " + std::to_string(o.figure) + " needs a side (left or right)");
  const std::string fallback =
      o.figure == 1 ? "fig1_consistent" : "fig" + std::to_string(o.figure) + "_" + o.side;
  const Scenario s = resolve_scenario(o, fallback);
  Job job;
  job.stem = "figure" + std::to_string(o.figure) + (o.side.empty() ? "" : "_" + o.side);
  if (s.name != fallback) job.stem += "_" + s.name;
  start_report(job, "figure", s, effective_horizon(s));
  job.report.scenario["figure"] = o.figure;
  if (!o.side.empty()) job.report.scenario["side"] = o.side;
  if (o.figure == 1)
    figure1(job, s, o.side);
  else
    figure_phase(job, s, o.figure == 3);
  return job;
}

// -------------------------------------------------------------- dispatcher

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "scenario config file");
  sub->add_option("--scenario", o.scenario, "built-in scenario name");
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--format", o.format, "comma-separated subset of csv,json,svg")->capture_default_str();
  sub->add_option("--rtol", o.rtol, "relative tolerance");
  sub->add_option("--atol", o.atol, "absolute tolerance");
  sub->add_option("--method", o.method, "integrator")->check(CLI::IsMember({"explicit", "implicit"}));
  sub->add_option("--horizon", o.horizon, "time horizon");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "hta or tq")->check(CLI::IsMember({"hta", "tq"}));
  sub->add_option("--kappa", o.kappa);
  sub->add_option("--lambda", o.lambda);
  sub->add_option("--eps", o.eps);
  sub->add_option("--sigma", o.sigma);
  sub->add_option("--eta", o.eta);
  sub->add_option("--kappa-m", o.kappa_m);
}

}  // namespace

CommandResult run_command(const std::vector<std::string>& args, std::ostream& out,
                          std::ostream& err) {
  CommandResult result;
  Options o;
  CLI::App app{"Michaelis-Menten reductions: QSSA, center manifold and singular-perturbation checks",
               "mmcm"};
  app.require_subcommand(1, 1);
  auto* sim = app.add_subcommand("simulate", "full and lumped trajectories");
  auto* red = app.add_subcommand("reduce", "sQSSA and tQSSA solutions");
  auto* man = app.add_subcommand("manifold", "center manifold coefficients and reconstructions");
  auto* tih = app.add_subcommand("tihonov", "eps sweep, mu-tube, domain of influence, K_W");
  auto* fig = app.add_subcommand("figure", "comparison dataset for a published parameter set");
  auto* swp = app.add_subcommand("sweep", "eps grid of sup errors");
  for (auto* sub : {sim, red, man, tih, fig, swp}) add_common(sub, o);
  for (auto* sub : {man, tih, swp}) add_model(sub, o);
  for (auto* sub : {tih, swp})
    sub->add_option("--eps-list", o.eps_list, "strictly decreasing eps values")->delimiter(',');
  tih->add_option("--mu", o.mu, "tube radius")->capture_default_str();
  fig->add_option("number", o.figure, "1, 2 or 3")->required();
  fig->add_option("side", o.side, "left or right");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    result.exit_code = kOk;
    return result;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    result.exit_code = kValidation;
    return result;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const Formats formats = parse_formats(o.format);
    Job job;
    if (name == "simulate")
      job = simulate(o);
    else if (name == "reduce")
      job = reduce(o);
    else if (name == "manifold")
      job = manifold(o, out);
    else if (name == "tihonov")
      job = tihonov(o);
    else if (name == "figure")
      job = figure(o);
    else
      job = sweep(o);
    for (const auto& w : job.report.warnings) err << "warning: " << w << '\n';
    emit_outputs(job.report, job.artifacts, o.out, job.stem, formats);
    for (const auto& path : job.report.manifest) out << "wrote " << path << '\n';
    result.report = std::move(job.report);
    result.exit_code = kOk;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    result.exit_code = kValidation;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    result.exit_code = kValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    result.exit_code = kNumerical;
  }
  result.report.command = name;
  return result;
}

}  // namespace mmcm::cli

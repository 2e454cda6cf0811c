#include "mmcm/tihonov.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace mmcm {

BoundaryLayerResult boundary_layer_converges(const GeneralSP<double>& sys, double alpha,
                                             double beta, double tau_max, double tol,
                                             const ode::SolverConfig<double>& config) {
  if (!(tau_max > 0)) throw std::invalid_argument("tau_max must be positive");
  const auto root_info = tihonov_root(sys, alpha);
  const double root = root_info.v;

  double last_finite = beta;
  ode::Problem<double> pb;
  pb.t_end = tau_max;
  pb.y0 = ode::Vector<double>::Constant(1, beta);
  pb.rhs = [&sys, alpha, &last_finite](double, const ode::Vector<double>& y) {
    if (std::isfinite(y(0))) last_finite = y(0);
    return ode::Vector<double>::Constant(1, sys.fast(alpha, y(0)));
  };

  ode::Trajectory<double> traj;
  try {
    traj = ode::integrate(pb, config);
  } catch (const ode::IntegrationError&) {
    return {false, last_finite, root};
  }
  const double limit = traj.states.back()(0);
  if (!std::isfinite(limit)) return {false, last_finite, root};

  // |dy/dtau| must not grow over the final decade of tau, except for
  // fluctuations at the integrator's tolerance level.
  const double floor = 100.0 * (config.atol + config.rtol * std::abs(root)) *
                       std::max(1.0, std::abs(root_info.slope));
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 10; ++k) {
    const double tau = tau_max * k / 10.0;
    const double y = ode::sample(traj, tau)(0);
    const double rate = std::abs(sys.fast(alpha, y));
    if (rate > prev && rate > floor) decreasing = false;
    prev = rate;
  }
  return {decreasing && std::abs(limit - root) < tol, limit, root};
}

namespace {

double tube_distance(const ode::Vector<double>& s, const std::function<double(double)>& root) {
  return std::abs(s(1) - root(s(0)));
}

}  // namespace

bool mu_tube_check(const ode::Trajectory<double>& traj, const std::function<double(double)>& root,
                   double mu, double entry_time, double T) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
  if (entry_time < traj.times.front() || T > traj.times.back() || entry_time > T)
    throw std::invalid_argument("trajectory does not cover [entry_time, T]");
  if (!(tube_distance(ode::sample(traj, entry_time), root) < mu))
    throw std::invalid_argument("trajectory is outside the mu-tube at entry_time");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < entry_time) continue;
    if (t > T) break;
    if (!(tube_distance(traj.states[i], root) < mu)) return false;
  }
  return true;
}

std::optional<double> tube_entry_time(const ode::Trajectory<double>& traj,
                                      const std::function<double(double)>& root, double mu) {
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (tube_distance(traj.states[i], root) < mu / 2) return traj.times[i];
  return std::nullopt;
}

namespace {

struct SweepFunctions {
  std::function<double(double)> root;
  std::function<double(double)> reduced;  // du/dtau on the root
  std::function<ode::Problem<double>(double eps, double T)> full;
};

SweepFunctions sweep_functions(const SweepModel& model) {
  if (const auto* hta = std::get_if<NondimHTA<double>>(&model)) {
    const NondimHTA<double> p = *hta;
    SweepFunctions fns;
    fns.root = [p](double u) { return sqssa_v(u, p.kappa); };
    fns.reduced = [p](double u) { return -p.lambda * u / (p.kappa + u); };
    fns.full = [p](double eps, double T) {
      NondimHTA<double> q = p;
      q.eps = eps;
      return hta_problem(q, TimeFrame::Outer, 1.0, 0.0, T);
    };
    return fns;
  }
  const NondimTQ<double> p = std::get<NondimTQ<double>>(model);
  SweepFunctions fns;
  fns.root = [p](double u) { return tq_root_nondim(u, p); };
  fns.reduced = [p](double u) { return -tq_root_nondim(u, p); };
  fns.full = [p](double eps, double T) {
    NondimTQ<double> q = p;
    q.eps = eps;
    return tq_problem(q, TimeFrame::Outer, 1.0, 0.0, T);
  };
  return fns;
}

struct SweepPoint {
  double slow_error;
  double fast_error;
};

SweepPoint sweep_point(const SweepFunctions& fns, const ode::Trajectory<double>& reduced,
                       double eps, double T, double t1, const ode::SolverConfig<double>& cfg) {
  const auto full = ode::integrate(fns.full(eps, T), cfg);
  std::vector<double> times = full.times;
  constexpr int uniform = 2000;
  for (int i = 0; i <= uniform; ++i) times.push_back(T * i / uniform);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  SweepPoint pt{0, 0};
  for (double t : times) {
    const auto y = ode::sample(full, t);
    const double u0 = ode::sample(reduced, t)(0);
    pt.slow_error = std::max(pt.slow_error, std::abs(y(0) - u0));
    if (t >= t1) pt.fast_error = std::max(pt.fast_error, std::abs(y(1) - fns.root(u0)));
  }
  return pt;
}

}  // namespace

double slow_time_constant(const SweepModel& model) {
  const auto fns = sweep_functions(model);
  return 1.0 / std::abs(fns.reduced(1.0));
}

double slow_time_constant(const Kinetics<double>& kin) {
  return kin.X_T() / std::abs(tqssa_reduced_rhs(kin.X_T(), kin));
}

SweepReport epsilon_sweep(const SweepModel& model, const std::vector<double>& eps_list, double T,
                          double t1, const ode::SolverConfig<double>& config) {
  if (eps_list.empty()) throw std::invalid_argument("empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0)) throw std::invalid_argument("eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("eps values must be strictly decreasing");
  }
  const auto fns = sweep_functions(model);
  if (!(T > 0)) T = 3.0 * slow_time_constant(model);

  ode::Problem<double> red;
  red.t_end = T;
  red.y0 = ode::Vector<double>::Constant(1, 1.0);
  red.rhs = [&fns](double, const ode::Vector<double>& y) {
    return ode::Vector<double>::Constant(1, fns.reduced(y(0)));
  };
  ode::SolverConfig<double> red_cfg = config;
  red_cfg.method = ode::Method::ExplicitAdaptive;
  red_cfg.rtol = std::min(config.rtol, 1e-10);
  red_cfg.atol = std::min(config.atol, 1e-12);
  const auto reduced = ode::integrate(red, red_cfg);

  std::vector<std::future<SweepPoint>> runs;
  runs.reserve(eps_list.size());
  for (double eps : eps_list) {
    const double run_t1 = t1 > 0 ? t1 : 5.0 * eps;
    runs.push_back(std::async(std::launch::async, [&fns, &reduced, eps, T, run_t1, &config] {
      return sweep_point(fns, reduced, eps, T, run_t1, config);
    }));
  }

  SweepReport report;
  report.T = T;
  std::optional<std::string> failure;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    try {
      const SweepPoint pt = runs[i].get();
      report.eps.push_back(eps_list[i]);
      report.t1.push_back(t1 > 0 ? t1 : 5.0 * eps_list[i]);
      report.slow_error.push_back(pt.slow_error);
      report.fast_error.push_back(pt.fast_error);
    } catch (const std::exception& e) {
      if (!failure) failure = "eps = " + std::to_string(eps_list[i]) + ": " + e.what();
    }
  }
  auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
    for (double v : y)
      if (!(v > 0)) return std::numeric_limits<double>::quiet_NaN();
    return x.size() >= 2 ? loglog_slope<double>(x, y) : std::numeric_limits<double>::quiet_NaN();
  };
  report.slow_slope = fit(report.eps, report.slow_error);
  report.fast_slope = fit(report.eps, report.fast_error);
  if (failure) throw SweepError("epsilon sweep failed at " + *failure, report);
  return report;
}

std::pair<double, double> kw_constants(const Kinetics<double>& kin) {
  const double s = kin.K_M() + kin.E_T();
  const double x = 4.0 * kin.k2() * kin.E_T() / (kin.k1() * s * s);
  // (k1 s/2)(1 - sqrt(1 - x)) without cancellation
  const double alpha = 0.5 * kin.k1() * s * x / (1.0 + std::sqrt(1.0 - x));
  return {alpha, (kin.k2() - alpha) / alpha * kin.E_T()};
}

KwReport kw_analysis(const Kinetics<double>& kin, const ode::Trajectory<double>& traj) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  const auto [alpha, kw] = kw_constants(kin);
  KwReport r{};
  r.alpha = alpha;
  r.K_W = kw;
  r.K_D = kin.derived().K_D;
  r.K_M = kin.K_M();
  r.bracket_holds = r.K_D < r.K_W && r.K_W < r.K_M;

  double peak = 0;
  for (const auto& s : traj.states) peak = std::max(peak, s(1));
  std::vector<std::size_t> above;
  if (peak > 0)
    for (std::size_t i = 0; i < traj.size(); ++i)
      if (traj.states[i](1) > 0.01 * peak) above.push_back(i);
  if (above.empty()) throw NumericalError("insufficient data: complex never exceeds threshold");

  const std::size_t count = std::max<std::size_t>(1, (above.size() + 9) / 10);
  double sum = 0;
  for (std::size_t j = above.size() - count; j < above.size(); ++j) {
    const auto& s = traj.states[above[j]];
    const double e = s.size() == 4 ? s(3) : kin.E_T() - s(1);
    sum += e * s(0) / s(1);
  }
  r.window_samples = count;
  r.empirical_limit = sum / static_cast<double>(count);
  r.relative_gap = (r.empirical_limit - kw) / kw;
  return r;
}

namespace {

void accumulate(Deviation& d, double e) {
  d.max = std::max(d.max, e);
  d.rms += e * e;
  ++d.samples;
}

void finish(Deviation& d) { d.rms = d.samples ? std::sqrt(d.rms / d.samples) : 0.0; }

}  // namespace

WindowedDeviation compare_series(const std::vector<double>& times,
                                 const std::vector<double>& reference,
                                 const std::vector<double>& approx, double split_time) {
  if (times.size() != reference.size() || times.size() != approx.size())
    throw std::invalid_argument("series length mismatch");
  WindowedDeviation w;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double e = std::abs(reference[i] - approx[i]);
    accumulate(times[i] < split_time ? w.transient : w.slow_phase, e);
    accumulate(w.overall, e);
  }
  finish(w.transient);
  finish(w.slow_phase);
  finish(w.overall);
  return w;
}

double slow_phase_start(const ode::Trajectory<double>& full) {
  if (full.empty()) throw std::invalid_argument("empty trajectory");
  double peak = 0;
  for (const auto& s : full.states) peak = std::max(peak, s(1));
  for (std::size_t i = 0; i < full.size(); ++i)
    if (full.states[i](1) >= 0.95 * peak) return full.times[i];
  return full.times.front();
}

ApproximationReport approximation_report(const Kinetics<double>& kin,
                                         const ode::Trajectory<double>& full,
                                         const ReducedSolution<double>& sqssa,
                                         const ReducedSolution<double>& tqssa,
                                         const std::vector<ManifoldCurve>& curves,
                                         bool curves_use_total) {
  for (const auto* red : {&sqssa, &tqssa}) {
    if (!red->kinetics || !red->kinetics->same_parameters(kin))
      throw ValidationError("reduced solution was computed for a different parameter set");
    if (red->slow.empty() || red->slow.times.front() > full.times.front() ||
        red->slow.times.back() < full.times.back())
      throw ValidationError("reduced solution does not cover the full time window");
  }
  if (sqssa.kind != ReductionKind::Standard || tqssa.kind != ReductionKind::Total)
    throw ValidationError("expected an sQSSA and a tQSSA solution");

  ApproximationReport rep;
  rep.slow_phase_start = slow_phase_start(full);
  rep.peak_C = 0;
  for (const auto& s : full.states) rep.peak_C = std::max(rep.peak_C, s(1));

  const auto& t = full.times;
  std::vector<double> X, C, Xbar, sX, sC, tXbar, tC;
  for (std::size_t i = 0; i < t.size(); ++i) {
    X.push_back(full.states[i](0));
    C.push_back(full.states[i](1));
    Xbar.push_back(X.back() + C.back());
    const double xs = ode::sample(sqssa.slow, t[i])(0);
    const double xt = ode::sample(tqssa.slow, t[i])(0);
    sX.push_back(xs);
    sC.push_back(sqssa_complex(xs, kin.E_T(), kin.K_M()));
    tXbar.push_back(xt);
    tC.push_back(cminus(xt, kin.E_T(), kin.K_M()));
  }
  rep.sqssa_X = compare_series(t, X, sX, rep.slow_phase_start);
  rep.sqssa_C = compare_series(t, C, sC, rep.slow_phase_start);
  rep.tqssa_Xbar = compare_series(t, Xbar, tXbar, rep.slow_phase_start);
  rep.tqssa_C = compare_series(t, C, tC, rep.slow_phase_start);

  for (const auto& curve : curves) {
    CurveDeviation cd;
    cd.name = curve.name;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < rep.slow_phase_start) continue;
      const double slow = curves_use_total ? Xbar[i] : X[i];
      if (slow > curve.validity_limit) continue;
      const double closure = curves_use_total ? cminus(slow, kin.E_T(), kin.K_M())
                                              : sqssa_complex(slow, kin.E_T(), kin.K_M());
      const double value = curve.fast(slow);
      accumulate(cd.to_full, std::abs(C[i] - value));
      accumulate(cd.to_closure, std::abs(closure - value));
    }
    finish(cd.to_full);
    finish(cd.to_closure);
    rep.manifolds.push_back(cd);
  }
  return rep;
}

}  // namespace mmcm

#pragma once

// Numerical checks of the singular-perturbation limit: boundary-layer
// convergence, mu-tube confinement, the eps -> 0 sweep, the K_W asymptote and
// deviation metrics between full and reduced solutions.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmcm/center_manifold.hpp"
#include "mmcm/kinetics.hpp"
#include "mmcm/models.hpp"
#include "mmcm/ode.hpp"
#include "mmcm/qssa.hpp"

namespace mmcm {

struct BoundaryLayerResult {
  bool converged;
  double limit;  // y at tau_max (or the last finite value)
  double root;   // stable root phi(alpha)
};

/// Integrates dy/dtau = g(alpha, y) from y(0) = beta and reports whether it
/// settles on the stable root.
BoundaryLayerResult boundary_layer_converges(const GeneralSP<double>& sys, double alpha,
                                             double beta, double tau_max, double tol,
                                             const ode::SolverConfig<double>& config = {});

/// True iff |y(t) - root(x(t))| < mu for every stored sample in [entry_time, T]
/// (plus the interpolated state at entry_time). States are (x, y).
bool mu_tube_check(const ode::Trajectory<double>& traj, const std::function<double(double)>& root,
                   double mu, double entry_time, double T);

/// First stored time at which the trajectory is inside the mu/2 tube.
std::optional<double> tube_entry_time(const ode::Trajectory<double>& traj,
                                      const std::function<double(double)>& root, double mu);

/// Base parameters of an eps sweep; the eps field is overridden per run.
using SweepModel = std::variant<NondimHTA<double>, NondimTQ<double>>;

struct SweepReport {
  std::vector<double> eps;
  std::vector<double> slow_error;  // sup |x - x0| on [0, T]
  std::vector<double> fast_error;  // sup |y - y0| on [t1, T]
  std::vector<double> t1;
  double T = 0;
  double slow_slope = 0;
  double fast_slope = 0;
};

/// A sweep run failed; `partial` holds the runs that completed.
class SweepError : public NumericalError {
 public:
  SweepError(const std::string& what, SweepReport partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const SweepReport& partial() const noexcept { return partial_; }

 private:
  SweepReport partial_;
};

/// Slow time constant of the nondimensional reduced equation: u(0)/|du/dtau(0)| with u(0) = 1.
double slow_time_constant(const SweepModel& model);

/// Slow time constant of the dimensional tQSSA equation: X_T/|dXbar/dt(0)|.
double slow_time_constant(const Kinetics<double>& kin);

/// Runs the full (outer-frame) and reduced problems for each eps, in parallel.
/// T <= 0 selects 3 slow time constants; t1 <= 0 selects 5 eps per run.
SweepReport epsilon_sweep(const SweepModel& model, const std::vector<double>& eps_list,
                          double T = 0, double t1 = 0, const ode::SolverConfig<double>& config = {});

struct KwReport {
  double alpha;
  double K_W;
  double K_D;
  double K_M;
  double empirical_limit;
  double relative_gap;  // (empirical_limit - K_W)/K_W
  bool bracket_holds;   // K_D < K_W < K_M
  std::size_t window_samples;
};

/// alpha and K_W from the closed formulas.
std::pair<double, double> kw_constants(const Kinetics<double>& kin);

/// traj holds full-system states (X, C). The empirical limit is the mean of
/// E X/C over the last 10% of samples with C above 1% of its peak.
KwReport kw_analysis(const Kinetics<double>& kin, const ode::Trajectory<double>& traj);

struct Deviation {
  double max = 0;
  double rms = 0;
  std::size_t samples = 0;
};

struct WindowedDeviation {
  Deviation transient;
  Deviation slow_phase;
  Deviation overall;
};

/// Deviation statistics of approx against reference, split at split_time.
WindowedDeviation compare_series(const std::vector<double>& times,
                                 const std::vector<double>& reference,
                                 const std::vector<double>& approx, double split_time);

/// Phase-plane curve C = fast(slow) from a manifold reconstruction.
struct ManifoldCurve {
  std::string name;
  std::function<double(double)> fast;
  double validity_limit;  // curve only compared for slow variable <= this
};

struct CurveDeviation {
  std::string name;
  Deviation to_full;      // |C_full - C_curve(slow_full)| in the slow phase
  Deviation to_closure;   // |C_closure(slow) - C_curve(slow)| on the same points
};

struct ApproximationReport {
  double slow_phase_start;  // first time C reaches 95% of its peak
  double peak_C;
  WindowedDeviation sqssa_X;
  WindowedDeviation sqssa_C;
  WindowedDeviation tqssa_Xbar;
  WindowedDeviation tqssa_C;
  std::vector<CurveDeviation> manifolds;
};

/// Time at which C first reaches 95% of its maximum over traj (states (X, C)).
double slow_phase_start(const ode::Trajectory<double>& full);

/// Compares the full (X, C) trajectory with both reductions and the manifold
/// curves. Manifold curves are expressed in the total substrate Xbar when
/// `curves_use_total` is set, otherwise in X, and are measured against the
/// matching closure (tQSSA or sQSSA).
ApproximationReport approximation_report(const Kinetics<double>& kin,
                                         const ode::Trajectory<double>& full,
                                         const ReducedSolution<double>& sqssa,
                                         const ReducedSolution<double>& tqssa,
                                         const std::vector<ManifoldCurve>& curves,
                                         bool curves_use_total);

}  // namespace mmcm

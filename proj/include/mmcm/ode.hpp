#pragma once

// Adaptive time integration: Dormand-Prince 5(4) for non-stiff problems and a
// three-stage L-stable SDIRK scheme with step doubling for stiff ones.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mmcm::ode {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Method { ExplicitAdaptive, ImplicitStiff };

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { MaxSteps, NewtonDivergence, NonFinite, StepTooSmall };

  IntegrationError(Kind kind, double last_time, const std::string& what)
      : std::runtime_error(what), kind_(kind), last_time_(last_time) {}

  Kind kind() const noexcept { return kind_; }
  /// Time of the last accepted state.
  double last_time() const noexcept { return last_time_; }

 private:
  Kind kind_;
  double last_time_;
};

template <typename Scalar = double>
struct Problem {
  std::function<Vector<Scalar>(Scalar, const Vector<Scalar>&)> rhs;
  Scalar t0 = 0;
  Scalar t_end = 1;
  Vector<Scalar> y0;

  Eigen::Index dimension() const { return y0.size(); }
};

template <typename Scalar = double>
struct SolverConfig {
  Method method = Method::ExplicitAdaptive;
  Scalar rtol = Scalar(1e-8);
  Scalar atol = Scalar(1e-10);
  Scalar h_init = 0;  // 0 selects a starting step automatically
  Scalar h_max = std::numeric_limits<Scalar>::infinity();
  long max_steps = 1'000'000;

  void validate() const {
    if (!(rtol >= Scalar(1e-14)) || !std::isfinite(static_cast<double>(rtol)))
      throw std::invalid_argument("rtol must be finite and >= 1e-14");
    if (!(atol > 0) || !std::isfinite(static_cast<double>(atol)))
      throw std::invalid_argument("atol must be finite and positive");
    if (!(h_init >= 0)) throw std::invalid_argument("h_init must be non-negative");
    if (!(h_max > 0)) throw std::invalid_argument("h_max must be positive");
    if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  }
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  long jacobian_evals = 0;
  long newton_failures = 0;
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vector<Scalar>> states;
  /// rhs at each stored node, used for Hermite sampling.
  std::vector<Vector<Scalar>> derivatives;
  Stats stats;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  /// Component `i` of every stored state.
  std::vector<Scalar> component(Eigen::Index i) const {
    std::vector<Scalar> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s(i));
    return out;
  }
};

namespace detail {

template <typename Scalar>
bool all_finite(const Vector<Scalar>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(static_cast<double>(v(i)))) return false;
  return true;
}

// max_i |e_i| / (atol + rtol * max(|y_i|, |z_i|))
template <typename Scalar>
Scalar error_norm(const Vector<Scalar>& e, const Vector<Scalar>& y, const Vector<Scalar>& z,
                  Scalar rtol, Scalar atol) {
  Scalar norm = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    using std::abs;
    const Scalar scale = atol + rtol * std::max(abs(y(i)), abs(z(i)));
    norm = std::max(norm, abs(e(i)) / scale);
  }
  return norm;
}

template <typename Scalar>
class Evaluator {
 public:
  Evaluator(const Problem<Scalar>& problem, Stats& stats) : problem_(problem), stats_(stats) {}

  Vector<Scalar> operator()(Scalar t, const Vector<Scalar>& y) const {
    ++stats_.rhs_evals;
    Vector<Scalar> f = problem_.rhs(t, y);
    if (f.size() != y.size())
      throw std::invalid_argument("rhs output dimension does not match state dimension");
    return f;
  }

 private:
  const Problem<Scalar>& problem_;
  Stats& stats_;
};

template <typename Scalar>
Scalar initial_step(const Evaluator<Scalar>& f, Scalar t0, const Vector<Scalar>& y0,
                    const Vector<Scalar>& f0, int order, const SolverConfig<Scalar>& cfg,
                    Scalar span) {
  using std::pow;
  using std::sqrt;
  const Vector<Scalar> zero = Vector<Scalar>::Zero(y0.size());
  const Scalar d0 = error_norm<Scalar>(y0, y0, y0, cfg.rtol, cfg.atol);
  const Scalar d1 = error_norm<Scalar>(f0, y0, y0, cfg.rtol, cfg.atol);
  Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
  h0 = std::min({h0, span, cfg.h_max});
  const Vector<Scalar> y1 = y0 + h0 * f0;
  const Vector<Scalar> f1 = f(t0 + h0, y1);
  const Scalar d2 = error_norm<Scalar>(Vector<Scalar>(f1 - f0), y0, y0, cfg.rtol, cfg.atol) / h0;
  const Scalar dmax = std::max(d1, d2);
  Scalar h1 = dmax <= Scalar(1e-15) ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                                    : pow(Scalar(0.01) / dmax, Scalar(1) / Scalar(order + 1));
  return std::min({Scalar(100) * h0, h1, span, cfg.h_max});
}

template <typename Scalar>
void push_node(Trajectory<Scalar>& traj, Scalar t, const Vector<Scalar>& y,
               const Vector<Scalar>& dy) {
  traj.times.push_back(t);
  traj.states.push_back(y);
  traj.derivatives.push_back(dy);
}

template <typename Scalar>
Trajectory<Scalar> integrate_dopri5(const Problem<Scalar>& problem,
                                    const SolverConfig<Scalar>& cfg) {
  using std::abs;
  using std::pow;
  Trajectory<Scalar> traj;
  Evaluator<Scalar> f(problem, traj.stats);

  constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                   c5 = Scalar(8) / 9;
  constexpr Scalar a21 = Scalar(1) / 5;
  constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                   a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
  constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                   a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                   a65 = Scalar(-5103) / 18656;
  constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113, a74 = Scalar(125) / 192,
                   a75 = Scalar(-2187) / 6784, a76 = Scalar(11) / 84;
  constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                   e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;

  constexpr Scalar safety = Scalar(0.9), fac_min = Scalar(0.2), fac_max = Scalar(5);
  constexpr Scalar beta = Scalar(0.04);
  const Scalar expo = Scalar(0.2) - beta * Scalar(0.75);

  Scalar t = problem.t0;
  Vector<Scalar> y = problem.y0;
  Vector<Scalar> k1 = f(t, y);
  if (!all_finite(k1))
    throw IntegrationError(IntegrationError::Kind::NonFinite, static_cast<double>(t),
                           "non-finite rhs at initial state");
  push_node(traj, t, y, k1);

  const Scalar span = problem.t_end - problem.t0;
  Scalar h = cfg.h_init > 0 ? std::min(cfg.h_init, cfg.h_max)
                            : initial_step(f, t, y, k1, 5, cfg, span);
  Scalar err_prev = Scalar(1e-4);
  bool last_rejected = false;
  int nonfinite_streak = 0;
  long steps = 0;

  while (t < problem.t_end) {
    if (++steps > cfg.max_steps)
      throw IntegrationError(IntegrationError::Kind::MaxSteps, static_cast<double>(t),
                             "maximum number of steps exceeded");
    const Scalar remaining = problem.t_end - t;
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(abs(t), Scalar(1)))
      throw IntegrationError(IntegrationError::Kind::StepTooSmall, static_cast<double>(t),
                             "step size underflow");

    const Vector<Scalar> k2 = f(t + c2 * h, y + h * a21 * k1);
    const Vector<Scalar> k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vector<Scalar> k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector<Scalar> k5 =
        f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector<Scalar> k6 =
        f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vector<Scalar> y_new =
        y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vector<Scalar> k7 = f(t + h, y_new);

    if (!all_finite(y_new) || !all_finite(k7)) {
      if (++nonfinite_streak > 20)
        throw IntegrationError(IntegrationError::Kind::NonFinite, static_cast<double>(t),
                               "non-finite rhs");
      ++traj.stats.rejected;
      h *= fac_min;
      last_rejected = true;
      continue;
    }
    nonfinite_streak = 0;

    const Vector<Scalar> err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Scalar err = error_norm<Scalar>(err_vec, y, y_new, cfg.rtol, cfg.atol);

    if (err <= Scalar(1)) {
      const Scalar e = std::max(err, Scalar(1e-10));
      Scalar fac = safety * pow(e, -expo) * pow(err_prev, beta);
      fac = std::clamp(fac, fac_min, fac_max);
      if (last_rejected) fac = std::min(fac, Scalar(1));
      err_prev = e;
      t = final_step ? problem.t_end : t + h;
      y = y_new;
      k1 = k7;
      push_node(traj, t, y, k1);
      ++traj.stats.accepted;
      last_rejected = false;
      h = std::min(h * fac, cfg.h_max);
    } else {
      ++traj.stats.rejected;
      h *= std::max(fac_min, safety * pow(err, Scalar(-0.2)));
      last_rejected = true;
    }
  }
  return traj;
}

// Alexander's three-stage, third-order, stiffly accurate L-stable SDIRK.
template <typename Scalar>
struct Sdirk3 {
  static constexpr Scalar gamma = Scalar(0.43586652150845899941601945);
  static constexpr Scalar c2 = (1 + gamma) / 2;
  static constexpr Scalar a21 = (1 - gamma) / 2;
  static constexpr Scalar b1 = -(6 * gamma * gamma - 16 * gamma + 1) / 4;
  static constexpr Scalar b2 = (6 * gamma * gamma - 20 * gamma + 5) / 4;
};

template <typename Scalar>
class SdirkStepper {
 public:
  SdirkStepper(const Evaluator<Scalar>& f, const SolverConfig<Scalar>& cfg, Stats& stats)
      : f_(f), cfg_(cfg), stats_(stats) {
    newton_scale_ = std::min(cfg.rtol, Scalar(1e-10)) / cfg.rtol;
  }

  void set_jacobian(Scalar t, const Vector<Scalar>& y, const Vector<Scalar>& fy) {
    using std::abs;
    using std::sqrt;
    const Eigen::Index n = y.size();
    jac_.resize(n, n);
    const Scalar sq = sqrt(std::numeric_limits<Scalar>::epsilon());
    Vector<Scalar> yp = y;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar delta = sq * std::max(abs(y(j)), Scalar(1));
      yp(j) = y(j) + delta;
      jac_.col(j) = (f_(t, yp) - fy) / (yp(j) - y(j));
      yp(j) = y(j);
    }
    ++stats_.jacobian_evals;
  }

  // One step of size h; false when Newton fails to converge.
  bool step(Scalar t, const Vector<Scalar>& y, Scalar h, Vector<Scalar>& y_new,
            Vector<Scalar>& f_new) {
    using S = Sdirk3<Scalar>;
    const Eigen::Index n = y.size();
    const Matrix<Scalar> m = Matrix<Scalar>::Identity(n, n) - h * S::gamma * jac_;
    Eigen::PartialPivLU<Matrix<Scalar>> lu(m);

    Vector<Scalar> z1 = y, k1;
    if (!solve_stage(lu, t + S::gamma * h, y, h, z1, k1)) return false;
    Vector<Scalar> z2 = z1, k2;
    if (!solve_stage(lu, t + S::c2 * h, Vector<Scalar>(y + h * S::a21 * k1), h, z2, k2))
      return false;
    Vector<Scalar> z3 = z2, k3;
    if (!solve_stage(lu, t + h, Vector<Scalar>(y + h * (S::b1 * k1 + S::b2 * k2)), h, z3, k3))
      return false;
    y_new = z3;
    f_new = k3;
    return true;
  }

 private:
  bool solve_stage(const Eigen::PartialPivLU<Matrix<Scalar>>& lu, Scalar tc,
                   const Vector<Scalar>& base, Scalar h, Vector<Scalar>& z, Vector<Scalar>& k) {
    using std::abs;
    using S = Sdirk3<Scalar>;
    Scalar prev_norm = std::numeric_limits<Scalar>::infinity();
    for (int iter = 0; iter < 10; ++iter) {
      k = f_(tc, z);
      if (!all_finite(k)) return false;
      const Vector<Scalar> residual = z - base - h * S::gamma * k;
      const Vector<Scalar> delta = lu.solve(Vector<Scalar>(-residual));
      z += delta;
      if (!all_finite(z)) return false;
      const Scalar dnorm = error_norm<Scalar>(delta, z, z, cfg_.rtol, cfg_.atol);
      if (dnorm <= newton_scale_) {
        k = f_(tc, z);
        return all_finite(k);
      }
      if (iter >= 2 && dnorm > Scalar(0.9) * prev_norm) return false;
      prev_norm = dnorm;
    }
    return false;
  }

  const Evaluator<Scalar>& f_;
  const SolverConfig<Scalar>& cfg_;
  Stats& stats_;
  Matrix<Scalar> jac_;
  Scalar newton_scale_;
};

template <typename Scalar>
Trajectory<Scalar> integrate_sdirk(const Problem<Scalar>& problem,
                                   const SolverConfig<Scalar>& cfg) {
  using std::abs;
  using std::pow;
  Trajectory<Scalar> traj;
  Evaluator<Scalar> f(problem, traj.stats);
  SdirkStepper<Scalar> stepper(f, cfg, traj.stats);

  constexpr Scalar safety = Scalar(0.9), fac_min = Scalar(0.2), fac_max = Scalar(5);

  Scalar t = problem.t0;
  Vector<Scalar> y = problem.y0;
  Vector<Scalar> fy = f(t, y);
  if (!all_finite(fy))
    throw IntegrationError(IntegrationError::Kind::NonFinite, static_cast<double>(t),
                           "non-finite rhs at initial state");
  push_node(traj, t, y, fy);

  const Scalar span = problem.t_end - problem.t0;
  Scalar h = cfg.h_init > 0 ? std::min(cfg.h_init, cfg.h_max)
                            : initial_step(f, t, y, fy, 3, cfg, span);
  bool last_rejected = false;
  long steps = 0;
  Vector<Scalar> y_big, f_big, y_mid, f_mid, y_new, f_new;

  while (t < problem.t_end) {
    if (++steps > cfg.max_steps)
      throw IntegrationError(IntegrationError::Kind::MaxSteps, static_cast<double>(t),
                             "maximum number of steps exceeded");
    const Scalar remaining = problem.t_end - t;
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(abs(t), Scalar(1))) {
      const auto kind = traj.stats.newton_failures > 0 ? IntegrationError::Kind::NewtonDivergence
                                                      : IntegrationError::Kind::StepTooSmall;
      throw IntegrationError(kind, static_cast<double>(t),
                             kind == IntegrationError::Kind::NewtonDivergence
                                 ? "Newton iteration diverged"
                                 : "step size underflow");
    }

    stepper.set_jacobian(t, y, fy);
    const bool ok = stepper.step(t, y, h, y_big, f_big) &&
                    stepper.step(t, y, h / 2, y_mid, f_mid) &&
                    stepper.step(t + h / 2, y_mid, h / 2, y_new, f_new);
    if (!ok) {
      ++traj.stats.newton_failures;
      ++traj.stats.rejected;
      h /= 4;
      last_rejected = true;
      continue;
    }

    const Vector<Scalar> err_vec = (y_new - y_big) / Scalar(7);
    const Scalar err = error_norm<Scalar>(err_vec, y, y_new, cfg.rtol, cfg.atol);
    if (err <= Scalar(1)) {
      Scalar fac = safety * pow(std::max(err, Scalar(1e-10)), Scalar(-0.25));
      fac = std::clamp(fac, fac_min, fac_max);
      if (last_rejected) fac = std::min(fac, Scalar(1));
      const Scalar t_new = final_step ? problem.t_end : t + h;
      // local extrapolation of the two half steps
      Vector<Scalar> y_ext = y_new + err_vec;
      Vector<Scalar> f_ext = f(t_new, y_ext);
      if (!all_finite(f_ext)) {
        y_ext = y_new;
        f_ext = f_new;
      }
      t = t_new;
      y = y_ext;
      fy = f_ext;
      push_node(traj, t, y, fy);
      ++traj.stats.accepted;
      last_rejected = false;
      h = std::min(h * fac, cfg.h_max);
    } else {
      ++traj.stats.rejected;
      h *= std::max(fac_min, safety * pow(err, Scalar(-0.25)));
      last_rejected = true;
    }
  }
  return traj;
}

}  // namespace detail

/// Integrates `problem` over [t0, t_end]. Every accepted step satisfies the
/// local error bound atol + rtol*|y| componentwise.
template <typename Scalar>
Trajectory<Scalar> integrate(const Problem<Scalar>& problem, const SolverConfig<Scalar>& config) {
  config.validate();
  if (!(problem.t_end > problem.t0)) throw std::invalid_argument("t_end must exceed t0");
  if (problem.y0.size() == 0) throw std::invalid_argument("empty initial state");
  if (!problem.rhs) throw std::invalid_argument("missing rhs");
  // Local tolerances are tightened to rtol^(5/4) (atol keeps its ratio to
  // rtol) so that the global error falls faster than the requested tolerance.
  SolverConfig<Scalar> local = config;
  if (config.rtol < 1) {
    using std::pow;
    const Scalar shrink = pow(config.rtol, Scalar(0.25));
    local.rtol = config.rtol * shrink;
    local.atol = config.atol * shrink;
  }
  switch (config.method) {
    case Method::ExplicitAdaptive:
      return detail::integrate_dopri5(problem, local);
    case Method::ImplicitStiff:
      return detail::integrate_sdirk(problem, local);
  }
  throw std::invalid_argument("unknown method");
}

/// Cubic Hermite interpolation between stored nodes. Node times return the
/// stored state exactly.
template <typename Scalar>
Vector<Scalar> sample(const Trajectory<Scalar>& traj, Scalar t) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  if (t < traj.times.front() || t > traj.times.back())
    throw std::out_of_range("sample time outside trajectory span");
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  auto k = static_cast<std::size_t>(it - traj.times.begin());
  if (traj.times[k] == t) return traj.states[k];
  const std::size_t i = k - 1;
  const Scalar h = traj.times[k] - traj.times[i];
  const Scalar s = (t - traj.times[i]) / h;
  const Scalar s2 = s * s, s3 = s2 * s;
  const Scalar h00 = 2 * s3 - 3 * s2 + 1;
  const Scalar h10 = s3 - 2 * s2 + s;
  const Scalar h01 = -2 * s3 + 3 * s2;
  const Scalar h11 = s3 - s2;
  return h00 * traj.states[i] + h10 * h * traj.derivatives[i] + h01 * traj.states[k] +
         h11 * h * traj.derivatives[k];
}

template <typename Scalar>
std::vector<Vector<Scalar>> sample(const Trajectory<Scalar>& traj,
                                   const std::vector<Scalar>& times) {
  std::vector<Vector<Scalar>> out;
  out.reserve(times.size());
  for (Scalar t : times) out.push_back(sample(traj, t));
  return out;
}

}  // namespace mmcm::ode

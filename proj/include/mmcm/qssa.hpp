#pragma once

// Quasi-steady-state reductions: algebraic closures for the complex, the
// reduced one-dimensional dynamics, and the Newton root finder for the fast
// equation of a GeneralSP.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmcm/kinetics.hpp"
#include "mmcm/models.hpp"
#include "mmcm/ode.hpp"

namespace mmcm {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton failed to converge; carries the last iterate.
class RootNotConverged : public NumericalError {
 public:
  RootNotConverged(const std::string& what, double last_iterate)
      : NumericalError(what), last_iterate_(last_iterate) {}
  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

class SingularJacobian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// sQSSA closure C = E_T X/(X + K_M).
template <typename Scalar>
Scalar sqssa_complex(Scalar X, Scalar E_T, Scalar K_M) {
  if (X + K_M == 0) return 0;
  return E_T * X / (X + K_M);
}

/// Nondimensional sQSSA closure v = u/(kappa + u).
template <typename Scalar>
Scalar sqssa_v(Scalar u, Scalar kappa) {
  if (u + kappa == 0) return 0;
  return u / (kappa + u);
}

/// dX/dt = -V_max X/(X + K_M), V_max = k2 E_T.
template <typename Scalar>
Scalar sqssa_reduced_rhs(Scalar X, const Kinetics<Scalar>& kin) {
  return -kin.k2() * sqssa_complex(X, kin.E_T(), kin.K_M());
}

/// Smaller root C_- of C^2 - (E_T + K_M + Xbar) C + E_T Xbar = 0, evaluated
/// without cancellation as 2 E_T Xbar / (S + sqrt(S^2 - 4 E_T Xbar)).
template <typename Scalar>
Scalar cminus(Scalar Xbar, Scalar E_T, Scalar K_M) {
  using std::sqrt;
  const Scalar s = E_T + K_M + Xbar;
  const Scalar disc = s * s - 4 * E_T * Xbar;
  if (disc < 0) throw NumericalError("negative discriminant in C_- root");
  const Scalar denom = s + sqrt(disc);
  if (denom == 0) return 0;
  return 2 * E_T * Xbar / denom;
}

/// Residual of the quadratic defining C_-.
template <typename Scalar>
Scalar cminus_residual(Scalar C, Scalar Xbar, Scalar E_T, Scalar K_M) {
  return Xbar * E_T - (Xbar + E_T + K_M) * C + C * C;
}

/// dXbar/dt = -k2 C_-(Xbar).
template <typename Scalar>
Scalar tqssa_reduced_rhs(Scalar Xbar, const Kinetics<Scalar>& kin) {
  return -kin.k2() * cminus(Xbar, kin.E_T(), kin.K_M());
}

/// Nondimensional total-substrate root, in the same cancellation-free form.
/// With eta sigma = 0 it reduces to the linear root u/(eta + kappa_m + sigma u).
template <typename Scalar>
Scalar tq_root_nondim(Scalar u, const NondimTQ<Scalar>& p) {
  using std::sqrt;
  const Scalar bsum = p.eta + p.kappa_m + p.sigma * u;
  const Scalar disc = bsum * bsum - 4 * p.eta * p.sigma * u;
  if (disc < 0) throw NumericalError("negative discriminant in nondimensional root");
  const Scalar denom = bsum + sqrt(disc);
  if (denom == 0) return 0;
  return 2 * u / denom;
}

template <typename Scalar = double>
struct RootResult {
  Scalar value;     // root in the w-frame
  Scalar v;         // the same root in the original fast coordinate
  Scalar residual;  // g at the root
  Scalar slope;     // dg/dw at the root
  bool stable;      // dg/dw < 0
  int iterations;
};

namespace detail {

template <typename Scalar>
RootResult<Scalar> newton_root(const GeneralSP<Scalar>& sys, Scalar u, Scalar v0) {
  using std::abs;
  using std::max;
  Scalar w = sys.to_w(u, v0);

  auto g = [&](Scalar ww) { return sys.fast_w(u, ww, Scalar(0)); };
  auto dg = [&](Scalar ww) {
    // b + psi_v(u, v) by a central difference in v.
    const Scalar v = sys.v_from_w(u, ww);
    const Scalar dv = Scalar(1e-6) * max(Scalar(1), abs(v));
    return sys.b() + (sys.psi(u, v + dv) - sys.psi(u, v - dv)) / (2 * dv);
  };

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int it = 1; it <= 50; ++it) {
    const Scalar r = g(w);
    const Scalar d = dg(w);
    if (!std::isfinite(static_cast<double>(r)) || !std::isfinite(static_cast<double>(d)))
      throw RootNotConverged("non-finite value in Newton iteration", static_cast<double>(w));
    if (abs(d) <= Scalar(1e-8) * abs(sys.b()))  // above the difference-quotient noise
      throw SingularJacobian("derivative of the fast equation vanishes near the root");
    const Scalar step = r / d;
    w -= step;
    const Scalar scale = max(abs(w), abs(sys.a() * u));
    if (r == 0 || abs(step) <= 64 * eps * scale || scale == 0) {
      const Scalar slope = dg(w);
      return RootResult<Scalar>{w, sys.v_from_w(u, w), g(w), slope, slope < 0, it};
    }
  }
  throw RootNotConverged("Newton iteration did not converge in 50 iterations",
                         static_cast<double>(w));
}

}  // namespace detail

/// Newton iteration on the eps = 0 fast equation b w + b psi(u, (w - a u)/b) = 0.
/// `v_guess` defaults to the linearised root -a u/b; if that start lands on an
/// unstable root, the iteration is repeated from v = 0.
template <typename Scalar>
RootResult<Scalar> tihonov_root(const GeneralSP<Scalar>& sys, Scalar u,
                                std::optional<Scalar> v_guess = std::nullopt) {
  if (v_guess) return detail::newton_root(sys, u, *v_guess);
  auto r = detail::newton_root(sys, u, -sys.a() * u / sys.b());
  if (r.stable) return r;
  try {
    auto alt = detail::newton_root(sys, u, Scalar(0));
    if (alt.stable) return alt;
  } catch (const NumericalError&) {
  }
  return r;
}

enum class ReductionKind { Standard, Total, General };

inline const char* to_string(ReductionKind k) {
  switch (k) {
    case ReductionKind::Standard: return "sQSSA";
    case ReductionKind::Total: return "tQSSA";
    case ReductionKind::General: return "general";
  }
  return "?";
}

template <typename Scalar = double>
struct ReducedSolution {
  ReductionKind kind;
  ode::Trajectory<Scalar> slow;  // one-dimensional
  std::vector<Scalar> fast;      // closure value at every slow sample
  std::optional<Kinetics<Scalar>> kinetics;
};

/// Integrates the sQSSA (slow variable X) or tQSSA (slow variable Xbar)
/// reduced equation from X0 and reconstructs C from the closure.
template <typename Scalar>
ReducedSolution<Scalar> solve_reduced(ReductionKind kind, const Kinetics<Scalar>& kin, Scalar X0,
                                      Scalar T, const ode::SolverConfig<Scalar>& config) {
  if (kind == ReductionKind::General)
    throw std::invalid_argument("general reduction needs a GeneralSP");
  if (!(X0 >= 0) || X0 > kin.X_T()) throw ValidationError("X0 must lie in [0, X_T]");
  ode::Problem<Scalar> pb;
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>::Constant(1, X0);
  if (kind == ReductionKind::Standard) {
    pb.rhs = [kin](Scalar, const ode::Vector<Scalar>& y) {
      return ode::Vector<Scalar>::Constant(1, sqssa_reduced_rhs(y(0), kin));
    };
  } else {
    pb.rhs = [kin](Scalar, const ode::Vector<Scalar>& y) {
      return ode::Vector<Scalar>::Constant(1, tqssa_reduced_rhs(y(0), kin));
    };
  }
  ReducedSolution<Scalar> out{kind, ode::integrate(pb, config), {}, kin};
  out.fast.reserve(out.slow.size());
  for (const auto& s : out.slow.states) {
    out.fast.push_back(kind == ReductionKind::Standard ? sqssa_complex(s(0), kin.E_T(), kin.K_M())
                                                       : cminus(s(0), kin.E_T(), kin.K_M()));
  }
  return out;
}

/// Reduced problem du/dtau = phi(u, root(u)) of a GeneralSP, fast variable on the root.
template <typename Scalar>
ReducedSolution<Scalar> solve_reduced(const GeneralSP<Scalar>& sys, Scalar u0, Scalar T,
                                      const ode::SolverConfig<Scalar>& config) {
  ode::Problem<Scalar> pb;
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>::Constant(1, u0);
  pb.rhs = [sys](Scalar, const ode::Vector<Scalar>& y) {
    const Scalar v = tihonov_root(sys, y(0)).v;
    return ode::Vector<Scalar>::Constant(1, sys.phi(y(0), v));
  };
  ReducedSolution<Scalar> out{ReductionKind::General, ode::integrate(pb, config), {}, std::nullopt};
  out.fast.reserve(out.slow.size());
  for (const auto& s : out.slow.states) out.fast.push_back(tihonov_root(sys, s(0)).v);
  return out;
}

}  // namespace mmcm

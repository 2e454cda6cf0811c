#pragma once

// Dimensional and nondimensional parameter bundles for the single-substrate
// Michaelis-Menten scheme X + E <-> C -> X_p + E.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "mmcm/ode.hpp"

namespace mmcm {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar = double>
struct RateConstants {
  Scalar k1;        // 1/(concentration*time)
  Scalar k_minus1;  // 1/time
  Scalar k2;        // 1/time

  bool operator==(const RateConstants&) const = default;
};

template <typename Scalar = double>
struct Totals {
  Scalar E_T;
  Scalar X_T;

  bool operator==(const Totals&) const = default;
};

template <typename Scalar = double>
struct DerivedConstants {
  Scalar K_M;      // Michaelis constant (k_-1 + k2)/k1
  Scalar K_D;      // dissociation constant k_-1/k1
  Scalar K;        // Van Slyke-Cullen constant k2/k1
  Scalar eps_HTA;  // E_T/X_T
  Scalar eps_SS;   // E_T/(X_T + K_M)
  Scalar eps_TQ;   // K E_T/(E_T + K_M + X_T)^2, never above 1/4
};

namespace detail {

template <typename Scalar>
void require_positive(Scalar value, const char* name) {
  if (!std::isfinite(static_cast<double>(value)) || !(value > 0))
    throw ValidationError(std::string(name) + " must be finite and strictly positive");
}

}  // namespace detail

template <typename Scalar>
void validate(const RateConstants<Scalar>& r) {
  detail::require_positive(r.k1, "k1");
  detail::require_positive(r.k_minus1, "k_minus1");
  detail::require_positive(r.k2, "k2");
}

template <typename Scalar>
void validate(const Totals<Scalar>& t) {
  detail::require_positive(t.E_T, "E_T");
  detail::require_positive(t.X_T, "X_T");
}

template <typename Scalar>
DerivedConstants<Scalar> derive_constants(const RateConstants<Scalar>& rates,
                                          const Totals<Scalar>& totals) {
  validate(rates);
  validate(totals);
  DerivedConstants<Scalar> d;
  d.K_M = (rates.k_minus1 + rates.k2) / rates.k1;
  d.K_D = rates.k_minus1 / rates.k1;
  d.K = rates.k2 / rates.k1;
  d.eps_HTA = totals.E_T / totals.X_T;
  d.eps_SS = totals.E_T / (totals.X_T + d.K_M);
  const Scalar s = totals.E_T + d.K_M + totals.X_T;
  d.eps_TQ = d.K * totals.E_T / (s * s);
  return d;
}

/// Validated rates and totals together with their derived constants. The
/// derived set is computed once here and every consumer reads it from here.
template <typename Scalar = double>
class Kinetics {
 public:
  Kinetics(const RateConstants<Scalar>& rates, const Totals<Scalar>& totals)
      : rates_(rates), totals_(totals), derived_(derive_constants(rates, totals)) {}

  const RateConstants<Scalar>& rates() const { return rates_; }
  const Totals<Scalar>& totals() const { return totals_; }
  const DerivedConstants<Scalar>& derived() const { return derived_; }

  Scalar k1() const { return rates_.k1; }
  Scalar k_minus1() const { return rates_.k_minus1; }
  Scalar k2() const { return rates_.k2; }
  Scalar E_T() const { return totals_.E_T; }
  Scalar X_T() const { return totals_.X_T; }
  Scalar K_M() const { return derived_.K_M; }

  bool same_parameters(const Kinetics& other) const {
    return rates_ == other.rates_ && totals_ == other.totals_;
  }

 private:
  RateConstants<Scalar> rates_;
  Totals<Scalar> totals_;
  DerivedConstants<Scalar> derived_;
};

/// Heineken-Tsuchiya-Aris scaling: u = X/X_T, v = C/E_T, tau = k1 E_T t.
template <typename Scalar = double>
struct NondimHTA {
  Scalar kappa;   // K_M/X_T
  Scalar lambda;  // k2/(k1 X_T)
  Scalar eps;     // E_T/X_T
  Scalar t_per_tau = 1;
  Scalar X_scale = 1;
  Scalar C_scale = 1;

  /// Purely nondimensional bundle (unit scales).
  static NondimHTA from_values(Scalar kappa, Scalar lambda, Scalar eps) {
    detail::require_positive(kappa, "kappa");
    detail::require_positive(lambda, "lambda");
    detail::require_positive(eps, "eps");
    if (!(kappa > lambda)) throw ValidationError("kappa must exceed lambda");
    return NondimHTA{kappa, lambda, eps};
  }
};

/// Total-substrate scaling: u = Xbar/X_T, C = v E_T X_T/S,
/// tau = t k2 E_T/S with S = E_T + K_M + X_T.
template <typename Scalar = double>
struct NondimTQ {
  Scalar sigma;    // X_T/S
  Scalar eta;      // E_T/S
  Scalar kappa_m;  // K_M/S
  Scalar eps;      // K E_T/S^2
  Scalar t_per_tau = 1;
  Scalar X_scale = 1;
  Scalar C_scale = 1;

  /// From the three fractions, which must be in (0,1) and sum to one.
  static NondimTQ from_values(Scalar sigma, Scalar eta, Scalar kappa_m, Scalar eps) {
    detail::require_positive(sigma, "sigma");
    detail::require_positive(eta, "eta");
    detail::require_positive(kappa_m, "kappa_m");
    detail::require_positive(eps, "eps");
    using std::abs;
    if (abs(sigma + eta + kappa_m - 1) > Scalar(1e-12))
      throw ValidationError("sigma + eta + kappa_m must equal 1");
    return NondimTQ{sigma, eta, kappa_m, eps};
  }
};

template <typename Scalar>
NondimHTA<Scalar> nondim_hta(const Kinetics<Scalar>& kin) {
  NondimHTA<Scalar> p;
  p.kappa = kin.K_M() / kin.X_T();
  p.lambda = kin.k2() / (kin.k1() * kin.X_T());
  p.eps = kin.derived().eps_HTA;
  p.t_per_tau = 1 / (kin.k1() * kin.E_T());
  p.X_scale = kin.X_T();
  p.C_scale = kin.E_T();
  return p;
}

template <typename Scalar>
NondimTQ<Scalar> nondim_tq(const Kinetics<Scalar>& kin) {
  const Scalar s = kin.E_T() + kin.K_M() + kin.X_T();
  NondimTQ<Scalar> p;
  p.sigma = kin.X_T() / s;
  p.eta = kin.E_T() / s;
  p.kappa_m = kin.K_M() / s;
  p.eps = kin.derived().eps_TQ;
  p.t_per_tau = s / (kin.k2() * kin.E_T());
  p.X_scale = kin.X_T();
  p.C_scale = kin.E_T() * kin.X_T() / s;
  return p;
}

template <typename Scalar>
NondimHTA<Scalar> nondim_hta(const RateConstants<Scalar>& rates, const Totals<Scalar>& totals) {
  return nondim_hta(Kinetics<Scalar>(rates, totals));
}

template <typename Scalar>
NondimTQ<Scalar> nondim_tq(const RateConstants<Scalar>& rates, const Totals<Scalar>& totals) {
  return nondim_tq(Kinetics<Scalar>(rates, totals));
}

/// A point (t, slow, fast) in dimensional or scaled units.
template <typename Scalar>
struct ScaledPoint {
  Scalar time;
  Scalar slow;  // X (HTA) or Xbar (TQ)
  Scalar fast;  // C
};

template <typename P, typename Scalar>
ScaledPoint<Scalar> to_dimensional(const P& p, const ScaledPoint<Scalar>& q) {
  return {q.time * p.t_per_tau, q.slow * p.X_scale, q.fast * p.C_scale};
}

template <typename P, typename Scalar>
ScaledPoint<Scalar> to_nondimensional(const P& p, const ScaledPoint<Scalar>& q) {
  return {q.time / p.t_per_tau, q.slow / p.X_scale, q.fast / p.C_scale};
}

/// Worst-case violations of X + C + X_p = X_T and E + C = E_T.
///
/// Two-component states (X, C) reconstruct X_p = X_T - X - C and E = E_T - C;
/// three components carry (X, C, X_p); four carry (X, C, X_p, E).
template <typename Scalar>
std::pair<Scalar, Scalar> conservation_residuals(const ode::Trajectory<Scalar>& traj,
                                                 const Kinetics<Scalar>& kin) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  using std::abs;
  Scalar substrate = 0, enzyme = 0;
  for (const auto& s : traj.states) {
    if (s.size() < 2 || s.size() > 4)
      throw std::invalid_argument("trajectory states must have 2 to 4 components");
    const Scalar x = s(0), c = s(1);
    const Scalar xp = s.size() >= 3 ? s(2) : kin.X_T() - x - c;
    const Scalar e = s.size() == 4 ? s(3) : kin.E_T() - c;
    substrate = std::max(substrate, abs(x + c + xp - kin.X_T()));
    enzyme = std::max(enzyme, abs(e + c - kin.E_T()));
  }
  return {substrate, enzyme};
}

}  // namespace mmcm

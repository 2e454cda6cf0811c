#pragma once

// Right-hand sides of the enzyme kinetics systems and the general singularly
// perturbed container
//
//   du/ds = eps * phi(u, v)
//   dv/ds = a u + b v + psi(u, v),   b < 0
//
// with its block-diagonalising coordinate w = a u + b v.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "mmcm/kinetics.hpp"
#include "mmcm/ode.hpp"

namespace mmcm {

template <typename Scalar = double>
struct StateMM {
  Scalar X;
  Scalar C;
};

template <typename Scalar = double>
struct StateLumped {
  Scalar Xbar;
  Scalar C;
};

/// Outer frame uses tau; inner frame uses the stretched time s = tau/eps.
enum class TimeFrame { Outer, Inner };

template <typename Scalar>
Vec2<Scalar> rhs_full_mm(const StateMM<Scalar>& s, const Kinetics<Scalar>& kin) {
  const Scalar bind = kin.k1() * s.X * (kin.E_T() - s.C);
  return {-bind + kin.k_minus1() * s.C, bind - kin.k1() * kin.K_M() * s.C};
}

template <typename Scalar>
Vec2<Scalar> rhs_lumped(const StateLumped<Scalar>& s, const Kinetics<Scalar>& kin) {
  const Scalar g = s.Xbar * kin.E_T() - (s.Xbar + kin.E_T() + kin.K_M()) * s.C + s.C * s.C;
  return {-kin.k2() * s.C, kin.k1() * g};
}

/// Mass-action kinetics of all four species (X, C, X_p, E), without using the
/// conservation laws.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> rhs_species(const Eigen::Matrix<Scalar, 4, 1>& y,
                                        const Kinetics<Scalar>& kin) {
  const Scalar bind = kin.k1() * y(0) * y(3);
  const Scalar unbind = kin.k_minus1() * y(1);
  const Scalar cat = kin.k2() * y(1);
  Eigen::Matrix<Scalar, 4, 1> dy;
  dy << -bind + unbind, bind - unbind - cat, cat, -bind + unbind + cat;
  return dy;
}

/// (du, dv) per unit tau (outer) or per unit s (inner). Inner = eps * outer.
template <typename Scalar>
Vec2<Scalar> rhs_hta(Scalar u, Scalar v, const NondimHTA<Scalar>& p, TimeFrame frame) {
  const Scalar slow = -u + (u + p.kappa - p.lambda) * v;
  const Scalar fast = u - (u + p.kappa) * v;
  if (frame == TimeFrame::Inner) return {p.eps * slow, fast};
  return {slow, fast / p.eps};
}

template <typename Scalar>
Vec2<Scalar> rhs_tq(Scalar u, Scalar v, const NondimTQ<Scalar>& p, TimeFrame frame) {
  const Scalar slow = -v;
  const Scalar fast =
      p.eta * p.sigma * v * v - (p.eta + p.kappa_m) * v - p.sigma * u * v + u;
  if (frame == TimeFrame::Inner) return {p.eps * slow, fast};
  return {slow, fast / p.eps};
}

template <typename Scalar = double>
class GeneralSP {
 public:
  using Fn = std::function<Scalar(Scalar, Scalar)>;

  Scalar a() const { return a_; }
  Scalar b() const { return b_; }
  Scalar phi(Scalar u, Scalar v) const { return phi_(u, v); }
  Scalar psi(Scalar u, Scalar v) const { return psi_(u, v); }

  /// g(u, v) = a u + b v + psi(u, v).
  Scalar fast(Scalar u, Scalar v) const { return a_ * u + b_ * v + psi_(u, v); }

  Vec2<Scalar> rhs(Scalar u, Scalar v, Scalar eps, TimeFrame frame) const {
    const Scalar slow = phi_(u, v);
    const Scalar g = fast(u, v);
    if (frame == TimeFrame::Inner) return {eps * slow, g};
    return {slow, g / eps};
  }

  Scalar to_w(Scalar u, Scalar v) const { return a_ * u + b_ * v; }
  Scalar v_from_w(Scalar u, Scalar w) const { return (w - a_ * u) / b_; }

  /// Fast equation in the w-frame: b w + a eps phi + b psi.
  Scalar fast_w(Scalar u, Scalar w, Scalar eps) const {
    const Scalar v = v_from_w(u, w);
    return b_ * w + a_ * eps * phi_(u, v) + b_ * psi_(u, v);
  }

  /// Inner-time field (du/ds, dw/ds) of the w-frame system.
  Vec2<Scalar> rhs_w(Scalar u, Scalar w, Scalar eps) const {
    const Scalar v = v_from_w(u, w);
    return {eps * phi_(u, v), b_ * w + a_ * eps * phi_(u, v) + b_ * psi_(u, v)};
  }

  template <typename S>
  friend GeneralSP<S> make_general_sp(S a, S b, typename GeneralSP<S>::Fn phi,
                                      typename GeneralSP<S>::Fn psi);

 private:
  GeneralSP(Scalar a, Scalar b, Fn phi, Fn psi)
      : a_(a), b_(b), phi_(std::move(phi)), psi_(std::move(psi)) {}

  Scalar a_;
  Scalar b_;
  Fn phi_;
  Fn psi_;
};

/// Builds a GeneralSP after checking b < 0, phi(0,0) = psi(0,0) = 0 and
/// psi_u(0,0) = psi_v(0,0) = 0 (central differences, spacing 1e-5, tol 1e-8).
template <typename Scalar>
GeneralSP<Scalar> make_general_sp(Scalar a, Scalar b, typename GeneralSP<Scalar>::Fn phi,
                                  typename GeneralSP<Scalar>::Fn psi) {
  using std::abs;
  if (!std::isfinite(static_cast<double>(a))) throw ValidationError("a must be finite");
  if (!(b < 0) || !std::isfinite(static_cast<double>(b)))
    throw ValidationError("b must be finite and negative");
  if (!phi || !psi) throw ValidationError("phi and psi must be callable");

  const Scalar h = Scalar(1e-5), tol = Scalar(1e-8);
  const Scalar phi0 = phi(0, 0), psi0 = psi(0, 0);
  if (!(abs(phi0) <= tol)) throw ValidationError("condition phi(0,0) = 0 violated");
  if (!(abs(psi0) <= tol)) throw ValidationError("condition psi(0,0) = 0 violated");
  const Scalar psi_u = (psi(h, 0) - psi(-h, 0)) / (2 * h);
  if (!(abs(psi_u) <= tol)) throw ValidationError("condition psi_u(0,0) = 0 violated");
  const Scalar psi_v = (psi(0, h) - psi(0, -h)) / (2 * h);
  if (!(abs(psi_v) <= tol)) throw ValidationError("condition psi_v(0,0) = 0 violated");
  return GeneralSP<Scalar>(a, b, std::move(phi), std::move(psi));
}

/// HTA system as a GeneralSP: a = 1, b = -kappa, psi = -u v.
template <typename Scalar>
GeneralSP<Scalar> hta_system(const NondimHTA<Scalar>& p) {
  const Scalar kappa = p.kappa, lambda = p.lambda;
  return make_general_sp<Scalar>(
      Scalar(1), -kappa,
      [kappa, lambda](Scalar u, Scalar v) { return -u + (u + kappa - lambda) * v; },
      [](Scalar u, Scalar v) { return -u * v; });
}

/// Total-substrate system as a GeneralSP: a = 1, b = -(eta + kappa_m),
/// psi = eta sigma v^2 - sigma u v.
template <typename Scalar>
GeneralSP<Scalar> tq_system(const NondimTQ<Scalar>& p) {
  const Scalar sigma = p.sigma, eta = p.eta;
  return make_general_sp<Scalar>(
      Scalar(1), -(p.eta + p.kappa_m), [](Scalar, Scalar v) { return -v; },
      [sigma, eta](Scalar u, Scalar v) { return eta * sigma * v * v - sigma * u * v; });
}

// ODE problem factories.

template <typename Scalar>
ode::Problem<Scalar> full_problem(const Kinetics<Scalar>& kin, Scalar X0, Scalar C0, Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [kin](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(rhs_full_mm(StateMM<Scalar>{y(0), y(1)}, kin));
  };
  pb.t0 = 0;
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(2);
  pb.y0 << X0, C0;
  return pb;
}

template <typename Scalar>
ode::Problem<Scalar> lumped_problem(const Kinetics<Scalar>& kin, Scalar Xbar0, Scalar C0,
                                    Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [kin](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(rhs_lumped(StateLumped<Scalar>{y(0), y(1)}, kin));
  };
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(2);
  pb.y0 << Xbar0, C0;
  return pb;
}

/// Four-species problem starting from (X_T, 0, 0, E_T).
template <typename Scalar>
ode::Problem<Scalar> species_problem(const Kinetics<Scalar>& kin, Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [kin](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(rhs_species(Eigen::Matrix<Scalar, 4, 1>(y), kin));
  };
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(4);
  pb.y0 << kin.X_T(), 0, 0, kin.E_T();
  return pb;
}

template <typename Scalar>
ode::Problem<Scalar> hta_problem(const NondimHTA<Scalar>& p, TimeFrame frame, Scalar u0,
                                 Scalar v0, Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [p, frame](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(rhs_hta(y(0), y(1), p, frame));
  };
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(2);
  pb.y0 << u0, v0;
  return pb;
}

template <typename Scalar>
ode::Problem<Scalar> tq_problem(const NondimTQ<Scalar>& p, TimeFrame frame, Scalar u0,
                                Scalar v0, Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [p, frame](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(rhs_tq(y(0), y(1), p, frame));
  };
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(2);
  pb.y0 << u0, v0;
  return pb;
}

template <typename Scalar>
ode::Problem<Scalar> general_problem(const GeneralSP<Scalar>& sys, Scalar eps, TimeFrame frame,
                                     Scalar u0, Scalar v0, Scalar T) {
  ode::Problem<Scalar> pb;
  pb.rhs = [sys, eps, frame](Scalar, const ode::Vector<Scalar>& y) {
    return ode::Vector<Scalar>(sys.rhs(y(0), y(1), eps, frame));
  };
  pb.t_end = T;
  pb.y0 = ode::Vector<Scalar>(2);
  pb.y0 << u0, v0;
  return pb;
}

}  // namespace mmcm

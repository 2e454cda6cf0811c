#pragma once

// Second-order center manifold w = h(u, eps) = l1 u^2 + l2 u eps + l3 eps^2
// of the w-frame system
//
//   du/ds = eps phi(u, v)
//   dw/ds = b w + a eps phi(u, v) + b psi(u, v),   v = (w - a u)/b,
//
// together with the invariance residual, reduced fields and reconstruction of
// the fast variable.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mmcm/fit.hpp"
#include "mmcm/kinetics.hpp"
#include "mmcm/models.hpp"
#include "mmcm/qssa.hpp"

namespace mmcm {

/// First partials of phi and second partials of psi, all at the origin.
template <typename Scalar = double>
struct PartialDerivs {
  Scalar phi_u = 0;
  Scalar phi_v = 0;
  Scalar psi_uu = 0;
  Scalar psi_uv = 0;
  Scalar psi_vv = 0;
};

template <typename Scalar = double>
struct ManifoldCoeffs {
  Scalar lambda1 = 0;
  Scalar lambda2 = 0;
  Scalar lambda3 = 0;  // forced to zero by the second-order balance
  Scalar a = 1;
  Scalar b = -1;
};

template <typename Scalar>
ManifoldCoeffs<Scalar> coeffs_general(const PartialDerivs<Scalar>& p, Scalar a, Scalar b) {
  if (!(b < 0)) throw ValidationError("b must be negative");
  const Scalar r = a / b;
  ManifoldCoeffs<Scalar> c;
  c.lambda1 = -Scalar(0.5) * (p.psi_uu - 2 * r * p.psi_uv + r * r * p.psi_vv);
  c.lambda2 = -r * (p.phi_u - r * p.phi_v);
  c.lambda3 = 0;
  c.a = a;
  c.b = b;
  return c;
}

/// HTA closed form: (1/kappa, -lambda/kappa^2, 0) with w = u - kappa v.
template <typename Scalar>
ManifoldCoeffs<Scalar> coeffs_closed_form(const NondimHTA<Scalar>& p) {
  ManifoldCoeffs<Scalar> c;
  c.lambda1 = 1 / p.kappa;
  c.lambda2 = -p.lambda / (p.kappa * p.kappa);
  c.lambda3 = 0;
  c.a = 1;
  c.b = -p.kappa;
  return c;
}

/// Total-substrate closed form: (sigma kappa_m/m^2, -1/m^2, 0), m = eta + kappa_m.
template <typename Scalar>
ManifoldCoeffs<Scalar> coeffs_closed_form(const NondimTQ<Scalar>& p) {
  const Scalar m = p.eta + p.kappa_m;
  ManifoldCoeffs<Scalar> c;
  c.lambda1 = p.sigma * p.kappa_m / (m * m);
  c.lambda2 = -1 / (m * m);
  c.lambda3 = 0;
  c.a = 1;
  c.b = -m;
  return c;
}

template <typename Scalar>
PartialDerivs<Scalar> analytic_partials(const NondimHTA<Scalar>& p) {
  return PartialDerivs<Scalar>{-1, p.kappa - p.lambda, 0, -1, 0};
}

template <typename Scalar>
PartialDerivs<Scalar> analytic_partials(const NondimTQ<Scalar>& p) {
  return PartialDerivs<Scalar>{0, -1, 0, -p.sigma, 2 * p.eta * p.sigma};
}

namespace detail {

// Richardson extrapolation of a central-difference estimate whose error
// expands in even powers of the spacing.
template <typename Scalar, typename Estimate>
Scalar richardson(Estimate&& estimate, Scalar h0, int levels) {
  std::vector<std::vector<Scalar>> table(static_cast<std::size_t>(levels));
  Scalar h = h0;
  for (int i = 0; i < levels; ++i, h /= 2) {
    auto& row = table[static_cast<std::size_t>(i)];
    row.push_back(estimate(h));
    if (!std::isfinite(static_cast<double>(row[0])))
      throw NumericalError("non-finite sample while estimating partial derivatives");
    Scalar factor = 1;
    for (int k = 1; k <= i; ++k) {
      factor *= 4;
      const auto& prev = table[static_cast<std::size_t>(i - 1)];
      row.push_back(row[static_cast<std::size_t>(k - 1)] +
                    (row[static_cast<std::size_t>(k - 1)] - prev[static_cast<std::size_t>(k - 1)]) /
                        (factor - 1));
    }
  }
  return table.back().back();
}

}  // namespace detail

/// Numerical partials at the origin by central differences with Richardson
/// extrapolation (spacings 0.1 down to 0.0125).
template <typename Scalar>
PartialDerivs<Scalar> estimate_partials(const GeneralSP<Scalar>& sys) {
  const Scalar h0 = Scalar(0.1);
  constexpr int levels = 4;
  auto phi = [&](Scalar u, Scalar v) { return sys.phi(u, v); };
  auto psi = [&](Scalar u, Scalar v) { return sys.psi(u, v); };
  PartialDerivs<Scalar> d;
  d.phi_u = detail::richardson<Scalar>(
      [&](Scalar h) { return (phi(h, 0) - phi(-h, 0)) / (2 * h); }, h0, levels);
  d.phi_v = detail::richardson<Scalar>(
      [&](Scalar h) { return (phi(0, h) - phi(0, -h)) / (2 * h); }, h0, levels);
  d.psi_uu = detail::richardson<Scalar>(
      [&](Scalar h) { return (psi(h, 0) - 2 * psi(0, 0) + psi(-h, 0)) / (h * h); }, h0, levels);
  d.psi_vv = detail::richardson<Scalar>(
      [&](Scalar h) { return (psi(0, h) - 2 * psi(0, 0) + psi(0, -h)) / (h * h); }, h0, levels);
  d.psi_uv = detail::richardson<Scalar>(
      [&](Scalar h) {
        return (psi(h, h) - psi(h, -h) - psi(-h, h) + psi(-h, -h)) / (4 * h * h);
      },
      h0, levels);
  return d;
}

template <typename Scalar>
Scalar manifold_h(const ManifoldCoeffs<Scalar>& c, Scalar u, Scalar eps) {
  return c.lambda1 * u * u + c.lambda2 * u * eps + c.lambda3 * eps * eps;
}

/// v = (h(u, eps) - a u)/b.
template <typename Scalar>
Scalar reconstruct_v(const ManifoldCoeffs<Scalar>& c, Scalar u, Scalar eps) {
  if (u == 0) return 0;
  return (manifold_h(c, u, eps) - c.a * u) / c.b;
}

/// Heuristic radius in u inside which the truncated expansion is trusted.
template <typename Scalar>
Scalar validity_radius(const ManifoldCoeffs<Scalar>& c) {
  using std::abs;
  return std::min(Scalar(1), abs(c.b) / (2 * std::max(abs(c.lambda1), Scalar(1))));
}

template <typename Scalar = double>
struct ManifoldPoint {
  Scalar w;
  Scalar v;
  bool within_radius;  // false: outside validity_radius, treat as a warning
};

template <typename Scalar>
ManifoldPoint<Scalar> evaluate_manifold(const ManifoldCoeffs<Scalar>& c, Scalar u, Scalar eps) {
  using std::abs;
  return {manifold_h(c, u, eps), reconstruct_v(c, u, eps), abs(u) <= validity_radius(c)};
}

/// Invariance residual D_u h (eps phi) - b h - (a eps phi + b psi), evaluated
/// along the candidate manifold. The D_u h term is kept in full.
template <typename Scalar>
Scalar manifold_residual(const GeneralSP<Scalar>& sys, const ManifoldCoeffs<Scalar>& c, Scalar u,
                         Scalar eps) {
  const Scalar h = manifold_h(c, u, eps);
  const Scalar dh_du = 2 * c.lambda1 * u + c.lambda2 * eps;
  const Scalar v = sys.v_from_w(u, h);
  const Scalar slow = eps * sys.phi(u, v);
  return dh_du * slow - sys.b() * h - sys.a() * slow - sys.b() * sys.psi(u, v);
}

template <typename Scalar = double>
struct ResidualScaling {
  std::vector<Scalar> rho;
  std::vector<Scalar> residual;  // |N(h)| at (u, eps) = (rho, rho)
  Scalar slope;
};

template <typename Scalar>
ResidualScaling<Scalar> residual_scaling(const GeneralSP<Scalar>& sys,
                                         const ManifoldCoeffs<Scalar>& c,
                                         const std::vector<Scalar>& rhos) {
  ResidualScaling<Scalar> out;
  out.rho = rhos;
  for (Scalar r : rhos) {
    using std::abs;
    out.residual.push_back(abs(manifold_residual(sys, c, r, r)));
  }
  out.slope = loglog_slope<Scalar>(out.rho, out.residual);
  return out;
}

/// Log-spaced grid of n points from lo to hi inclusive.
template <typename Scalar>
std::vector<Scalar> log_grid(Scalar lo, Scalar hi, int n) {
  using std::log;
  using std::exp;
  std::vector<Scalar> g;
  for (int i = 0; i < n; ++i)
    g.push_back(exp(log(lo) + (log(hi) - log(lo)) * Scalar(i) / Scalar(n - 1)));
  return g;
}

/// du/dtau = -(b/a) l2 u + (l1 u^2 + l2 u eps) phi_v/b. Nonlinear terms of phi
/// beyond first order are not represented.
template <typename Scalar>
Scalar reduced_field(const PartialDerivs<Scalar>& p, const ManifoldCoeffs<Scalar>& c, Scalar u,
                     Scalar eps) {
  if (c.a == 0) throw ValidationError("reduced field requires a != 0");
  return -(c.b / c.a) * c.lambda2 * u +
         (c.lambda1 * u * u + c.lambda2 * u * eps) * p.phi_v / c.b;
}

template <typename Scalar>
Scalar reduced_field(const GeneralSP<Scalar>& sys, const ManifoldCoeffs<Scalar>& c, Scalar u,
                     Scalar eps) {
  return reduced_field(estimate_partials(sys), c, u, eps);
}

/// phi(u, v) evaluated on the manifold, without truncating phi.
template <typename Scalar>
Scalar reduced_field_on_manifold(const GeneralSP<Scalar>& sys, const ManifoldCoeffs<Scalar>& c,
                                 Scalar u, Scalar eps) {
  return sys.phi(u, sys.v_from_w(u, manifold_h(c, u, eps)));
}

/// HTA reduced field to second order: (lambda/kappa) u [-1 + u/kappa - (eps/kappa)(lambda/kappa - 1)].
template <typename Scalar>
Scalar reduced_field_hta(const NondimHTA<Scalar>& p, Scalar u) {
  const Scalar k = p.kappa, l = p.lambda;
  return (l / k) * u * (-1 + u / k - (p.eps / k) * (-1 + l / k));
}

/// Total-substrate reduced field: (u/m) [-1 + sigma kappa_m u/m^2 - eps/m^2].
template <typename Scalar>
Scalar reduced_field_tq(const NondimTQ<Scalar>& p, Scalar u) {
  const Scalar m = p.eta + p.kappa_m;
  return (u / m) * (-1 + p.sigma * p.kappa_m * u / (m * m) - p.eps / (m * m));
}

template <typename Scalar = double>
struct AsymptoticReport {
  std::vector<Scalar> u;
  std::vector<Scalar> v_manifold;
  std::vector<Scalar> v_root;
  std::vector<Scalar> difference;  // |v_manifold - v_root|
  std::vector<Scalar> ratio;       // difference / u
  Scalar difference_order;         // fitted slope of log difference vs log u
  Scalar ratio_order;              // difference_order - 1
  bool equivalent;                 // difference/u -> 0 (ratio_order > 1/2)
};

/// Compares the eps = 0 manifold reconstruction with a root curve on a grid
/// of u values approaching zero. Orders come from a least-squares fit over
/// the whole grid.
template <typename Scalar>
AsymptoticReport<Scalar> asymptotic_compare(const ManifoldCoeffs<Scalar>& c,
                                            const std::function<Scalar(Scalar)>& root,
                                            const std::vector<Scalar>& grid) {
  AsymptoticReport<Scalar> r;
  std::vector<Scalar> us, ds;
  for (Scalar u : grid) {
    using std::abs;
    const Scalar vm = reconstruct_v(c, u, Scalar(0));
    const Scalar vr = root(u);
    const Scalar d = abs(vm - vr);
    r.u.push_back(u);
    r.v_manifold.push_back(vm);
    r.v_root.push_back(vr);
    r.difference.push_back(d);
    r.ratio.push_back(u != 0 ? d / abs(u) : Scalar(0));
    if (d > 0 && u != 0) {
      us.push_back(u);
      ds.push_back(d);
    }
  }
  if (us.size() < 2) {
    // exact agreement (or too few nonzero differences to fit)
    r.difference_order = std::numeric_limits<Scalar>::infinity();
    r.ratio_order = std::numeric_limits<Scalar>::infinity();
    r.equivalent = us.empty();
    return r;
  }
  r.difference_order = loglog_slope<Scalar>(us, ds);
  r.ratio_order = r.difference_order - 1;
  // difference/u -> 0 is read off the fit; a margin keeps curvature from
  // a constant ratio being mistaken for decay
  r.equivalent = r.ratio_order > Scalar(0.5);
  return r;
}

}  // namespace mmcm

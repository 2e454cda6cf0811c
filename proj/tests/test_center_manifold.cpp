#include <doctest.h>

#include <cmath>

#include "mmcm/center_manifold.hpp"
#include "support.hpp"

using namespace mmcm;
using mmcm::testing::Draws;

namespace {

bool coeffs_close(const ManifoldCoeffs<double>& x, const ManifoldCoeffs<double>& y, double tol) {
  auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  return close(x.lambda1, y.lambda1) && close(x.lambda2, y.lambda2) && x.lambda3 == 0 &&
         y.lambda3 == 0 && x.a == y.a && x.b == y.b;
}

}  // namespace

TEST_SUITE("center_manifold") {

TEST_CASE("closed-form coefficients") {
  const auto unit = coeffs_closed_form(NondimHTA<double>{1.0, 0.3, 0.0});
  CHECK(unit.lambda1 == 1);
  CHECK(unit.lambda2 == doctest::Approx(-0.3));
  CHECK(unit.lambda3 == 0);
  const auto h = coeffs_closed_form(NondimHTA<double>{0.4, 0.2, 0.0});
  CHECK(h.lambda1 == doctest::Approx(2.5));
  CHECK(h.lambda2 == doctest::Approx(-1.25));
  const auto t = coeffs_closed_form(nondim_tq(Kinetics<double>({1, 3, 1}, {1, 1})));
  CHECK(t.lambda1 == doctest::Approx((1.0 / 6) * (2.0 / 3) / (25.0 / 36)).epsilon(1e-14));
  CHECK(t.lambda2 == doctest::Approx(-36.0 / 25).epsilon(1e-14));
  CHECK(t.b == doctest::Approx(-5.0 / 6));
}

TEST_CASE("property: general coefficients equal the closed forms") {
  Draws d(31);
  for (int i = 0; i < 1000; ++i) {
    const auto h = d.hta();
    const auto t = d.tq();
    CHECK(coeffs_close(coeffs_general(analytic_partials(h), 1.0, -h.kappa), coeffs_closed_form(h), 1e-12));
    CHECK(coeffs_close(coeffs_general(analytic_partials(t), 1.0, -(t.eta + t.kappa_m)),
                       coeffs_closed_form(t), 1e-12));
  }
}

TEST_CASE("property: estimated partials give the closed-form coefficients") {
  Draws d(32);
  for (int i = 0; i < 200; ++i) {
    const auto h = d.hta();
    const auto t = d.tq();
    const auto hs = hta_system(h);
    const auto ts = tq_system(t);
    CHECK(coeffs_close(coeffs_general(estimate_partials(hs), hs.a(), hs.b()), coeffs_closed_form(h), 1e-6));
    CHECK(coeffs_close(coeffs_general(estimate_partials(ts), ts.a(), ts.b()), coeffs_closed_form(t), 1e-6));
  }
}

TEST_CASE("numerical partial derivatives") {
  const auto h = hta_system(NondimHTA<double>{4.0, 1.0, 0.1});
  const auto p = estimate_partials(h);
  CHECK(std::abs(p.psi_uv + 1) < 1e-8);
  CHECK(std::abs(p.psi_uu) < 1e-8);
  CHECK(std::abs(p.psi_vv) < 1e-8);
  CHECK(std::abs(p.phi_u + 1) < 1e-8);
  CHECK(std::abs(p.phi_v - 3) < 1e-8);
  const auto t = estimate_partials(tq_system(NondimTQ<double>{1.0 / 6, 1.0 / 6, 2.0 / 3, 0.1}));
  CHECK(std::abs(t.psi_vv - 1.0 / 18) < 1e-8);
  CHECK(std::abs(t.psi_uv + 1.0 / 6) < 1e-8);
  CHECK(std::abs(t.phi_v + 1) < 1e-8);
  // a smooth non-polynomial system
  const auto s = make_general_sp<double>(
      1, -2, [](double u, double v) { return std::sin(u) - v; },
      [](double u, double v) { return std::exp(u * v) - 1 + u * u * std::cos(v) - u * u; });
  const auto q = estimate_partials(s);
  CHECK(std::abs(q.phi_u - 1) < 1e-8);
  CHECK(std::abs(q.psi_uv - 1) < 1e-8);
  CHECK(std::abs(q.psi_uu) < 1e-8);
  const auto nan = make_general_sp<double>(
      1, -1, [](double, double) { return 0.0; },
      [](double u, double v) { return std::abs(u) > 0.05 ? std::nan("") : u * v; });
  CHECK_THROWS_AS(estimate_partials(nan), NumericalError);
}

TEST_CASE("manifold evaluation") {
  const auto c = coeffs_closed_form(NondimHTA<double>{1.0, 1.0, 0.0});
  CHECK(manifold_h(c, 0.0, 0.3) == 0);
  CHECK(manifold_h(c, 0.1, 0.0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(manifold_h(c, 0.1, 0.2) - manifold_h(c, 0.1, 0.1) == doctest::Approx(c.lambda2 * 0.1 * 0.1));
  CHECK(reconstruct_v(c, 0.0, 0.0) == 0);
  CHECK(reconstruct_v(c, 0.1, 0.0) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(validity_radius(c) == 0.5);
  CHECK(evaluate_manifold(c, 0.4, 0.0).within_radius);
  CHECK_FALSE(evaluate_manifold(c, 0.6, 0.0).within_radius);
  const auto wide = coeffs_closed_form(NondimHTA<double>{4.0, 1.0, 0.0});
  CHECK(validity_radius(wide) == 1);
  for (double u : {1e-2, 1e-4, 1e-6})
    CHECK(reconstruct_v(wide, u, 0.0) / sqssa_v(u, 4.0) == doctest::Approx(1).epsilon(2 * u));
}

TEST_CASE("residual decays cubically only for the right coefficients") {
  const auto p = NondimHTA<double>{4.0, 1.0, 0.0};
  const auto sys = hta_system(p);
  const auto c = coeffs_closed_form(p);
  CHECK(manifold_residual(sys, c, 0.0, 0.0) == 0);
  for (double rho : {1e-2, 1e-3, 1e-4}) {
    const double r1 = std::abs(manifold_residual(sys, c, rho, rho));
    const double r2 = std::abs(manifold_residual(sys, c, rho / 2, rho / 2));
    CHECK(r1 / r2 >= 8 * 0.8);
  }
  const auto grid = log_grid(1e-4, 1e-2, 9);
  CHECK(grid.front() == doctest::Approx(1e-4));
  CHECK(grid.back() == doctest::Approx(1e-2));
  const auto good = residual_scaling(sys, c, grid);
  CHECK(good.slope >= 2.7);
  CHECK(good.slope == doctest::Approx(3).epsilon(0.02));

  auto bad = c;
  bad.lambda1 += 0.1;
  const auto worse = residual_scaling(sys, bad, grid);
  CHECK(worse.slope == doctest::Approx(2).epsilon(0.05));
  auto bad2 = c;
  bad2.lambda2 *= 1.1;
  CHECK(residual_scaling(sys, bad2, grid).slope < 2.7);

  const auto tp = NondimTQ<double>{1.0 / 6, 1.0 / 6, 2.0 / 3, 0.0};
  CHECK(residual_scaling(tq_system(tp), coeffs_closed_form(tp), grid).slope >= 2.7);
}

TEST_CASE("property: cubic residual decay over random parameters") {
  // kappa of order one keeps [1e-4, 1e-2] inside the region where the
  // quadratic expansion dominates
  Draws d(33);
  const auto grid = log_grid(1e-4, 1e-2, 5);
  for (int i = 0; i < 1000; ++i) {
    const double kappa = d.uniform(0.5, 20.0);
    const auto h = NondimHTA<double>::from_values(kappa, kappa * d.uniform(0.05, 0.95), 1e-3);
    const auto t = d.tq();
    CHECK(residual_scaling(hta_system(h), coeffs_closed_form(h), grid).slope >= 2.7);
    CHECK(residual_scaling(tq_system(t), coeffs_closed_form(t), grid).slope >= 2.7);
  }
}

TEST_CASE("reduced fields") {
  const auto tp = NondimTQ<double>{1.0 / 6, 1.0 / 6, 2.0 / 3, 0.05};
  const auto tc = coeffs_closed_form(tp);
  const auto pt = analytic_partials(tp);
  CHECK(reduced_field(pt, tc, 0.0, 0.05) == 0);
  CHECK(-(tc.b / tc.a) * tc.lambda2 == doctest::Approx(-1.2).epsilon(1e-14));
  // total-substrate specialisation is the general formula term by term
  Draws d(34);
  for (int i = 0; i < 1000; ++i) {
    const auto t = d.tq();
    const double u = d.uniform(0, 0.1);
    const auto c = coeffs_closed_form(t);
    CHECK(reduced_field(analytic_partials(t), c, u, t.eps) ==
          doctest::Approx(reduced_field_tq(t, u)).epsilon(1e-12));
  }
  // HTA: the general and specialised forms share the leading coefficient -lambda/kappa
  const auto hp = NondimHTA<double>{4.0, 1.0, 0.0};
  const auto hc = coeffs_closed_form(hp);
  CHECK(-(hc.b / hc.a) * hc.lambda2 == doctest::Approx(-0.25));
  for (double u : {1e-3, 1e-5, 1e-7}) {
    CHECK(reduced_field(analytic_partials(hp), hc, u, 0.0) / u == doctest::Approx(-0.25).epsilon(10 * u));
    CHECK(reduced_field_hta(hp, u) / u == doctest::Approx(-0.25).epsilon(10 * u));
  }
  CHECK(reduced_field(hta_system(hp), hc, 1e-3, 0.0) ==
        doctest::Approx(reduced_field(analytic_partials(hp), hc, 1e-3, 0.0)).epsilon(1e-8));
  // phi on the manifold is the exact reduced sQSSA field plus O(u^3) at eps = 0
  for (double u : {1e-2, 1e-3}) {
    const double exact = -u / (4 + u) * 1.0;
    CHECK(std::abs(reduced_field_on_manifold(hta_system(hp), hc, u, 0.0) - exact) < 10 * u * u * u);
  }
  auto zero_a = hc;
  zero_a.a = 0;
  CHECK_THROWS_AS(reduced_field(analytic_partials(hp), zero_a, 0.1, 0.0), ValidationError);
}

TEST_CASE("asymptotic equivalence with the algebraic roots") {
  const auto grid = log_grid(1e-4, 1e-1, 13);
  const auto hp = NondimHTA<double>{4.0, 1.0, 0.0};
  const auto hr = asymptotic_compare<double>(coeffs_closed_form(hp), [](double u) { return sqssa_v(u, 4.0); }, grid);
  CHECK(hr.equivalent);
  CHECK(hr.difference_order == doctest::Approx(3).epsilon(0.05));
  CHECK(hr.ratio.back() < hr.ratio.front() * 1e6);
  CHECK(hr.ratio.front() < 1e-8);

  const auto tp = NondimTQ<double>{1.0 / 6, 1.0 / 6, 2.0 / 3, 0.0};
  const auto tr = asymptotic_compare<double>(coeffs_closed_form(tp),
                                             [&](double u) { return tq_root_nondim(u, tp); }, grid);
  CHECK(tr.equivalent);
  CHECK(tr.difference_order == doctest::Approx(3).epsilon(0.05));
  const auto newton = asymptotic_compare<double>(
      coeffs_closed_form(tp), [&](double u) { return tihonov_root(tq_system(tp), u).v; }, grid);
  CHECK(newton.equivalent);
  CHECK(newton.ratio_order > 1.5);

  const auto same = coeffs_closed_form(hp);
  const auto self = asymptotic_compare<double>(same, [&](double u) { return reconstruct_v(same, u, 0.0); }, grid);
  CHECK(self.equivalent);
  for (double x : self.difference) CHECK(x == 0);

  // the linear root alone is not second-order accurate
  const auto lin = asymptotic_compare<double>(same, [](double u) { return u / 4; }, grid);
  CHECK(lin.difference_order == doctest::Approx(2).epsilon(0.05));
  CHECK(lin.equivalent);
  const auto off = asymptotic_compare<double>(same, [](double u) { return u / 2; }, grid);
  CHECK_FALSE(off.equivalent);
}

}  // TEST_SUITE

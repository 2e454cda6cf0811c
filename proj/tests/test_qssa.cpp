#include <doctest.h>

#include <cmath>

#include "mmcm/qssa.hpp"
#include "support.hpp"

using namespace mmcm;
using mmcm::testing::Draws;

namespace {

// Smaller root of C^2 - s C + p = 0 in extended precision, textbook form.
double quadratic_small_root(double s, double p) {
  const long double S = s, P = p;
  return static_cast<double>((S - std::sqrt(S * S - 4 * P)) / 2);
}

const Kinetics<double> fig3_left({1, 3, 1}, {1, 1});

}  // namespace

TEST_SUITE("qssa") {

TEST_CASE("standard closure") {
  CHECK(sqssa_complex(0.0, 1.0, 4.0) == 0);
  CHECK(sqssa_v(1.0, 1.0) == 0.5);
  CHECK(sqssa_complex(1e12, 3.0, 4.0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(sqssa_reduced_rhs(1.0, fig3_left) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(sqssa_reduced_rhs(0.0, fig3_left) == 0);
  const Kinetics<double> big({1, 1, 2}, {0.5, 1});
  CHECK(sqssa_reduced_rhs(1e9, big) == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("total-substrate closure") {
  const double c = cminus(1.0, 1.0, 4.0);
  CHECK(c == doctest::Approx((6 - std::sqrt(32.0)) / 2).epsilon(1e-14));
  CHECK(c == doctest::Approx(0.171573).epsilon(1e-6));
  CHECK(std::abs(cminus_residual(c, 1.0, 1.0, 4.0)) <= 1e-10 * 36);
  CHECK(cminus(0.0, 1.0, 4.0) == 0);
  CHECK(cminus(1.0, 0.0, 4.0) == 0);
  CHECK(tqssa_reduced_rhs(1.0, fig3_left) == doctest::Approx(-0.171573).epsilon(1e-6));
  CHECK(tqssa_reduced_rhs(0.0, fig3_left) == 0);
  CHECK(tqssa_reduced_rhs(1e12, fig3_left) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(cminus(1.0, 10.0, -10.0), NumericalError);
}

TEST_CASE("property: C_- solves its quadratic and respects its bounds") {
  Draws d(21);
  for (int i = 0; i < 1000; ++i) {
    const auto kin = d.kinetics();
    const double xbar = d.uniform(0, kin.X_T());
    const double c = cminus(xbar, kin.E_T(), kin.K_M());
    const double s = kin.E_T() + kin.K_M() + xbar;
    CHECK(std::abs(cminus_residual(c, xbar, kin.E_T(), kin.K_M())) <= 1e-10 * s * s);
    CHECK(c >= 0);
    CHECK(c <= std::min(kin.E_T(), xbar));
    CHECK(c == doctest::Approx(quadratic_small_root(s, kin.E_T() * xbar)).epsilon(1e-6));
    CHECK(cminus(xbar * 1.01 + 1e-9, kin.E_T(), kin.K_M()) > c);
  }
}

TEST_CASE("nondimensional total-substrate root") {
  const auto p = nondim_tq(fig3_left);
  CHECK(p.sigma == doctest::Approx(1.0 / 6));
  CHECK(p.eta == doctest::Approx(1.0 / 6));
  CHECK(p.kappa_m == doctest::Approx(2.0 / 3));
  const double v = tq_root_nondim(1.0, p);
  const double m = p.eta + p.kappa_m + p.sigma;
  CHECK(v == doctest::Approx(quadratic_small_root(m, p.eta * p.sigma) / (p.eta * p.sigma)).epsilon(1e-12));
  CHECK(v == doctest::Approx(1.029437).epsilon(1e-6));
  CHECK(v / 6 == doctest::Approx(cminus(1.0, 1.0, 4.0)).epsilon(1e-12));
  CHECK(tq_root_nondim(0.0, p) == 0);
  // degenerate eta sigma = 0 falls back to the linear root
  NondimTQ<double> lin{0.3, 0.0, 0.7, 0.1};
  CHECK(tq_root_nondim(0.5, lin) == doctest::Approx(0.5 / (0.7 + 0.15)).epsilon(1e-15));
  // small u: v ~ u/(eta + kappa_m)
  const double u = 1e-8;
  CHECK(tq_root_nondim(u, p) / (u / (p.eta + p.kappa_m)) == doctest::Approx(1).epsilon(1e-7));
}

TEST_CASE("property: nondimensional root rescales to C_-") {
  Draws d(22);
  for (int i = 0; i < 1000; ++i) {
    const auto kin = d.kinetics();
    const auto p = nondim_tq(kin);
    const double u = d.uniform(0, 1);
    const double c = cminus(u * kin.X_T(), kin.E_T(), kin.K_M());
    CHECK(testing::rel_diff(tq_root_nondim(u, p) * p.C_scale, c) <= 1e-9);
  }
}

TEST_CASE("property: Newton root reproduces the closed-form roots") {
  Draws d(23);
  for (int i = 0; i < 1000; ++i) {
    const auto h = d.hta();
    const auto t = d.tq();
    const double u = d.uniform(0, 1);
    const auto rh = tihonov_root(hta_system(h), u);
    CHECK(std::abs(rh.v - sqssa_v(u, h.kappa)) <= 1e-9 * std::max(1.0, sqssa_v(u, h.kappa)));
    CHECK(rh.stable);
    CHECK(std::abs(rh.residual) <= 1e-10 * std::max(1.0, h.kappa));
    const auto rt = tihonov_root(tq_system(t), u);
    CHECK(std::abs(rt.v - tq_root_nondim(u, t)) <= 1e-9 * std::max(1.0, rt.v));
    CHECK(rt.stable);
    CHECK(rt.slope < 0);
  }
}

TEST_CASE("Newton root examples and failures") {
  const auto r = tihonov_root(hta_system(NondimHTA<double>{1.0, 0.5, 0.1}), 1.0);
  CHECK(r.v == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.stable);
  const auto z = tihonov_root(hta_system(NondimHTA<double>{1.0, 0.5, 0.1}), 0.0);
  CHECK(z.value == 0);
  const auto t = tihonov_root(tq_system(nondim_tq(fig3_left)), 1.0);
  CHECK(std::abs(t.v - 1.029437251522859) < 1e-9);

  // u - v + v^2 = 0 has no real root for u > 1/4
  const auto bad = make_general_sp<double>(
      1, -1, [](double, double) { return 0.0; }, [](double, double v) { return v * v; });
  CHECK_THROWS_AS(tihonov_root(bad, 1.0), NumericalError);
  try {
    tihonov_root(bad, 1.0);
  } catch (const RootNotConverged& e) {
    CHECK(std::isfinite(e.last_iterate()));
  } catch (const SingularJacobian&) {
  }
  // derivative -1 + 2v vanishes at the guess v = 1/2
  CHECK_THROWS_AS(tihonov_root(bad, 1.0, std::optional<double>(0.5)), SingularJacobian);
  // the larger root of the same family is unstable
  const auto unstable = tihonov_root(bad, 0.09, std::optional<double>(0.95));
  CHECK(unstable.v == doctest::Approx(0.9).epsilon(1e-10));
  CHECK_FALSE(unstable.stable);
}

TEST_CASE("reduced solutions") {
  ode::SolverConfig<double> cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  const Kinetics<double> kin({1, 3, 1}, {1, 2});
  const auto s = solve_reduced(ReductionKind::Standard, kin, kin.X_T(), 20.0, cfg);
  const double vmax = kin.k2() * kin.E_T();
  for (std::size_t i = 0; i < s.slow.size(); ++i) {
    const double X = s.slow.states[i](0), t = s.slow.times[i];
    // implicit closed-form solution of the Michaelis-Menten equation
    CHECK(kin.K_M() * std::log(kin.X_T() / X) + (kin.X_T() - X) == doctest::Approx(vmax * t).epsilon(1e-7).scale(1));
    CHECK(s.fast[i] == doctest::Approx(sqssa_complex(X, kin.E_T(), kin.K_M())));
    if (i > 0) CHECK(X < s.slow.states[i - 1](0));
  }
  const auto q = solve_reduced(ReductionKind::Total, kin, kin.X_T(), 20.0, cfg);
  for (std::size_t i = 0; i < q.slow.size(); ++i)
    CHECK(std::abs(cminus_residual(q.fast[i], q.slow.states[i](0), kin.E_T(), kin.K_M())) <= 1e-10 * 49);
  CHECK(q.kind == ReductionKind::Total);
  CHECK(q.kinetics->same_parameters(kin));

  const Kinetics<double> frozen({1, 3, 1e-300}, {1, 2});
  const auto f = solve_reduced(ReductionKind::Total, frozen, 2.0, 5.0, cfg);
  CHECK(f.slow.states.back()(0) == 2.0);
  CHECK(f.fast.back() == f.fast.front());

  const auto h = NondimHTA<double>::from_values(2.0, 1.0, 0.01);
  const auto g = solve_reduced(hta_system(h), 1.0, 2.0, cfg);
  const auto ref = ode::integrate(
      ode::Problem<double>{[&](double, const ode::Vector<double>& y) {
                             return ode::Vector<double>::Constant(1, -h.lambda * y(0) / (h.kappa + y(0)));
                           },
                           0.0, 2.0, ode::Vector<double>::Constant(1, 1.0)},
      cfg);
  CHECK(g.slow.states.back()(0) == doctest::Approx(ref.states.back()(0)).epsilon(1e-8));
  CHECK(g.fast.back() == doctest::Approx(sqssa_v(g.slow.states.back()(0), 2.0)).epsilon(1e-9));

  CHECK_THROWS_AS(solve_reduced(ReductionKind::Standard, kin, 3.0, 1.0, cfg), ValidationError);
  CHECK_THROWS_AS(solve_reduced(ReductionKind::General, kin, 1.0, 1.0, cfg), std::invalid_argument);
  CHECK(std::string(to_string(ReductionKind::Total)) == "tQSSA");
}

}  // TEST_SUITE

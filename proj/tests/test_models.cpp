#include <doctest.h>

#include <cmath>
#include <string>

#include "mmcm/models.hpp"
#include "support.hpp"

using namespace mmcm;
using mmcm::testing::Draws;

TEST_SUITE("models") {

TEST_CASE("vector fields at the initial point") {
  const Kinetics<double> kin({1, 3, 1}, {1, 1});
  const auto p = nondim_hta(kin);
  const auto r = rhs_hta(1.0, 0.0, p, TimeFrame::Outer);
  CHECK(r(0) == -1);
  CHECK(r(1) == 1);
  const auto inner = rhs_hta(1.0, 0.0, p, TimeFrame::Inner);
  CHECK(inner(1) == 1);

  const auto small = NondimHTA<double>::from_values(2.0, 1.0, 1e-3);
  CHECK(rhs_hta(1.0, 0.0, small, TimeFrame::Inner)(1) == 1);
  CHECK(rhs_hta(1.0, 0.0, small, TimeFrame::Outer)(1) == doctest::Approx(1e3));
  const auto tq = nondim_tq(kin);
  CHECK(rhs_tq(1.0, 0.0, tq, TimeFrame::Inner)(1) == 1);
  CHECK(rhs_tq(1.0, 0.0, tq, TimeFrame::Inner)(0) == 0);

  const auto full = rhs_full_mm<double>({1, 0}, kin);
  CHECK(full(0) == -1);
  CHECK(full(1) == 1);
}

TEST_CASE("origin is a rest point of every form") {
  Draws d(11);
  for (int i = 0; i < 20; ++i) {
    const auto kin = d.kinetics();
    CHECK(rhs_full_mm<double>({0, 0}, kin).isZero());
    CHECK(rhs_lumped<double>({0, 0}, kin).isZero());
    const auto h = d.hta();
    CHECK(rhs_hta(0.0, 0.0, h, TimeFrame::Outer).isZero());
    const auto t = nondim_tq(kin);
    CHECK(rhs_tq(0.0, 0.0, t, TimeFrame::Outer).isZero());
  }
}

TEST_CASE("property: total substrate decays at the catalytic rate") {
  Draws d(12);
  for (int i = 0; i < 1000; ++i) {
    const auto kin = d.kinetics();
    const double X = d.uniform(0, kin.X_T()), C = d.uniform(0, std::min(kin.E_T(), kin.X_T() - X));
    const auto r = rhs_full_mm<double>({X, C}, kin);
    CHECK(std::abs(r(0) + r(1) + kin.k2() * C) <= 1e-12 * (std::abs(r(0)) + std::abs(r(1)) + kin.k2() * C));
  }
}

TEST_CASE("property: lumped form matches the full form under Xbar = X + C") {
  Draws d(13);
  for (int i = 0; i < 1000; ++i) {
    const auto kin = d.kinetics();
    const double X = d.uniform(0, kin.X_T()), C = d.uniform(0, std::min(kin.E_T(), kin.X_T() - X));
    const auto f = rhs_full_mm<double>({X, C}, kin);
    const auto l = rhs_lumped<double>({X + C, C}, kin);
    const double scale = kin.k1() * (X + kin.E_T() + kin.K_M()) * (kin.E_T() + C) + kin.k2() * C;
    CHECK(std::abs(l(0) - (f(0) + f(1))) <= 1e-12 * scale);
    CHECK(std::abs(l(1) - f(1)) <= 1e-12 * scale);
  }
}

TEST_CASE("lumped form starts flat in the total substrate") {
  const Kinetics<double> kin({0.1, 0.01, 10}, {0.1, 50});
  const auto l = rhs_lumped<double>({kin.X_T(), 0}, kin);
  CHECK(l(0) == 0);
  CHECK(l(1) == doctest::Approx(kin.k1() * kin.X_T() * kin.E_T()));
}

TEST_CASE("species form conserves substrate and enzyme") {
  Draws d(14);
  for (int i = 0; i < 100; ++i) {
    const auto kin = d.kinetics();
    Eigen::Vector4d y(d.uniform(0, 1), d.uniform(0, 1), d.uniform(0, 1), d.uniform(0, 1));
    const auto dy = rhs_species(y, kin);
    CHECK(std::abs(dy(0) + dy(1) + dy(2)) <= 1e-12 * dy.cwiseAbs().sum());
    CHECK(std::abs(dy(1) + dy(3)) <= 1e-12 * dy.cwiseAbs().sum());
  }
}

TEST_CASE("property: inner field is eps times the outer field") {
  Draws d(15);
  for (int i = 0; i < 1000; ++i) {
    const auto h = d.hta();
    const double u = d.uniform(0, 1), v = d.uniform(0, 1);
    const auto in = rhs_hta(u, v, h, TimeFrame::Inner);
    const auto out = rhs_hta(u, v, h, TimeFrame::Outer);
    CHECK(in(0) == doctest::Approx(h.eps * out(0)).epsilon(1e-13));
    CHECK(in(1) == doctest::Approx(h.eps * out(1)).epsilon(1e-13));
    const auto t = d.tq();
    const auto tin = rhs_tq(u, v, t, TimeFrame::Inner);
    const auto tout = rhs_tq(u, v, t, TimeFrame::Outer);
    CHECK(tin(0) == doctest::Approx(t.eps * tout(0)).epsilon(1e-13));
    CHECK(tin(1) == doctest::Approx(t.eps * tout(1)).epsilon(1e-13));
  }
}

TEST_CASE("property: nondimensional fields are rescaled dimensional fields") {
  Draws d(16);
  for (int i = 0; i < 1000; ++i) {
    const auto kin = d.kinetics();
    const double X = d.uniform(0, kin.X_T()), C = d.uniform(0, std::min(kin.E_T(), kin.X_T() - X));
    const auto f = rhs_full_mm<double>({X, C}, kin);
    const double scale = kin.k1() * (X + kin.E_T() + kin.K_M()) * (kin.E_T() + C);

    const auto h = nondim_hta(kin);
    const auto rh = rhs_hta(X / h.X_scale, C / h.C_scale, h, TimeFrame::Outer);
    // d/dt = (1/t_per_tau) d/dtau
    CHECK(std::abs(rh(0) * h.X_scale / h.t_per_tau - f(0)) <= 1e-11 * scale);
    CHECK(std::abs(rh(1) * h.C_scale / h.t_per_tau - f(1)) <= 1e-11 * scale);

    const auto t = nondim_tq(kin);
    const auto rt = rhs_tq((X + C) / t.X_scale, C / t.C_scale, t, TimeFrame::Outer);
    CHECK(std::abs(rt(0) * t.X_scale / t.t_per_tau - (f(0) + f(1))) <= 1e-11 * scale);
    CHECK(std::abs(rt(1) * t.C_scale / t.t_per_tau - f(1)) <= 1e-11 * scale);
  }
}

TEST_CASE("property: general container reproduces both systems") {
  Draws d(17);
  for (int i = 0; i < 1000; ++i) {
    const auto h = d.hta();
    const auto t = d.tq();
    const auto hs = hta_system(h);
    const auto ts = tq_system(t);
    const double u = d.uniform(0, 1), v = d.uniform(0, 1);
    for (auto frame : {TimeFrame::Inner, TimeFrame::Outer}) {
      const Eigen::Vector2d a = hs.rhs(u, v, h.eps, frame) - rhs_hta(u, v, h, frame);
      const Eigen::Vector2d b = ts.rhs(u, v, t.eps, frame) - rhs_tq(u, v, t, frame);
      const double sa = rhs_hta(u, v, h, frame).cwiseAbs().maxCoeff() + 1;
      const double sb = rhs_tq(u, v, t, frame).cwiseAbs().maxCoeff() + 1;
      CHECK(a.cwiseAbs().maxCoeff() <= 1e-14 * sa / std::min(1.0, h.eps) * 4);
      CHECK(b.cwiseAbs().maxCoeff() <= 1e-14 * sb / std::min(1.0, t.eps) * 4);
    }
    // the w-frame is an exact change of coordinates
    const double w = hs.to_w(u, v);
    CHECK(hs.v_from_w(u, w) == doctest::Approx(v).epsilon(1e-12));
    const auto rw = hs.rhs_w(u, w, h.eps);
    const auto rv = hs.rhs(u, v, h.eps, TimeFrame::Inner);
    CHECK(rw(1) == doctest::Approx(hs.a() * rv(0) + hs.b() * rv(1)).epsilon(1e-10).scale(1));
  }
}

TEST_CASE("general container validation") {
  auto message = [](auto f) {
    try {
      f();
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  auto zero = [](double, double) { return 0.0; };
  CHECK(message([&] { make_general_sp<double>(1, 1, zero, zero); }).find("b must") != std::string::npos);
  CHECK(message([&] { make_general_sp<double>(1, 0, zero, zero); }).find("b must") != std::string::npos);
  CHECK(message([&] {
          make_general_sp<double>(1, -1, zero, [](double, double v) { return v; });
        }).find("psi_v") != std::string::npos);
  CHECK(message([&] {
          make_general_sp<double>(1, -1, zero, [](double u, double) { return 2 * u; });
        }).find("psi_u") != std::string::npos);
  CHECK(message([&] {
          make_general_sp<double>(1, -1, [](double, double) { return 1.0; }, zero);
        }).find("phi(0,0)") != std::string::npos);
  CHECK(message([&] {
          make_general_sp<double>(1, -1, zero, [](double, double) { return 0.5; });
        }).find("psi(0,0)") != std::string::npos);
  CHECK_NOTHROW(make_general_sp<double>(2, -3, zero, [](double u, double v) { return u * v; }));
}

TEST_CASE("problem factories") {
  const Kinetics<double> kin({1, 3, 1}, {1, 2});
  const auto pb = full_problem(kin, 2.0, 0.0, 5.0);
  CHECK(pb.t_end == 5);
  CHECK(pb.y0(0) == 2);
  CHECK(pb.rhs(0.0, pb.y0)(0) == doctest::Approx(-2));
  const auto sp = species_problem(kin, 5.0);
  CHECK(sp.y0.size() == 4);
  CHECK(sp.y0(0) == 2);
  CHECK(sp.y0(3) == 1);
  const auto lp = lumped_problem(kin, 2.0, 0.0, 5.0);
  CHECK(lp.rhs(0.0, lp.y0)(0) == 0);
}

}  // TEST_SUITE

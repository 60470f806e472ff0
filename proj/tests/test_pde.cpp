#include <cmath>
#include <vector>

#include "doctest.h"
#include "vecadvect/analytic.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/pde.hpp"

using namespace vecadvect;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

double max_coef_diff(const SpectralVectorField& a, const SpectralVectorField& b) {
  double worst = 0.0;
  for (int c = 0; c < a.ncomp(); ++c)
    for (size_t i = 0; i < a.comp[c].size(); ++i)
      worst = std::max(worst, std::abs(a.comp[c][i] - b.comp[c][i]));
  return worst;
}

SpectralVectorField heat_exact(const SpectralVectorField& f0, double nu,
                               double t) {
  SpectralVectorField out = f0;
  for_modes(f0.grid, [&](std::int64_t flat, const std::array<int, 3>&,
                         const std::array<double, 3>& k) {
    double k2 = 0.0;
    for (int a = 0; a < f0.grid.dim(); ++a) k2 += k[a] * k[a];
    const double e = std::exp(-nu * k2 * t);
    for (int c = 0; c < f0.ncomp(); ++c) out.comp[c][flat] *= e;
  });
  return out;
}

// (G . grad) v - (v . grad) G via spectral derivatives, assembled here
// independently of the library's curl_cross path.
SpectralVectorField grad_form_transport(const VectorField& v,
                                        const SpectralVectorField& G) {
  const Grid& g = G.grid;
  const int d = g.dim();
  const std::int64_t n = g.points();
  const VectorField gp = transform_inverse(G);
  const SpectralVectorField vh = transform_forward(v);
  const cplx I(0.0, 1.0);
  auto deriv = [&](const std::vector<cplx>& comp, int axis) {
    SpectralScalarField s;
    s.grid = g;
    s.coef.assign(size_t(n), cplx(0.0, 0.0));
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& m,
                     const std::array<double, 3>& k) {
      if (has_nyquist(g, m)) return;
      s.coef[flat] = I * k[axis] * comp[flat];
    });
    return transform_inverse(s).data;
  };
  VectorField out(g, d);
  for (int i = 0; i < d; ++i) {
    std::vector<std::vector<double>> dvi(d), dgi(d);
    for (int a = 0; a < d; ++a) {
      dvi[a] = deriv(vh.comp[i], a);
      dgi[a] = deriv(G.comp[i], a);
    }
    for (std::int64_t p = 0; p < n; ++p) {
      double s = 0.0;
      for (int a = 0; a < d; ++a)
        s += gp.comp[a][p] * dvi[a][p] - v.comp[a][p] * dgi[a][p];
      out.comp[i][p] = s;
    }
  }
  SpectralVectorField oh = transform_forward(out);
  apply_dealias_mask(oh);
  return oh;
}

}  // namespace

TEST_CASE("zero velocity reproduces the heat kernel exactly") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto f0 = random_solenoidal(g, 555, 5, 1.0);
  const auto v = TimeDependentVelocity::analytic(zero_field(2, {kTau, kTau, 1.0}));
  for (Scheme s : {Scheme::IFRK4, Scheme::IFEuler}) {
    SolverConfig cfg{0.3, 1e-2, s, true, false};
    const auto fT = transport(f0, v, 0.5, cfg);
    CHECK(max_coef_diff(fT, heat_exact(f0, 0.3, 0.5)) < 1e-12);
  }
}

TEST_CASE("advection nonlinearity: curl form equals gradient form") {
  {
    const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
    const auto F = random_solenoidal(g, 91, 3, 1.0);
    const VectorField v = transform_inverse(random_solenoidal(g, 92, 3, 2.0));
    const auto b1 = nonlinearity_B(v, F, true, BForm::CurlForm);
    const auto b2 = nonlinearity_B(v, F, true, BForm::GradForm);
    CHECK(max_coef_diff(b1, b2) < 1e-10);
    CHECK(relative_divergence(b1) < 1e-12);
  }
  {
    const Grid g = Grid::make2d(32, 32, kTau, kTau);
    const auto F = random_solenoidal(g, 93, 4, 1.0);
    const VectorField v = taylor_green_2d(0.1)->sample(g, 0.0);
    const auto b1 = nonlinearity_B(v, F, true, BForm::CurlForm);
    const auto b2 = nonlinearity_B(v, F, true, BForm::GradForm);
    CHECK(max_coef_diff(b1, b2) < 1e-10);
  }
}

TEST_CASE("transport term of the adjoint equation matches its gradient form") {
  {
    const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
    const auto G = random_solenoidal(g, 94, 3, 1.0);
    const VectorField v = transform_inverse(random_solenoidal(g, 95, 3, 1.5));
    auto lhs = curl_cross(v, G, true);
    apply_dealias_mask(lhs);
    const auto rhs = grad_form_transport(v, G);
    CHECK(max_coef_diff(lhs, rhs) < 1e-10);
  }
  {
    const Grid g = Grid::make2d(32, 32, kTau, kTau);
    const auto G = random_solenoidal(g, 96, 4, 1.0);
    const VectorField v = taylor_green_2d(0.2)->sample(g, 0.1);
    auto lhs = curl_cross(v, G, true);
    apply_dealias_mask(lhs);
    const auto rhs = grad_form_transport(v, G);
    CHECK(max_coef_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("manufactured forced solution is reproduced at fourth order") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto F0 = random_solenoidal(g, 97, 3, 1.0);
  const double nu = 0.15, omega = 2.0, T = 0.2;
  const VectorField v = taylor_green_2d(nu)->sample(g, 0.0);
  const auto vfix =
      TimeDependentVelocity::frozen(taylor_green_2d(nu), 0.0);

  // With F(t) = cos(w t) F0 the matching forcing is
  // f = -w sin(w t) F0 + nu A (cos(w t) F0) + B(v, cos(w t) F0),
  // assembled from the same discrete operators, so F is an exact solution of
  // the semi-discrete system and the remaining error is pure time stepping.
  auto forcing = [&](double t) {
    SpectralVectorField f(g, 2);
    SpectralVectorField scaled_f0 = F0;
    for (auto& comp : scaled_f0.comp)
      for (cplx& z : comp) z *= std::cos(omega * t);
    f = nonlinearity_B(v, scaled_f0, true, BForm::CurlForm);
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>&,
                     const std::array<double, 3>& k) {
      const double k2 = k[0] * k[0] + k[1] * k[1];
      for (int c = 0; c < 2; ++c)
        f.comp[c][flat] += (-omega * std::sin(omega * t) +
                            nu * k2 * std::cos(omega * t)) *
                           F0.comp[c][flat];
    });
    return f;
  };
  ForcingSpec fs;
  fs.spectral = forcing;

  auto error_at = [&](double dt) {
    SolverConfig cfg{nu, dt, Scheme::IFRK4, true, false};
    const auto fT = transport_with_forcing(F0, vfix, T, cfg, fs);
    SpectralVectorField exact = F0;
    for (auto& comp : exact.comp)
      for (cplx& z : comp) z *= std::cos(omega * T);
    return max_coef_diff(fT, exact);
  };
  const double e1 = error_at(1e-2);
  const double e2 = error_at(5e-3);
  CHECK(e1 < 1e-6);
  CHECK(e2 < e1 / 12.0);  // fourth order: ratio ~16
}

TEST_CASE("guards: CFL, horizon lattice, save times, parameters") {
  const Grid g = Grid::make2d(32, 32, kTau, kTau);
  const auto F0 = random_solenoidal(g, 98, 3, 1.0);
  const auto v = TimeDependentVelocity::frozen(taylor_green_2d(0.1), 0.0);
  SolverConfig big_dt{0.1, 0.2, Scheme::IFRK4, true, false};
  CHECK_THROWS_AS(transport(F0, v, 1.0, big_dt), NumericalGuard);
  SolverConfig cfg{0.1, 1e-2, Scheme::IFRK4, true, false};
  CHECK_THROWS_AS(transport(F0, v, 0.305, cfg), ConfigError);
  CHECK_THROWS_AS(solve_F(F0, v, 0.3, cfg, {}, {0.1234}), ConfigError);
  SolverConfig bad_nu{0.0, 1e-2, Scheme::IFRK4, true, false};
  CHECK_THROWS_AS(transport(F0, v, 0.3, bad_nu), ConfigError);
  SolverConfig bad_dt{0.1, -1e-2, Scheme::IFRK4, true, false};
  CHECK_THROWS_AS(transport(F0, v, 0.3, bad_dt), ConfigError);
}

TEST_CASE("two-parameter semigroup property and linearity") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto F0 = random_solenoidal(g, 99, 3, 1.0);
  const auto G0 = random_solenoidal(g, 100, 3, 0.7);
  const auto v = TimeDependentVelocity::analytic(taylor_green_2d(0.2));
  SolverConfig cfg{0.2, 5e-3, Scheme::IFRK4, true, false};

  const auto mid = transport(F0, v, 0.1, cfg);
  Trajectory tail = solve_F(mid, v, 0.1, cfg, {}, {}, /*t_start=*/0.1);
  const auto direct = transport(F0, v, 0.2, cfg);
  CHECK(max_coef_diff(tail.states.back(), direct) < 1e-9);

  SpectralVectorField combo = F0;
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < combo.comp[c].size(); ++i)
      combo.comp[c][i] = 2.0 * F0.comp[c][i] - 0.5 * G0.comp[c][i];
  const auto lhs = transport(combo, v, 0.1, cfg);
  const auto a = transport(F0, v, 0.1, cfg);
  const auto b = transport(G0, v, 0.1, cfg);
  SpectralVectorField rhs = a;
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < rhs.comp[c].size(); ++i)
      rhs.comp[c][i] = 2.0 * a.comp[c][i] - 0.5 * b.comp[c][i];
  CHECK(max_coef_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("energy balance holds to the time-derivative stencil accuracy") {
  const Grid g = Grid::make2d(32, 32, kTau, kTau);
  const auto F0 = random_solenoidal(g, 101, 3, 1.0);
  const auto v = TimeDependentVelocity::frozen(taylor_green_2d(0.1), 0.0);
  SolverConfig cfg{0.1, 1e-3, Scheme::IFRK4, true, true};
  const Trajectory traj = solve_F(F0, v, 0.05, cfg);
  REQUIRE(traj.e_times.size() == 51);
  CHECK(energy_residual(traj) < 1e-6);
}

TEST_CASE("curl of the forward solution solves the adjoint-type equation") {
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const auto F0 = random_solenoidal(g, 102, 3, 1.0);
  const auto v = TimeDependentVelocity::frozen(abc_flow(0.9, 0.7, 1.1), 0.0);
  const double T = 0.2;
  SolverConfig cfg{0.15, 5e-3, Scheme::IFRK4, true, false};
  const auto wT = curl3(transport(F0, v, T, cfg));
  const auto wG = transport_adjoint(curl3(F0), v.time_reversed(T), T, cfg);
  CHECK(max_coef_diff(wT, wG) < 1e-10);
}

TEST_CASE("time reversal is an exact involution") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto v = TimeDependentVelocity::analytic(taylor_green_2d(0.3));
  const auto vv = v.time_reversed(0.7).time_reversed(0.7);
  for (double t : {0.0, 0.31, 0.7}) {
    const VectorField s1 = v.sample(g, t);
    const VectorField s2 = vv.sample(g, t);
    for (int c = 0; c < 2; ++c)
      for (std::int64_t i = 0; i < g.points(); ++i)
        CHECK(s1.comp[c][i] == s2.comp[c][i]);
  }
  const auto r = v.time_reversed(0.7);
  const VectorField a = r.sample(g, 0.2);
  const VectorField b = v.sample(g, 0.5);
  for (std::int64_t i = 0; i < g.points(); ++i)
    CHECK(a.comp[0][i] == -b.comp[0][i]);
}

TEST_CASE("sampled velocity: interpolation, validation, windows") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto tg = taylor_green_2d(0.4);
  std::vector<VectorField> snaps;
  const double dt_s = 0.025;
  for (int i = 0; i <= 20; ++i) snaps.push_back(tg->sample(g, dt_s * i));
  const auto v = TimeDependentVelocity::sampled(snaps, 0.0, dt_s);
  CHECK(v.dim() == 2);
  CHECK(!v.constant_in_time());

  const double t = 0.1234;
  const VectorField si = v.sample(g, t);
  const VectorField se = tg->sample(g, t);
  double worst = 0.0;
  for (std::int64_t i = 0; i < g.points(); ++i)
    worst = std::max(worst, std::abs(si.comp[0][i] - se.comp[0][i]));
  CHECK(worst < 1e-4);  // linear interpolation error O(dt_s^2)

  double x[2] = {1.1, 2.2};
  double vi[2], vex[2], ji[4], jex[4];
  v.eval(t, x, vi, ji);
  tg->eval(t, x, vex, jex);
  CHECK(std::abs(vi[0] - vex[0]) < 1e-4);
  CHECK(std::abs(ji[3] - jex[3]) < 1e-4);

  CHECK_THROWS_AS(v.sample(g, 0.9), ConfigError);

  std::vector<VectorField> bad = {VectorField(g, 2)};
  for (std::int64_t i = 0; i < g.points(); ++i)
    bad[0].comp[0][i] = std::sin(g.node(i)[0]);  // gradient field, not solenoidal
  CHECK_THROWS_AS(TimeDependentVelocity::sampled(bad, 0.0, 0.1),
                  NumericalGuard);
}

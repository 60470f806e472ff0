#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "vecadvect/analytic.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/fk.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/pde.hpp"
#include "vecadvect/rng.hpp"
#include "vecadvect/velocity.hpp"

using namespace vecadvect;

namespace {

constexpr double kTau = 2.0 * Grid::kPi;

// Independent heat oracle: E F0(x + sqrt(2 nu) W_t) damps each mode by
// exp(-nu t |k|^2).
VectorField heat_semigroup(const VectorField& f, double nu, double t) {
  SpectralVectorField fh = transform_forward(f);
  for_modes(fh.grid, [&](std::int64_t flat, const std::array<int, 3>&,
                         const std::array<double, 3>& k) {
    const double damp =
        std::exp(-nu * t * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    for (int c = 0; c < fh.ncomp(); ++c) fh.comp[c][std::size_t(flat)] *= damp;
  });
  return transform_inverse(fh);
}

double max_field_gap(const VectorField& a, const VectorField& b) {
  double w = 0.0;
  for (int c = 0; c < a.ncomp(); ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i)
      w = std::max(w, std::abs(a.comp[c][i] - b.comp[c][i]));
  return w;
}

double max_abs(const VectorField& a, int c) {
  double w = 0.0;
  for (double v : a.comp[std::size_t(c)]) w = std::max(w, std::abs(v));
  return w;
}

bool bitwise_equal(const VectorField& a, const VectorField& b) {
  for (int c = 0; c < a.ncomp(); ++c)
    if (std::memcmp(a.comp[c].data(), b.comp[c].data(),
                    a.comp[c].size() * sizeof(double)) != 0)
      return false;
  return true;
}

ScalarField sample_stream(const Grid& g, double (*fn)(double, double)) {
  ScalarField f;
  f.grid = g;
  f.data.resize(std::size_t(g.points()));
  for (std::int64_t i = 0; i < g.points(); ++i) {
    const auto x = g.node(i);
    f.data[std::size_t(i)] = fn(x[0], x[1]);
  }
  return f;
}

double tg_stream(double x, double y) { return -std::cos(x) * std::cos(y); }
double sxy_stream(double x, double y) { return std::sin(x) * std::sin(y); }

}  // namespace

TEST_CASE("cofactor matrix equals det times inverse transpose") {
  NormalStream ns(77, 1, 0);
  double worst = 0.0;
  for (std::uint32_t trial = 0; trial < 500; ++trial) {
    double z[10];
    ns.normals(trial, 0, z, 10);
    Eigen::Matrix3d j;
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c)
        j(i, c) = (i == c ? 1.0 : 0.0) + 0.3 * z[i * 3 + c];
    if (std::abs(j.determinant()) < 0.2) continue;
    double cof[9];
    double jr[9];
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) jr[i * 3 + c] = j(i, c);
    cofactor3(jr, cof);
    const Eigen::Matrix3d ref = j.determinant() * j.inverse().transpose();
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c)
        worst = std::max(worst, std::abs(cof[i * 3 + c] - ref(i, c)));
  }
  CHECK(worst < 1e-10);

  // identity pattern
  double idm[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  double cof[9];
  cofactor3(idm, cof);
  for (int i = 0; i < 9; ++i) CHECK(cof[i] == idm[i]);
}

TEST_CASE("zero-length window reproduces the initial field") {
  FkConfig cfg;
  cfg.n_paths = 64;
  cfg.dt = 0.01;
  cfg.seed = 41;

  SUBCASE("curve and rotated estimators in 2d") {
    const Grid g = Grid::make2d(16, 16, kTau, kTau);
    const VectorField f0 = transform_inverse(random_solenoidal(g, 7, 2, 1.0));
    const TimeDependentVelocity v =
        TimeDependentVelocity::frozen(taylor_green_2d(0.2));
    const FkEstimate a = fk_curve(f0, &v, 0.2, 0.3, 0.0, cfg);
    CHECK(max_field_gap(a.field, f0) < 1e-11);
    CHECK(max_abs(a.se, 0) < 1e-13);
    CHECK(max_abs(a.se, 1) < 1e-13);
    CHECK(a.n_paths == 64);
    CHECK(a.n_flagged == 0);
    CHECK(a.moment_beta1 > 0.0);

    const ScalarField phi = sample_stream(g, tg_stream);
    const FkEstimate b = fk_rot2d(f0, phi, 0.2, 0.3, 0.0, cfg);
    CHECK(max_field_gap(b.field, f0) < 1e-11);
    CHECK(b.kind == RotationKind::Rot2DBrownian);
  }

  SUBCASE("surface estimator in 3d") {
    const Grid g = Grid::make3d(8, 8, 8, kTau, kTau, kTau);
    const VectorField f0 = transform_inverse(random_solenoidal(g, 9, 2, 1.0));
    const TimeDependentVelocity v =
        TimeDependentVelocity::frozen(abc_flow(0.3, 0.2, 0.4));
    const FkEstimate a = fk_surface(f0, &v, 0.15, 0.2, 0.0, cfg);
    CHECK(max_field_gap(a.field, f0) < 1e-11);
  }
}

TEST_CASE("driftless estimates follow the heat semigroup") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const VectorField f0 = transform_inverse(random_solenoidal(g, 13, 2, 1.0));
  const double nu = 0.25;
  FkConfig cfg;
  cfg.n_paths = 3000;
  cfg.dt = 0.01;
  cfg.seed = 19;

  SUBCASE("half window and full window") {
    for (double s : {0.2, 0.4}) {
      const FkEstimate est = fk_curve(f0, nullptr, nu, 0.4, s, cfg);
      const VectorField ref = heat_semigroup(f0, nu, s);
      const FkComparison cmp = compare_to_reference(est, ref);
      CHECK(cmp.se_h > 0.0);
      CHECK(cmp.gap_h <= 3.0 * cmp.se_h);
      CHECK(cmp.gap_h > 0.0);
    }
  }

  SUBCASE("zero stream function reduces the rotated flow to the heat flow") {
    ScalarField phi;
    phi.grid = g;
    phi.data.assign(std::size_t(g.points()), 0.0);
    const FkEstimate rot = fk_rot2d(f0, phi, nu, 0.4, 0.2, cfg);
    const FkEstimate heat = fk_curve(f0, nullptr, nu, 0.4, 0.2, cfg);
    CHECK(bitwise_equal(rot.field, heat.field));
    CHECK(bitwise_equal(rot.se, heat.se));
  }

  SUBCASE("standard error shrinks like one over root n") {
    FkConfig small = cfg;
    small.n_paths = 750;
    const FkEstimate coarse = fk_curve(f0, nullptr, nu, 0.4, 0.2, small);
    const FkEstimate fine = fk_curve(f0, nullptr, nu, 0.4, 0.2, cfg);
    const double ratio = se_h_norm(coarse) / se_h_norm(fine);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("curve estimator tracks the spectral solver with drift") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const double nu = 0.1;
  const TimeDependentVelocity v =
      TimeDependentVelocity::frozen(taylor_green_2d(nu));
  const SpectralVectorField f0h = random_solenoidal(g, 23, 2, 1.0);
  const VectorField f0 = transform_inverse(f0h);

  SolverConfig sc;
  sc.nu = nu;
  sc.dt = 1e-3;
  const double s = 0.25;
  const Trajectory traj = solve_F(f0h, v, s, sc);
  const VectorField ref = transform_inverse(traj.states.back());

  FkConfig cfg;
  cfg.n_paths = 2000;
  cfg.dt = 0.005;
  cfg.seed = 4;
  const FkEstimate est = fk_curve(f0, &v, nu, 0.5, s, cfg);
  CHECK(est.n_flagged == 0);
  const FkComparison cmp = compare_to_reference(est, ref);
  CHECK(cmp.gap_h <= std::max(3.0 * cmp.se_h, 0.02 * cmp.ref_h));
  CHECK(cmp.gap_h > 0.0);
  CHECK(cmp.ref_h > 0.5);
}

TEST_CASE("rotated-noise estimator solves the same equation") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const double nu = 0.5;
  const ScalarField phi = sample_stream(g, sxy_stream);
  const VectorField vf =
      transform_inverse(perp_grad(transform_forward(phi)));
  const TimeDependentVelocity v =
      TimeDependentVelocity::sampled({vf}, 0.0, 1.0);
  const SpectralVectorField f0h = random_solenoidal(g, 31, 2, 1.0);
  const VectorField f0 = transform_inverse(f0h);

  SolverConfig sc;
  sc.nu = nu;
  sc.dt = 1e-3;
  const double s = 0.2;
  const VectorField ref =
      transform_inverse(solve_F(f0h, v, s, sc).states.back());

  FkConfig cfg;
  cfg.n_paths = 2500;
  cfg.dt = 0.004;
  cfg.seed = 12;
  const FkEstimate rot = fk_rot2d(f0, phi, nu, 0.4, s, cfg);
  const FkComparison against_pde = compare_to_reference(rot, ref);
  CHECK(against_pde.gap_h <=
        std::max(3.0 * against_pde.se_h, 0.02 * against_pde.ref_h));

  const FkEstimate curve = fk_curve(f0, &v, nu, 0.4, s, cfg);
  const FkComparison against_curve = compare_estimates(rot, curve);
  CHECK(against_curve.gap_h <= 3.0 * against_curve.se_h);
  CHECK(against_curve.gap_h > 0.0);
}

TEST_CASE("complex reconstruction is algebraically identical") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const VectorField f0 = transform_inverse(random_solenoidal(g, 3, 2, 1.0));
  const ScalarField phi = sample_stream(g, tg_stream);
  const double nu = 0.5;

  SUBCASE("full grid against the real route") {
    FkConfig cfg;
    cfg.n_paths = 200;
    cfg.dt = 0.01;
    cfg.seed = 8;
    const FkComplexReport rep = fk_complex_check(f0, phi, nu, 0.2, 0.2, cfg);
    CHECK(rep.max_state_gap < 1e-12);
    CHECK(rep.max_estimate_gap < 1e-10);
    CHECK(rep.pass);
  }

  SUBCASE("single path over ten steps") {
    FkConfig cfg;
    cfg.n_paths = 1;
    cfg.dt = 0.02;
    cfg.seed = 8;
    const FkComplexReport rep = fk_complex_check(f0, phi, nu, 0.2, 0.2, cfg);
    CHECK(rep.max_state_gap < 1e-12);
  }

  SUBCASE("zero stream function keeps the pair at its start") {
    ScalarField zero;
    zero.grid = g;
    zero.data.assign(std::size_t(g.points()), 0.0);
    FkConfig cfg;
    cfg.n_paths = 50;
    cfg.dt = 0.01;
    cfg.seed = 8;
    const FkComplexReport rep = fk_complex_check(f0, zero, nu, 0.2, 0.2, cfg);
    CHECK(rep.max_state_gap == 0.0);
    CHECK(rep.max_estimate_gap == 0.0);
  }
}

TEST_CASE("surface estimator") {
  SUBCASE("driftless flow gives the heat semigroup") {
    const Grid g = Grid::make3d(8, 8, 8, kTau, kTau, kTau);
    const VectorField f0 = transform_inverse(random_solenoidal(g, 15, 2, 1.0));
    const double nu = 0.3;
    FkConfig cfg;
    cfg.n_paths = 2000;
    cfg.dt = 0.01;
    cfg.seed = 77;
    const FkEstimate est = fk_surface(f0, nullptr, nu, 0.2, 0.2, cfg);
    const FkComparison cmp =
        compare_to_reference(est, heat_semigroup(f0, nu, 0.2));
    CHECK(cmp.gap_h <= 3.0 * cmp.se_h);
    CHECK(cmp.gap_h > 0.0);
  }

  SUBCASE("z-independent data reduces to the planar theory") {
    const Grid g = Grid::make3d(12, 12, 12, kTau, kTau, kTau);
    const SpectralVectorField g0h = random_solenoidal(g, 5, 2, 1.0, true);
    const VectorField g0 = transform_inverse(g0h);
    const VectorField f0 = transform_inverse(curl3(g0h));
    const TimeDependentVelocity v =
        TimeDependentVelocity::frozen(taylor_green_embedded(0.2));
    const double nu = 0.2;
    FkConfig cfg;
    cfg.n_paths = 1000;
    cfg.dt = 0.01;
    cfg.seed = 5;

    const FkEstimate surf = fk_surface(f0, &v, nu, 0.2, 0.1, cfg);
    CHECK(max_abs(surf.field, 0) == 0.0);
    CHECK(max_abs(surf.field, 1) == 0.0);

    const FkEstimate curve = fk_curve(g0, &v, nu, 0.2, 0.1, cfg);
    const VectorField curled =
        transform_inverse(curl3(transform_forward(curve.field)));
    const FkComparison cmp = compare_to_reference(surf, curled);
    const double bound =
        3.0 * std::hypot(se_h_norm(surf), curled_se_h_bound(curve));
    CHECK(cmp.gap_h <= bound);
    CHECK(cmp.gap_h > 0.0);
  }
}

TEST_CASE("determinism, threads and linearity") {
  const Grid g = Grid::make2d(8, 8, kTau, kTau);
  const VectorField f0 = transform_inverse(random_solenoidal(g, 2, 2, 1.0));
  const TimeDependentVelocity v =
      TimeDependentVelocity::frozen(taylor_green_2d(0.2));
  FkConfig cfg;
  cfg.n_paths = 200;
  cfg.dt = 0.01;
  cfg.seed = 100;

  const FkEstimate a = fk_curve(f0, &v, 0.2, 0.2, 0.1, cfg);
  const FkEstimate b = fk_curve(f0, &v, 0.2, 0.2, 0.1, cfg);
  CHECK(bitwise_equal(a.field, b.field));
  CHECK(bitwise_equal(a.se, b.se));

  FkConfig threaded = cfg;
  threaded.threads = 3;
  const FkEstimate c = fk_curve(f0, &v, 0.2, 0.2, 0.1, threaded);
  CHECK(bitwise_equal(a.field, c.field));
  CHECK(bitwise_equal(a.se, c.se));

  FkConfig crn = cfg;
  crn.crn = true;
  const FkEstimate d = fk_curve(f0, &v, 0.2, 0.2, 0.1, crn);
  CHECK_FALSE(bitwise_equal(a.field, d.field));

  FkConfig reseeded = cfg;
  reseeded.seed = 101;
  const FkEstimate e = fk_curve(f0, &v, 0.2, 0.2, 0.1, reseeded);
  CHECK_FALSE(bitwise_equal(a.field, e.field));

  VectorField doubled = f0;
  for (auto& comp : doubled.comp)
    for (double& x : comp) x *= 2.0;
  const FkEstimate twice = fk_curve(doubled, &v, 0.2, 0.2, 0.1, cfg);
  double worst = 0.0;
  for (int cc = 0; cc < 2; ++cc)
    for (std::size_t i = 0; i < twice.field.comp[cc].size(); ++i)
      worst = std::max(worst, std::abs(twice.field.comp[std::size_t(cc)][i] -
                                       2.0 * a.field.comp[std::size_t(cc)][i]));
  CHECK(worst == 0.0);

  const VectorField reproj = helmholtz_project(a.field);
  CHECK(max_field_gap(reproj, a.field) < 1e-12);
}

TEST_CASE("estimator rejects bad configurations and budget violations") {
  const Grid g = Grid::make2d(8, 8, kTau, kTau);
  const VectorField f0 = transform_inverse(random_solenoidal(g, 2, 2, 1.0));
  const TimeDependentVelocity v =
      TimeDependentVelocity::frozen(taylor_green_2d(0.05));
  FkConfig cfg;
  cfg.n_paths = 100;
  cfg.dt = 0.01;

  CHECK_THROWS_AS(fk_curve(f0, &v, 0.2, 0.2, 0.3, cfg), ConfigError);
  CHECK_THROWS_AS(fk_curve(f0, &v, 0.2, 0.2, 0.015, cfg), ConfigError);
  FkConfig bad = cfg;
  bad.n_paths = 0;
  CHECK_THROWS_AS(fk_curve(f0, &v, 0.2, 0.2, 0.1, bad), ConfigError);
  bad = cfg;
  bad.threads = 0;
  CHECK_THROWS_AS(fk_curve(f0, &v, 0.2, 0.2, 0.1, bad), ConfigError);

  const Grid g3 = Grid::make3d(8, 8, 8, kTau, kTau, kTau);
  const VectorField f3 = transform_inverse(random_solenoidal(g3, 2, 2, 1.0));
  ScalarField phi;
  phi.grid = g;
  phi.data.assign(std::size_t(g.points()), 0.0);
  CHECK_THROWS_AS(fk_rot2d(f3, phi, 0.2, 0.2, 0.1, cfg), ConfigError);
  CHECK_THROWS_AS(fk_surface(f0, &v, 0.2, 0.2, 0.1, cfg), ConfigError);

  FkConfig tight = cfg;
  tight.det_low = 1.0 - 1e-9;
  tight.det_high = 1.0 + 1e-9;
  CHECK_THROWS_AS(fk_curve(f0, &v, 0.05, 0.2, 0.1, tight), NumericalGuard);
}

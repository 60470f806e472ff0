#include <cmath>
#include <cstdint>

#include <Eigen/Geometry>

#include "doctest.h"
#include "vecadvect/analytic.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/so3.hpp"

using namespace vecadvect;

namespace {

constexpr double kTau = 2.0 * Grid::kPi;

double lcg_unit(std::uint64_t& state) {
  state = state * 6364136223846793005ull + 1442695040888963407ull;
  return double(state >> 11) * (1.0 / 9007199254740992.0);
}

Vec3 random_vec(std::uint64_t& state, double max_norm) {
  Vec3 v(2.0 * lcg_unit(state) - 1.0, 2.0 * lcg_unit(state) - 1.0,
         2.0 * lcg_unit(state) - 1.0);
  if (v.norm() < 1e-12) v = Vec3(1.0, 0.0, 0.0);
  return v.normalized() * (max_norm * lcg_unit(state));
}

// Taylor series of exp with 20 terms after halving the argument below 0.7,
// then repeated squaring; no closed-form trigonometry involved.
Mat3 series_exp(const Vec3& a) {
  int halvings = 0;
  double t = a.norm();
  while (t > 0.7) {
    t *= 0.5;
    ++halvings;
  }
  const Mat3 x = hat(a) / std::pow(2.0, halvings);
  Mat3 sum = Mat3::Identity();
  Mat3 term = Mat3::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * x / double(k);
    sum += term;
  }
  for (int i = 0; i < halvings; ++i) sum = sum * sum;
  return sum;
}

// Principal axis-angle via Eigen's quaternion conversion.
Vec3 quat_log(const Mat3& r) {
  Eigen::Quaterniond q(r);
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn < 1e-300) return Vec3::Zero();
  return (2.0 * std::atan2(vn, q.w()) / vn) * q.vec();
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("hat and vee") {
  CHECK(max_abs(hat(Vec3::Zero())) == 0.0);
  CHECK((hat(Vec3::UnitZ()) * Vec3::UnitX() - Vec3::UnitY()).norm() == 0.0);

  std::uint64_t state = 11;
  for (int i = 0; i < 20; ++i) {
    const Vec3 u = random_vec(state, 2.0);
    const Vec3 v = random_vec(state, 2.0);
    CHECK((vee(hat(u)) - u).norm() == 0.0);
    const Vec3 w = u.cross(v);
    for (int y = 0; y < 3; ++y) {
      Vec3 e = Vec3::Zero();
      e[y] = 1.0;
      CHECK((hat(u) * e - u.cross(e)).norm() == 0.0);
    }
    const Mat3 comm = hat(u) * hat(v) - hat(v) * hat(u);
    CHECK(max_abs(comm - hat(w)) < 1e-13);
  }

  Mat3 bad = hat(Vec3(1.0, 2.0, 3.0));
  bad(0, 1) += 1e-9;
  CHECK_THROWS_AS(vee(bad), ConfigError);
}

TEST_CASE("exponential map") {
  CHECK(max_abs(exp_so3(Vec3::Zero()) - Mat3::Identity()) == 0.0);

  const double th = 0.7;
  Mat3 planar;
  planar << std::cos(th), -std::sin(th), 0.0, std::sin(th), std::cos(th), 0.0,
      0.0, 0.0, 1.0;
  CHECK(max_abs(exp_so3(Vec3(0.0, 0.0, th)) - planar) < 1e-15);
  CHECK(max_abs(exp_so3(Vec3(0.0, 0.0, th)) - series_exp(Vec3(0.0, 0.0, th))) <
        1e-14);

  std::uint64_t state = 23;
  double worst_series = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(state, 3.0);
    const Mat3 r = exp_so3(a);
    worst_series = std::max(worst_series, max_abs(r - series_exp(a)));
    CHECK((r * a - a).norm() < 1e-12);
  }
  CHECK(worst_series < 1e-12);

  for (int i = 0; i < 50; ++i) {
    const Vec3 a = random_vec(state, 10.0);
    const Mat3 r = exp_so3(a);
    CHECK(max_abs(r * r.transpose() - Mat3::Identity()) < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }

  const Vec3 tiny(3e-9, -4e-9, 1e-9);
  CHECK(max_abs(exp_so3(tiny) - (Mat3::Identity() + hat(tiny))) < 1e-16);
}

TEST_CASE("axis-angle extraction") {
  std::uint64_t state = 39;
  for (int i = 0; i < 60; ++i) {
    const Vec3 a = random_vec(state, 3.0);
    CHECK((log_so3(exp_so3(a)) - a).norm() < 1e-10);
  }
  const Vec3 dir = Vec3(0.3, -0.8, 0.52).normalized();
  const Vec3 near_pi_low = (Grid::kPi - 1e-3) * dir;
  CHECK((log_so3(exp_so3(near_pi_low)) - near_pi_low).norm() < 1e-10);
  const Vec3 near_pi_high = (Grid::kPi - 1e-5) * dir;
  CHECK((log_so3(exp_so3(near_pi_high)) - near_pi_high).norm() < 1e-7);
  const Vec3 small = 1e-9 * dir;
  CHECK((log_so3(exp_so3(small)) - small).norm() < 1e-17);
}

TEST_CASE("bch closed form vs matrix-log oracle") {
  std::uint64_t state = 57;
  const Vec3 u0 = random_vec(state, 1.0);
  CHECK((bch(u0, Vec3::Zero()).w - u0).norm() == 0.0);
  CHECK((bch(Vec3::Zero(), u0).w - u0).norm() == 0.0);

  const Vec3 axis = Vec3(0.2, 0.9, -0.4).normalized();
  const Vec3 col = bch(1.3 * axis, 0.9 * axis).w;
  CHECK((col - 2.2 * axis).norm() < 1e-14);
  const Vec3 col2 = bch(1.3 * axis, -0.9 * axis).w;
  CHECK((col2 - 0.4 * axis).norm() < 1e-14);

  double worst_log = 0.0, worst_exp = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 u = random_vec(state, 1.0);
    const Vec3 v = random_vec(state, 1.0);
    const BchResult r = bch(u, v);
    CHECK(!r.clamped);
    const Mat3 prod = exp_so3(u) * exp_so3(v);
    worst_log = std::max(worst_log, (r.w - quat_log(prod)).norm());
    worst_exp = std::max(worst_exp, max_abs(exp_so3(r.w) - prod));
  }
  CHECK(worst_log < 1e-8);
  CHECK(worst_exp < 1e-10);
}

TEST_CASE("bch associativity and branch guards") {
  std::uint64_t state = 71;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 u = random_vec(state, 0.8);
    const Vec3 v = random_vec(state, 0.8);
    const Vec3 w = random_vec(state, 0.8);
    const Vec3 uv_w = bch(bch(u, v).w, w).w;
    const Mat3 prod = exp_so3(u) * exp_so3(v) * exp_so3(w);
    worst = std::max(worst, max_abs(exp_so3(uv_w) - prod));
  }
  CHECK(worst < 1e-8);

  const Vec3 dir = Vec3(1.0, 1.0, 0.2).normalized();
  CHECK_THROWS_AS(bch((Grid::kPi - 1e-7) * dir, 0.1 * dir), NumericalGuard);
  CHECK_THROWS_AS(bch(0.1 * dir, (Grid::kPi - 1e-7) * dir), NumericalGuard);
  CHECK_THROWS_AS(bch(2.0 * dir, (Grid::kPi - 2.0 + 5e-7) * dir), NumericalGuard);
  CHECK_NOTHROW(bch(2.0 * dir, (Grid::kPi - 2.0 - 1e-3) * dir));
}

TEST_CASE("correction term closed forms") {
  CHECK(max_abs(correction_term(Vec3(0.4, -0.2, 0.9), Vec3::Zero())) == 0.0);

  const Mat3 axis_aligned =
      correction_term(Vec3(0.0, 0.0, 0.9), Vec3(0.0, 0.0, 0.37));
  CHECK(max_abs(axis_aligned - hat(Vec3(0.0, 0.0, 0.37))) < 1e-15);

  std::uint64_t state = 93;
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double scale = std::exp(std::log(1e-3) * lcg_unit(state));
    Vec3 a = random_vec(state, 1.0);
    if (a.norm() < 1e-6) a = Vec3(0.5, 0.0, 0.0);
    a *= 3.0 * scale / a.norm();
    const Vec3 da = random_vec(state, 2.0);
    const Mat3 c = correction_term(a, da);
    CHECK(max_abs(c + c.transpose()) == 0.0);
    worst = std::max(worst, max_abs(c - correction_term_axis_form(a, da)));
  }
  CHECK(worst < 1e-12);

  const Vec3 dir = Vec3(0.6, -0.3, 0.74).normalized();
  const Vec3 da(1.1, 0.4, -0.8);
  const Mat3 below = correction_term((1e-6 * (1.0 - 1e-8)) * dir, da);
  const Mat3 above = correction_term((1e-6 * (1.0 + 1e-8)) * dir, da);
  CHECK(max_abs(below - above) < 1e-9);

  CHECK_THROWS_AS(correction_term_axis_form(Vec3::Zero(), da), ConfigError);
}

TEST_CASE("correction term vs finite differences of the rotation field") {
  const std::array<double, 3> box{kTau, kTau, kTau};
  const double h = 1e-5;
  double worst_spatial = 0.0, worst_body = 0.0;
  for (int f = 0; f < 10; ++f) {
    const auto field = random_rotation_algebra_field(box, 900 + f, 3, 2, 1.2);
    std::uint64_t state = 1700 + f;
    for (int p = 0; p < 10; ++p) {
      const std::array<double, 3> x{kTau * lcg_unit(state), kTau * lcg_unit(state),
                                    kTau * lcg_unit(state)};
      Vec3 a;
      Mat3 da;
      field.eval(x, a, da);
      const Mat3 sigma = exp_so3(a);
      for (int k = 0; k < 3; ++k) {
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Mat3 fd =
            (exp_so3(field.value(xp)) - exp_so3(field.value(xm))) / (2.0 * h);
        worst_spatial = std::max(
            worst_spatial, max_abs(fd * sigma.transpose() - correction_term(a, da.col(k))));
        worst_body = std::max(
            worst_body,
            max_abs(sigma.transpose() * fd - hat(rotation_rate_body(a, da.col(k)))));
      }
    }
  }
  CHECK(worst_spatial < 1e-6);
  CHECK(worst_body < 1e-6);
}

TEST_CASE("flat connection residual") {
  const std::array<double, 3> box{kTau, kTau, kTau};
  const Grid g = Grid::make3d(32, 32, 32, kTau, kTau, kTau);

  ConnectionOneForm zero;
  zero.grid = g;
  for (int k = 0; k < 3; ++k) zero.comp[k] = VectorField(g, 3);
  CHECK(flat_connection_residual(zero).max_abs == 0.0);

  const auto field = random_rotation_algebra_field(box, 41, 3, 1, 1.0);
  const auto conn = connection_of_rotation_field(field, g);
  const auto res = flat_connection_residual(conn);
  CHECK(res.max_abs < 1e-8);

  const Grid g48 = Grid::make3d(48, 48, 48, kTau, kTau, kTau);
  const auto field2 = random_rotation_algebra_field(box, 42, 3, 2, 0.9);
  const auto res2 = flat_connection_residual(connection_of_rotation_field(field2, g48));
  CHECK(res2.max_abs < 1e-8);

  // A generic one-form with the same smoothness is nowhere near flat.
  ConnectionOneForm skew;
  skew.grid = g;
  for (int k = 0; k < 3; ++k) {
    skew.comp[k] = VectorField(g, 3);
    const auto vals = random_rotation_algebra_field(box, 77 + k, 2, 1, 0.8);
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const Vec3 a = vals.value(g.node(q));
      for (int i = 0; i < 3; ++i) skew.comp[k].comp[i][q] = a[i];
    }
  }
  CHECK(flat_connection_residual(skew).max_abs > 1e-3);
}

TEST_CASE("representation residual of the embedded planar triple") {
  const Grid g = Grid::make3d(32, 32, 8, kTau, kTau, kTau);
  const double nu = 0.3;

  VectorField b(g, 3);
  for (std::int64_t q = 0; q < g.points(); ++q) b.comp[2][q] = 1.0;

  // Stream function and its perpendicular gradient, both z-independent.
  auto make_case = [&](int which) {
    ScalarField phi1(g);
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const auto x = g.node(q);
      switch (which) {
        case 0:
          phi1[q] = std::cos(x[0]) * std::cos(x[1]);
          break;
        case 1:
          phi1[q] = 0.7 * std::sin(2.0 * x[0] + 0.3) - 0.4 * std::cos(x[1] - 1.1);
          break;
        default:
          phi1[q] = 0.5 * std::cos(x[0] - x[1] + 1.1) + 0.3 * std::sin(x[0] + 2.0 * x[1]);
          break;
      }
    }
    const SpectralScalarField phi1_spec = transform_forward(phi1);
    SpectralVectorField v_spec(g, 3);
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                     const std::array<double, 3>& kv) {
      const cplx d1 = has_nyquist(g, n) ? cplx(0.0, 0.0)
                                        : cplx(0.0, kv[0]) * phi1_spec.coef[flat];
      const cplx d2 = has_nyquist(g, n) ? cplx(0.0, 0.0)
                                        : cplx(0.0, kv[1]) * phi1_spec.coef[flat];
      v_spec.comp[0][flat] = -d2;
      v_spec.comp[1][flat] = d1;
    });
    return std::pair(phi1, transform_inverse(v_spec));
  };

  const VectorField f =
      transform_inverse(random_solenoidal(g, 4096, 2, 1.0, true));

  double worst = 0.0;
  for (int which = 0; which < 3; ++which) {
    auto [phi1, v] = make_case(which);
    ScalarField phi(g);
    for (std::int64_t q = 0; q < g.points(); ++q) phi[q] = phi1[q] / nu;
    const ScalarField psi(g);
    const auto res = representation_residual(b, phi, psi, v, f, nu);
    worst = std::max(worst, res.max_abs);
  }
  CHECK(worst < 1e-10);

  // Trivial data gives an exactly zero residual.
  const ScalarField zero_s(g);
  const VectorField zero_v(g, 3);
  CHECK(representation_residual(b, zero_s, zero_s, zero_v, f, nu).max_abs == 0.0);

  // Perturbing the angle moves the residual linearly.
  auto [phi1, v] = make_case(0);
  auto perturbed = [&](double delta) {
    ScalarField phi(g);
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const auto x = g.node(q);
      phi[q] = phi1[q] / nu + delta * std::sin(x[0]);
    }
    return representation_residual(b, phi, ScalarField(g), v, f, nu).max_abs;
  };
  const double r1 = perturbed(1e-4);
  const double r2 = perturbed(2e-4);
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(0.05));

  VectorField stretched(g, 3);
  for (std::int64_t q = 0; q < g.points(); ++q) stretched.comp[2][q] = 1.1;
  CHECK_THROWS_AS(
      representation_residual(stretched, zero_s, zero_s, zero_v, f, nu),
      ConfigError);
}

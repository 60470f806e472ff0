#include "vecadvect/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "vecadvect/analytic.hpp"
#include "vecadvect/duality.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/fk.hpp"
#include "vecadvect/flows.hpp"
#include "vecadvect/io.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/pde.hpp"
#include "vecadvect/so3.hpp"
#include "vecadvect/velocity.hpp"

namespace vecadvect {
namespace {

constexpr double kTau = 2.0 * Grid::kPi;

using Clock = std::chrono::steady_clock;

struct Timer {
  Clock::time_point t0 = Clock::now();
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

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

// Taylor series with argument halving and repeated squaring; trigonometry
// free, so it cannot share errors with the closed form under test.
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

Vec3 quat_log(const Mat3& r) {
  Eigen::Quaterniond q(r);
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn < 1e-300) return Vec3::Zero();
  return (2.0 * std::atan2(vn, q.w()) / vn) * q.vec();
}

double max_abs_m(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

double coef_gap(const SpectralVectorField& a, const SpectralVectorField& b) {
  double worst = 0.0;
  for (int c = 0; c < a.ncomp(); ++c)
    for (size_t i = 0; i < a.comp[c].size(); ++i)
      worst = std::max(worst, std::abs(a.comp[c][i] - b.comp[c][i]));
  return worst;
}

SpectralVectorField state_diff(SpectralVectorField a,
                               const SpectralVectorField& b) {
  for (int c = 0; c < a.ncomp(); ++c)
    for (size_t i = 0; i < a.comp[c].size(); ++i) a.comp[c][i] -= b.comp[c][i];
  return a;
}

ScalarField tg_stream(const Grid& g) {
  ScalarField phi(g);
  for (std::int64_t q = 0; q < g.points(); ++q) {
    const auto x = g.node(q);
    phi[q] = -std::cos(x[0]) * std::cos(x[1]);
  }
  return phi;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool fields_identical(const VectorField& a, const VectorField& b) {
  if (a.ncomp() != b.ncomp()) return false;
  for (int c = 0; c < a.ncomp(); ++c) {
    if (a.comp[c].size() != b.comp[c].size()) return false;
    if (std::memcmp(a.comp[c].data(), b.comp[c].data(),
                    a.comp[c].size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

// 1: pairing conservation at the pinned step plus the integrator's measured
// order from state self-convergence under dt-halving (the pairing deviation
// itself is conserved to roundoff at every dt, so it carries no order).
CriterionResult crit_pairing() {
  Timer timer;
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const auto F0 = random_solenoidal(g, 7101, 3, 1.0);
  const auto G0 = random_solenoidal(g, 7102, 3, 1.0);
  const auto v = TimeDependentVelocity::frozen(abc_flow(1.0, 1.0, 1.0), 0.0);
  const double nu = 0.05, T = 0.5;

  const SolverConfig sc{nu, 1e-3, Scheme::IFRK4, true, false};
  const PairingTrace tr = pairing_trace(F0, G0, v, T, sc, 10);

  auto state = [&](double dt) {
    const SolverConfig c{nu, dt, Scheme::IFRK4, true, false};
    return transport(F0, v, T, c);
  };
  const auto ref = state(5e-4);
  const double e4 = norm_H(state_diff(state(4e-3), ref));
  const double e2 = norm_H(state_diff(state(2e-3), ref));
  const double e1 = norm_H(state_diff(state(1e-3), ref));
  const double order = std::max(std::log2(e4 / e2), std::log2(e2 / e1));

  CriterionResult r;
  r.index = 1;
  r.name = "duality pairing conservation";
  r.seconds = timer.seconds();
  r.pass = tr.deviation <= 1e-5 && order >= 3.5 && r.seconds <= 60.0;
  r.detail = strf(
      "deviation %.1e <= 1e-5; state order %.2f >= 3.5 "
      "(err %.1e/%.1e/%.1e at dt 4e-3/2e-3/1e-3); %.1f s <= 60 s",
      tr.deviation, order, e4, e2, e1, r.seconds);
  return r;
}

// 2: transport duality relation on random data pairs.
CriterionResult crit_relation() {
  Timer timer;
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const auto v = TimeDependentVelocity::frozen(abc_flow(1.0, 1.0, 1.0), 0.0);
  const SolverConfig sc{0.05, 1e-3, Scheme::IFRK4, true, false};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const auto F0 = random_solenoidal(g, 7201 + 2 * i, 2, 1.0);
    const auto G0 = random_solenoidal(g, 7202 + 2 * i, 2, 1.0);
    worst = std::max(worst, duality_relation(F0, G0, v, 0.5, sc).gap);
  }
  CriterionResult r;
  r.index = 2;
  r.name = "duality relation gap";
  r.seconds = timer.seconds();
  r.pass = worst <= 1e-5;
  r.detail = strf("max gap %.1e <= 1e-5 over 5 pairs", worst);
  return r;
}

// 3: decaying vortex lattice against random adjoint data.
CriterionResult crit_serrin() {
  Timer timer;
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const SolverConfig sc{0.05, 2e-3, Scheme::IFRK4, true, false};
  const SerrinResult s = serrin_experiment(g, 0.05, 0.5, sc, 3, 515);
  CriterionResult r;
  r.index = 3;
  r.name = "planar vortex duality and decay";
  r.seconds = timer.seconds();
  r.pass = s.pairing_gap <= 1e-5 && s.ratio_error <= 1e-8;
  r.detail = strf("pairing gap %.1e <= 1e-5; decay ratio error %.1e <= 1e-8",
                  s.pairing_gap, s.ratio_error);
  return r;
}

struct PdeCheckSetup {
  Grid g;
  SpectralVectorField F0h;
  VectorField F0;
  TimeDependentVelocity v;
  VectorField ref;
  double nu = 0.1, T = 0.5, s = 0.25;
};

PdeCheckSetup make_pde_check_setup() {
  PdeCheckSetup su;
  su.g = Grid::make2d(32, 32, kTau, kTau);
  su.F0h = random_solenoidal(su.g, 4101, 2, 1.0);
  su.F0 = transform_inverse(su.F0h);
  su.v = TimeDependentVelocity::frozen(taylor_green_2d(su.nu), 0.0);
  const SolverConfig sc{su.nu, 1e-3, Scheme::IFRK4, true, false};
  su.ref = transform_inverse(solve_F(su.F0h, su.v, su.s, sc).states.back());
  return su;
}

// 4: pullback estimator over the drifted flow against the spectral solver.
CriterionResult crit_fk_standard(int threads) {
  Timer timer;
  const PdeCheckSetup su = make_pde_check_setup();
  FkConfig fc;
  fc.n_paths = 20000;
  fc.dt = 0.01;
  fc.seed = 41;
  fc.threads = threads;
  const FkEstimate est = fk_curve(su.F0, &su.v, su.nu, su.T, su.s, fc);
  const FkComparison cmp = compare_to_reference(est, su.ref);
  const double bound = std::max(3.0 * cmp.se_h, 0.02 * cmp.ref_h);
  CriterionResult r;
  r.index = 4;
  r.name = "pullback estimator vs spectral solver";
  r.seconds = timer.seconds();
  r.pass = cmp.gap_h <= bound && r.seconds <= 600.0;
  r.detail = strf("gap %.4f <= max(3 SE, 2%%) = %.4f; %.0f s <= 600 s",
                  cmp.gap_h, bound, r.seconds);
  return r;
}

// 5: drift-free rotated flow: PDE agreement, Brownian one-point law and the
// complex-coordinate reformulation.
CriterionResult crit_fk_rotated(int threads) {
  Timer timer;
  const PdeCheckSetup su = make_pde_check_setup();
  const ScalarField phi = tg_stream(su.g);

  FkConfig fc;
  fc.n_paths = 20000;
  fc.dt = 0.01;
  fc.seed = 43;
  fc.threads = threads;
  const FkEstimate est = fk_rot2d(su.F0, phi, su.nu, su.T, su.s, fc);
  const FkComparison cmp = compare_to_reference(est, su.ref);
  const double bound = std::max(3.0 * cmp.se_h, 0.02 * cmp.ref_h);
  const bool pass_pde = cmp.gap_h <= bound;

  FlowConfig lc;
  lc.nu = su.nu;
  lc.dt = 0.01;
  lc.n_paths = 100000;
  lc.seed = 44;
  lc.rotation = brownian_rotation(phi, su.nu);
  const double x0[2] = {Grid::kPi, Grid::kPi};
  const OnePointLawResult law = one_point_law_test(x0, 2, nullptr, lc, su.T);

  FkConfig cc = fc;
  cc.n_paths = 200;
  cc.seed = 45;
  cc.threads = 1;
  const FkComplexReport rep =
      fk_complex_check(su.F0, phi, su.nu, su.T, su.s, cc);

  CriterionResult r;
  r.index = 5;
  r.name = "rotated-noise representation";
  r.seconds = timer.seconds();
  r.pass = pass_pde && law.pass && rep.pass;
  r.detail = strf(
      "gap %.4f <= %.4f; one-point law %s (var target %.3f); "
      "complex gap %.1e <= 1e-10",
      cmp.gap_h, bound, law.pass ? "pass" : "FAIL", law.expected_var,
      std::max(rep.max_state_gap, rep.max_estimate_gap));
  return r;
}

// 6: transported loop integrals keep their mean under both flows.
CriterionResult crit_martingale() {
  Timer timer;
  const Grid g = Grid::make2d(32, 32, kTau, kTau);
  const double nu = 0.15, T = 0.2, s = 0.18;
  const auto v = TimeDependentVelocity::frozen(taylor_green_2d(nu), 0.0);
  const auto F0 = random_solenoidal(g, 321, 2, 1.0);

  const SolverConfig sc{nu, 2e-3, Scheme::IFRK4, true, false};
  std::vector<double> saves;
  for (int i = 0; i <= 20; ++i) saves.push_back(T * i / 20.0);
  const Trajectory traj = solve_F(F0, v, T, sc, {}, saves);

  const Contour gamma = Contour::circle({Grid::kPi, Grid::kPi}, 1.0, 256);
  FlowConfig fc;
  fc.nu = nu;
  fc.dt = 2.5e-3;
  fc.n_paths = 10000;
  fc.seed = 91;
  const MartingaleResult drifted = martingale_test(gamma, traj, &v, T, s, fc);

  FlowConfig rc = fc;
  rc.seed = 92;
  rc.rotation = brownian_rotation(tg_stream(g), nu);
  const MartingaleResult rotated =
      martingale_test(gamma, traj, nullptr, T, s, rc);

  double worst_ratio = 0.0;
  for (const auto* res : {&drifted, &rotated})
    for (const auto& cp : res->checkpoints)
      worst_ratio = std::max(worst_ratio, std::abs(cp.mean_delta) / cp.bound);

  CriterionResult r;
  r.index = 6;
  r.name = "circulation martingale";
  r.seconds = timer.seconds();
  r.pass = drifted.pass && rotated.pass;
  r.detail = strf(
      "drifted %s, rotated %s at 5 checkpoints (worst |drift|/bound %.2f)",
      drifted.pass ? "pass" : "FAIL", rotated.pass ? "pass" : "FAIL",
      worst_ratio);
  return r;
}

// 7: rotation-group toolkit against its oracles.
CriterionResult crit_so3() {
  Timer timer;
  const So3Battery b = run_so3_battery(23, 100, 1000, 10, 10);
  CriterionResult r;
  r.index = 7;
  r.name = "rotation toolkit oracles";
  r.seconds = timer.seconds();
  r.pass = b.pass;
  r.detail = strf("exp %.1e<=1e-12; bch %.1e<=1e-8; corr %.1e<=1e-6; "
                  "branch %.1e<=1e-9",
                  b.exp_gap, b.bch_gap, b.correction_gap, b.branch_gap);
  return r;
}

// 8: the embedded planar triple representing the advection nonlinearity.
CriterionResult crit_representation() {
  Timer timer;
  const Grid g = Grid::make3d(32, 32, 8, kTau, kTau, kTau);
  const double nu = 0.3;
  VectorField b(g, 3);
  for (std::int64_t q = 0; q < g.points(); ++q) b.comp[2][q] = 1.0;
  const VectorField f =
      transform_inverse(random_solenoidal(g, 4096, 2, 1.0, true));

  double worst = 0.0;
  for (int which = 0; which < 3; ++which) {
    ScalarField phi1(g);
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const auto x = g.node(q);
      switch (which) {
        case 0:
          phi1[q] = std::cos(x[0]) * std::cos(x[1]);
          break;
        case 1:
          phi1[q] =
              0.7 * std::sin(2.0 * x[0] + 0.3) - 0.4 * std::cos(x[1] - 1.1);
          break;
        default:
          phi1[q] = 0.5 * std::cos(x[0] - x[1] + 1.1) +
                    0.3 * std::sin(x[0] + 2.0 * x[1]);
          break;
      }
    }
    const SpectralScalarField ph = transform_forward(phi1);
    SpectralVectorField vs(g, 3);
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                     const std::array<double, 3>& kv) {
      if (has_nyquist(g, n)) return;
      vs.comp[0][flat] = -cplx(0.0, kv[1]) * ph.coef[flat];
      vs.comp[1][flat] = cplx(0.0, kv[0]) * ph.coef[flat];
    });
    const VectorField vfield = transform_inverse(vs);
    ScalarField phi(g);
    for (std::int64_t q = 0; q < g.points(); ++q) phi[q] = phi1[q] / nu;
    const ScalarField psi(g);
    worst = std::max(
        worst, representation_residual(b, phi, psi, vfield, f, nu).max_abs);
  }

  CriterionResult r;
  r.index = 8;
  r.name = "planar triple representation residual";
  r.seconds = timer.seconds();
  r.pass = worst <= 1e-10;
  r.detail = strf("max residual %.1e <= 1e-10 over 3 stream functions", worst);
  return r;
}

// 9: flux-form estimator against the curl of the pullback estimator.
CriterionResult crit_fk_surface(int threads) {
  Timer timer;
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const double nu = 0.2, T = 0.2, s = 0.1;
  const auto G0h = random_solenoidal(g, 5, 2, 1.0);
  const VectorField g0 = transform_inverse(G0h);
  const VectorField f0 = transform_inverse(curl3(G0h));
  const auto v = TimeDependentVelocity::frozen(taylor_green_embedded(nu), 0.0);

  FkConfig fc;
  fc.n_paths = 10000;
  fc.dt = 0.01;
  fc.seed = 47;
  fc.threads = threads;
  const FkEstimate surf = fk_surface(f0, &v, nu, T, s, fc);
  const FkEstimate curve = fk_curve(g0, &v, nu, T, s, fc);
  const VectorField curled =
      transform_inverse(curl3(transform_forward(curve.field)));
  const FkComparison cmp = compare_to_reference(surf, curled);
  const double bound = 3.0 * std::hypot(se_h_norm(surf),
                                        curled_se_h_bound(curve));

  CriterionResult r;
  r.index = 9;
  r.name = "flux-form vs curled pullback estimator";
  r.seconds = timer.seconds();
  r.pass = cmp.gap_h <= bound;
  r.detail = strf("gap %.4f <= 3 combined SE = %.4f", cmp.gap_h, bound);
  return r;
}

// 10: projection algebra, container round trip, determinism, SE scaling.
CriterionResult crit_infrastructure() {
  Timer timer;
  bool pass = true;
  std::string detail;

  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  auto mixed = [&](std::uint64_t s1, std::uint64_t s2) {
    SpectralVectorField f = random_solenoidal(g, s1, 3, 1.0);
    const SpectralVectorField gr = grad(random_scalar(g, s2, 3, 1.0));
    for (int c = 0; c < f.ncomp(); ++c)
      for (size_t i = 0; i < f.comp[c].size(); ++i)
        f.comp[c][i] += gr.comp[c][i];
    return f;
  };
  const auto f = mixed(101, 102);
  const auto h = mixed(103, 104);
  const auto pf = helmholtz_project(f);
  const auto ph = helmholtz_project(h);
  const double idem = coef_gap(helmholtz_project(pf), pf);
  const double adj = std::abs(inner_product_H(pf, h) - inner_product_H(f, ph)) /
                     std::max({std::abs(inner_product_H(pf, h)), 1e-14});
  pass = pass && idem <= 1e-10 && adj <= 1e-10;
  detail += strf("projection idem %.1e, adj %.1e <= 1e-10", idem, adj);

  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / "vecadvect-acceptance";
  fs::create_directories(tmp);
  const VectorField sample = transform_inverse(mixed(105, 106));
  const std::string p1 = (tmp / "a.vaf1").string();
  const std::string p2 = (tmp / "b.vaf1").string();
  write_vaf1(p1, sample);
  const VectorField back = read_vaf1(p1);
  write_vaf1(p2, back);
  const bool roundtrip =
      fields_identical(sample, back) && file_bytes(p1) == file_bytes(p2);
  pass = pass && roundtrip;
  detail += strf("; container round trip %s", roundtrip ? "exact" : "FAIL");
  fs::remove_all(tmp);

  FkConfig fc;
  fc.n_paths = 500;
  fc.dt = 0.01;
  fc.seed = 900;
  const VectorField f0 = transform_inverse(random_solenoidal(g, 107, 2, 1.0));
  const FkEstimate a1 = fk_curve(f0, nullptr, 0.2, 0.2, 0.2, fc);
  const FkEstimate a2 = fk_curve(f0, nullptr, 0.2, 0.2, 0.2, fc);
  const bool identical = fields_identical(a1.field, a2.field);
  pass = pass && identical;
  detail += strf("; same-seed rerun %s", identical ? "bit-identical" : "FAIL");

  FkConfig f4 = fc;
  f4.n_paths = 2000;
  f4.seed = 901;
  const FkEstimate a4 = fk_curve(f0, nullptr, 0.2, 0.2, 0.2, f4);
  const double slope = std::log(se_h_norm(a4) / se_h_norm(a1)) /
                       std::log(double(f4.n_paths) / fc.n_paths);
  pass = pass && std::abs(slope + 0.5) <= 0.05;
  detail += strf("; SE slope %.3f in -0.5 +/- 0.05", slope);

  CriterionResult r;
  r.index = 10;
  r.name = "infrastructure invariants";
  r.seconds = timer.seconds();
  r.pass = pass;
  r.detail = detail;
  return r;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace

So3Battery run_so3_battery(std::uint64_t seed, int exp_trials, int bch_pairs,
                           int correction_fields, int correction_points) {
  So3Battery b;
  std::uint64_t state = seed ? seed : 1;

  for (int i = 0; i < exp_trials; ++i) {
    const Vec3 a = random_vec(state, 3.0);
    b.exp_gap = std::max(b.exp_gap, max_abs_m(exp_so3(a) - series_exp(a)));
  }

  for (int i = 0; i < bch_pairs; ++i) {
    const Vec3 u = random_vec(state, 1.0);
    const Vec3 v = random_vec(state, 1.0);
    const Mat3 prod = exp_so3(u) * exp_so3(v);
    b.bch_gap = std::max(b.bch_gap, (bch(u, v).w - quat_log(prod)).norm());
  }

  const std::array<double, 3> box{kTau, kTau, kTau};
  const double hstep = 1e-5;
  for (int fidx = 0; fidx < correction_fields; ++fidx) {
    const auto field =
        random_rotation_algebra_field(box, seed * 131 + fidx, 3, 2, 1.2);
    for (int p = 0; p < correction_points; ++p) {
      const std::array<double, 3> x{kTau * lcg_unit(state),
                                    kTau * lcg_unit(state),
                                    kTau * lcg_unit(state)};
      Vec3 a;
      Mat3 da;
      field.eval(x, a, da);
      const Mat3 sigma = exp_so3(a);
      for (int k = 0; k < 3; ++k) {
        auto xp = x, xm = x;
        xp[k] += hstep;
        xm[k] -= hstep;
        const Mat3 fd = (exp_so3(field.value(xp)) - exp_so3(field.value(xm))) /
                        (2.0 * hstep);
        b.correction_gap = std::max(
            b.correction_gap,
            max_abs_m(fd * sigma.transpose() - correction_term(a, da.col(k))));
      }
    }
  }

  for (int i = 0; i < 20; ++i) {
    const Vec3 dir = random_vec(state, 1.0).normalized();
    const Vec3 da = random_vec(state, 2.0);
    const Mat3 below = correction_term((1e-6 * (1.0 - 1e-8)) * dir, da);
    const Mat3 above = correction_term((1e-6 * (1.0 + 1e-8)) * dir, da);
    b.branch_gap = std::max(b.branch_gap, max_abs_m(below - above));
  }

  b.pass = b.exp_gap <= 1e-12 && b.bch_gap <= 1e-8 &&
           b.correction_gap <= 1e-6 && b.branch_gap <= 1e-9;
  return b;
}

std::vector<CriterionResult> run_acceptance_suite(int threads) {
  if (threads < 1) throw ConfigError("acceptance: threads must be positive");
  std::vector<CriterionResult> out;
  auto guard = [&out](int index, const char* name, auto&& fn) {
    Timer timer;
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.index = index;
      r.name = name;
      r.pass = false;
      r.seconds = timer.seconds();
      r.detail = strf("exception: %s", e.what());
    }
    out.push_back(r);
    print_criterion(out.back());
  };
  guard(1, "duality pairing conservation", crit_pairing);
  guard(2, "duality relation gap", crit_relation);
  guard(3, "planar vortex duality and decay", crit_serrin);
  guard(4, "pullback estimator vs spectral solver",
        [threads] { return crit_fk_standard(threads); });
  guard(5, "rotated-noise representation",
        [threads] { return crit_fk_rotated(threads); });
  guard(6, "circulation martingale", crit_martingale);
  guard(7, "rotation toolkit oracles", crit_so3);
  guard(8, "planar triple representation residual", crit_representation);
  guard(9, "flux-form vs curled pullback estimator",
        [threads] { return crit_fk_surface(threads); });
  guard(10, "infrastructure invariants", crit_infrastructure);
  return out;
}

void print_criterion(const CriterionResult& r) {
  std::printf("%s %2d %-40s %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.index,
              r.name.c_str(), r.detail.c_str(), r.seconds);
  std::fflush(stdout);
}

void write_suite_summary(const std::string& csv_path,
                         const std::vector<CriterionResult>& results) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + csv_path);
  out << "index,name,pass,seconds,detail\n";
  for (const auto& r : results)
    out << r.index << ',' << csv_quote(r.name) << ',' << (r.pass ? 1 : 0)
        << ',' << strf("%.3f", r.seconds) << ',' << csv_quote(r.detail)
        << '\n';
}

}  // namespace vecadvect

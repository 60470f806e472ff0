#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "vecadvect/analytic.hpp"
#include "vecadvect/duality.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"

using namespace vecadvect;

namespace {
constexpr double kTau = 6.283185307179586476925286766559;
}

TEST_CASE("pairing of forward and adjoint states is conserved") {
  {
    const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
    const auto F0 = random_solenoidal(g, 7101, 3, 1.0);
    const auto G0 = random_solenoidal(g, 7102, 3, 1.0);
    const auto v = TimeDependentVelocity::frozen(abc_flow(1.0, 1.0, 1.0), 0.0);
    SolverConfig cfg{0.05, 5e-3, Scheme::IFRK4, true, false};
    const PairingTrace tr = pairing_trace(F0, G0, v, 0.1, cfg, 10);
    CHECK(tr.pairing.size() == 11);
    CHECK(tr.deviation < 1e-7);
  }
  {
    // time-dependent advecting velocity
    const Grid g = Grid::make2d(32, 32, kTau, kTau);
    const auto F0 = random_solenoidal(g, 7103, 4, 1.0);
    const auto G0 = random_solenoidal(g, 7104, 4, 1.0);
    const auto v = TimeDependentVelocity::analytic(taylor_green_2d(0.1));
    SolverConfig cfg{0.1, 2e-3, Scheme::IFRK4, true, false};
    const PairingTrace tr = pairing_trace(F0, G0, v, 0.1, cfg, 5);
    CHECK(tr.deviation < 1e-7);
  }
}

TEST_CASE("pairing conservation is structural, masking changes the states") {
  // The conserved pairing cancels pointwise on the grid, so it survives
  // aliasing; the mask still changes the computed states once products leave
  // the band (band 5 data against a band 5 velocity reaches mode 10 on a
  // 16-point axis).
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto F0 = random_solenoidal(g, 7105, 5, 1.0);
  const auto G0 = random_solenoidal(g, 7106, 5, 1.0);
  const auto v = TimeDependentVelocity::sampled(
      {transform_inverse(random_solenoidal(g, 7107, 5, 2.0))}, 0.0, 0.0);
  SolverConfig clean{0.05, 2e-3, Scheme::IFRK4, true, false};
  SolverConfig dirty{0.05, 2e-3, Scheme::IFRK4, false, false};
  const double dev_clean = pairing_trace(F0, G0, v, 0.1, clean, 5).deviation;
  const double dev_dirty = pairing_trace(F0, G0, v, 0.1, dirty, 5).deviation;
  CHECK(dev_clean < 1e-9);
  CHECK(dev_dirty < 1e-9);
  const auto masked = transport(F0, v, 0.1, clean);
  const auto unmasked = transport(F0, v, 0.1, dirty);
  double diff = 0.0;
  for (int c = 0; c < 2; ++c)
    for (size_t i = 0; i < masked.comp[c].size(); ++i)
      diff = std::max(diff, std::abs(masked.comp[c][i] - unmasked.comp[c][i]));
  CHECK(diff > 1e-8);
}

TEST_CASE("transported-pair identity relating the two evolutions") {
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const auto v = TimeDependentVelocity::frozen(abc_flow(1.0, 1.0, 1.0), 0.0);
  SolverConfig cfg{0.05, 5e-3, Scheme::IFRK4, true, false};
  for (std::uint64_t s : {11u, 12u, 13u}) {
    const auto F0 = random_solenoidal(g, 9000 + s, 3, 1.0);
    const auto G0 = random_solenoidal(g, 9100 + s, 3, 1.0);
    const DualityRelation r = duality_relation(F0, G0, v, 0.2, cfg);
    CHECK(r.gap < 1e-6);
    CHECK(std::abs(r.lhs) > 1e-6);  // non-degenerate data
  }
}

TEST_CASE("planar vortex lattice: self-consistency of the generic reduction") {
  const Grid g = Grid::make3d(16, 16, 8, kTau, kTau, kTau);
  SolverConfig cfg{0.1, 2e-3, Scheme::IFRK4, true, false};
  const SerrinResult r = serrin_experiment(g, 0.1, 0.2, cfg, 2, 4100);
  CHECK(r.pairing_gap < 1e-6);
  CHECK(r.ratio_error < 1e-8);
  CHECK(std::abs(r.expected_ratio - std::exp(-0.04)) < 1e-15);
}

TEST_CASE("helicity: beltrami closed form and planar exactness") {
  const Grid g = Grid::make3d(16, 16, 16, kTau, kTau, kTau);
  const double A = 1.0, B = 0.8, C = 0.5;
  const auto u = abc_flow(A, B, C)->sample(g, 0.0);
  const double vol = kTau * kTau * kTau;
  const double expected = vol * (A * A + B * B + C * C);
  CHECK(std::abs(helicity(u) - expected) < 1e-9 * expected);
  const auto uh = transform_forward(u);
  CHECK(std::abs(helicity(uh) - inner_product_H(uh, uh)) <
        1e-9 * expected);  // curl u = u

  const auto planar = taylor_green_embedded(0.1)->sample(g, 0.0);
  CHECK(helicity(planar) == 0.0);
}

TEST_CASE("parabolic rescaling: round trip and dilated evolution") {
  const Grid g = Grid::make2d(16, 16, kTau, kTau);
  const auto F0 = random_solenoidal(g, 7301, 2, 1.0);
  SolverConfig cfg{0.1, 2.5e-3, Scheme::IFRK4, true, false};
  const ScalingCheck c = scaling_checks(F0, taylor_green_2d(0.1), 2.0, 0.05, cfg);
  CHECK(c.roundtrip == 0.0);
  // The spectral stepping commutes with the dilation bit for bit; the only
  // residue is one physical/spectral round trip on the input.
  CHECK(c.intertwine < 1e-14);

  // non power of two: still correct, just not bitwise
  const ScalingCheck c3 =
      scaling_checks(F0, taylor_green_2d(0.1), 0.5, 0.02, cfg);
  CHECK(c3.roundtrip < 1e-15);
  CHECK(c3.intertwine < 1e-11);
}

TEST_CASE("gram matrices of paired evolutions coincide") {
  const Grid g = Grid::make3d(12, 12, 12, kTau, kTau, kTau);
  const auto v = TimeDependentVelocity::frozen(abc_flow(0.8, 1.0, 0.6), 0.0);
  SolverConfig cfg{0.08, 5e-3, Scheme::IFRK4, true, false};
  const NormDualityProbe p = norm_duality_probe(g, 3, v, 0.1, cfg, 5150);
  CHECK(p.max_entry_gap < 1e-7);
  CHECK(p.quotient_gap < 1e-7);
}

TEST_CASE("zero velocity turns the pairing into pure heat factors") {
  const Grid g = Grid::make3d(12, 12, 12, kTau, kTau, kTau);
  const auto phi = transform_forward(
      single_mode(3, {2, 1, 0}, {0.2, 0.4, 0.0}, {0.0, 0.1, 0.3},
                  {kTau, kTau, kTau})
          ->sample(g, 0.0));
  const auto v = TimeDependentVelocity::analytic(
      zero_field(3, {kTau, kTau, kTau}));
  SolverConfig cfg{0.2, 5e-3, Scheme::IFRK4, true, false};
  const double T = 0.1;
  const auto phiT = transport(phi, v, T, cfg);
  const double lhs = inner_product_H(phi, phiT);
  const double k2 = 4.0 + 1.0;
  const double rhs = std::exp(-0.2 * k2 * T) * inner_product_H(phi, phi);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(rhs));
}

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vecadvect/field.hpp"
#include "vecadvect/flows.hpp"
#include "vecadvect/velocity.hpp"

namespace vecadvect {

// Monte Carlo settings for the field estimators. Every grid node runs its own
// batch of n_paths paths with streams keyed (seed, node, path), node being the
// flat grid index, so any node subset can be recomputed independently and
// results do not depend on the thread count. crn switches all nodes to one
// shared stream key: estimates at different nodes then see identical
// increments, which turns differences of estimates into smooth fields.
struct FkConfig {
  int n_paths = 1000;
  double dt = 0.01;
  std::uint64_t seed = 0;
  bool crn = false;
  int threads = 1;
  double det_low = 1e-6;
  double det_high = 1e6;
  double max_flag_fraction = 0.01;
};

struct FkEstimate {
  VectorField field;  // estimated F(s, .) on the grid
  VectorField se;     // per node and component standard error of the mean
  std::array<double, 3> se_summary{};  // rms standard error per component
  std::int64_t n_paths = 0;            // per node
  RotationKind kind = RotationKind::Identity;
  std::int64_t n_flagged = 0;
  // max over nodes of the sample mean of |Q|^(1+beta), beta = 1; reported as
  // an integrability monitor, finitely many paths cannot verify the bound.
  double moment_beta1 = 0.0;
};

// Pullback estimator over the identity-noise flow dX = v dt + sqrt(2 nu) dW
// on the window [T-s, T]: per path Q^j(x) = sum_i F0^i(X(T)) dX^i(T)/dx_j,
// estimate = helmholtz_project(grid mean of Q), projection applied to the
// assembled field, never per path. s = 0 is the zero-length window and
// reproduces F0. With a genuinely time-dependent v the estimate solves the
// advection equation driven by v(T - .); for frozen v both readings agree.
// F0 is evaluated off-grid through its Fourier modes, so the cost per path
// grows with the number of nonzero modes of F0.
FkEstimate fk_curve(const VectorField& F0, const TimeDependentVelocity* v,
                    double nu, double T, double s, const FkConfig& cfg);

// Same pullback over the drift-free rotated flow built from the stream
// function phi of v = perp_grad(phi). The one-point law of that flow is a
// plain Brownian motion, yet the estimate solves the same equation as
// fk_curve: the representation is not unique.
FkEstimate fk_rot2d(const VectorField& F0, const ScalarField& phi, double nu,
                    double T, double s, const FkConfig& cfg);

// Surface (flux form) estimator, dim 3: per path Q_i = sum_j F0^j(X(T))
// times the (j,i) cofactor of grad X, i.e. Q = cof(grad X)^T F0(X). The mean
// is reported unprojected, mirroring the flux representation. F0 should be
// divergence free (a curl); then fk_surface(curl G0) agrees with
// curl(fk_curve(G0)) in the mean.
FkEstimate fk_surface(const VectorField& F0_curl_form,
                      const TimeDependentVelocity* v, double nu, double T,
                      double s, const FkConfig& cfg);

struct FkComplexReport {
  FkEstimate estimate;  // reconstruction through the complex variables
  // largest gap between the integrated pair (p, q) and the linear image of
  // the real gradient state, over all nodes, paths and steps
  double max_state_gap = 0.0;
  // largest entrywise gap between the reconstruction and fk_rot2d at the
  // same seed
  double max_estimate_gap = 0.0;
  double tolerance = 1e-10;
  bool pass = false;
};

// Integrates the Wirtinger pair p = dZ/dz_bar, q = dZ_bar/dz_bar of the
// rotated flow Z = X^1 + i X^2,
//
//   dp = (conj(v) p - v q) dZ / (4 nu),  p(start) = 0,
//   dq = (v q - conj(v) p) dconj(Z) / (4 nu),  q(start) = 1,
//
// with v = v^1 + i v^2, alongside the real flow (same increments), and
// reconstructs F = helmholtz_project(E[conj(F0)(Z) p + F0(Z) q]) with
// F0 = F0^1 + i F0^2. The pair is the linear image
// p = ((a-d) + i(b+c))/2, q = ((a+d) + i(b-c))/2 of the real gradient
// [[a,b],[c,d]], and the Euler update commutes with that map, so both the
// states and the final estimate must match the real route to roundoff.
FkComplexReport fk_complex_check(const VectorField& F0, const ScalarField& phi,
                                 double nu, double T, double s,
                                 const FkConfig& cfg);

// Cofactor matrix of a row-major 3x3 matrix: out_ij = (-1)^(i+j) times the
// minor with row i and column j removed; equals det(j) * inverse(j)^T.
void cofactor3(const double* j, double* out);

struct FkComparison {
  double gap_h = 0.0;  // H norm of a - b
  double se_h = 0.0;   // combined H-norm standard error
  double ref_h = 0.0;  // H norm of the second argument
  std::vector<double> node_gap;  // per node, euclidean over components
  std::vector<double> node_se;   // per node, combined over both estimates
};

FkComparison compare_estimates(const FkEstimate& a, const FkEstimate& b);
FkComparison compare_to_reference(const FkEstimate& a, const VectorField& ref);

// H-norm standard error of the assembled estimate; node batches are
// independent, so E ||est - E est||_H^2 = cell_volume * sum of node variances.
double se_h_norm(const FkEstimate& est);

// Upper bound on the H-norm standard error of curl(est.field): independent
// node noise has a flat spectrum, so the curl multiplier costs at most the
// rms wavenumber over the grid modes.
double curled_se_h_bound(const FkEstimate& est);

}  // namespace vecadvect

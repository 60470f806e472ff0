#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "vecadvect/field.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/pde.hpp"
#include "vecadvect/rng.hpp"
#include "vecadvect/so3.hpp"
#include "vecadvect/velocity.hpp"

namespace vecadvect {

// Noise coefficient sigma_1 of the particle SDE
//
//   dX = v(t,X) dt + sqrt(2 nu) sigma_1(X) dW.
//
// Identity keeps plain increments. The 2d kinds rotate the increment in the
// plane by a pointwise angle: Rot2DSameLaw applies the stored angle as is and
// keeps the drift, which leaves the law of X unchanged; Rot2DBrownian drops
// the drift and rotates by -phi(x)/(2 nu) with v = perp_grad(phi), so X is a
// Brownian motion (scaled by sqrt(2 nu)) in law while the derivative system
// carries the transport. Rot3DBlock rotates the first two increment
// components about e3; Rot3DExp uses sigma_1 = exp(hat(a(x))).
enum class RotationKind {
  Identity,
  Rot2DSameLaw,
  Rot2DBrownian,
  Rot3DBlock,
  Rot3DExp,
};

struct RotationSpec {
  RotationKind kind = RotationKind::Identity;
  SparseModes angle;     // 2d kinds and Rot3DBlock: pointwise rotation angle
  SparseModes velocity;  // Rot2DBrownian: perp_grad of the stream function
  std::shared_ptr<const RotationAlgebraField> axis;  // Rot3DExp
  // Maps the raw angle form of correction_term_integrand back to physical
  // units; brownian_rotation sets -2 nu to undo its angle prescale.
  double correction_scale = 1.0;

  bool drift() const { return kind != RotationKind::Rot2DBrownian; }
  bool rotates() const { return kind != RotationKind::Identity; }
  // 0 when the kind places no constraint (Identity), else 2 or 3.
  int required_dim() const;
  // Box the rotation data lives on; zeros for Identity.
  std::array<double, 3> box() const;
};

RotationSpec identity_rotation();
// angle is applied to the increment directly and the drift is kept.
RotationSpec same_law_rotation(const ScalarField& angle);
// Drift-free flow rotating by -phi/(2 nu); the velocity perp_grad(phi) is
// kept for the pathwise derivative system. The Ito coupling between the
// rotated increments and the derivative update is what transports the field:
// per step the derivative picks up (1/(2 nu)) K(dX) with
//   K(dX) = [[ v2 dX2, -v1 dX2], [-v2 dX1, v1 dX1]],
// and the cross-variation of K(dX) with F(X) reproduces the advection
// -v x curl F in the mean. The angle scale is pinned by that cancellation:
// a rotation by alpha phi / nu yields 2 alpha (v x curl F), so alpha = -1/2.
RotationSpec brownian_rotation(const ScalarField& phi, double nu);
// 3d rotation of the (1,2) increment components about e3 by angle(x).
RotationSpec block_rotation(const ScalarField& angle);
RotationSpec exp_rotation(RotationAlgebraField axis);

struct FlowConfig {
  double nu = 0.0;  // >= 0; zero turns the noise off entirely
  double dt = 0.0;
  int n_paths = 1;
  std::uint64_t seed = 0;
  RotationSpec rotation;
  bool with_gradients = false;
  // det(grad X) leaving [det_low, det_high] flags the path as unreliable.
  double det_low = 1e-6;
  double det_high = 1e6;
  // A single drift displacement longer than this raises NumericalGuard.
  // 0 disables the guard; entry points that know the periodic box set it to
  // half the shortest side.
  double guard_length = 0.0;

  void validate(int dim) const;
};

// Paths started from one point. Streams are addressed (seed, node, path), so
// batches for different nodes and different path indices never share draws,
// and rerunning any subset reproduces it bit for bit.
struct PathBatch {
  int dim = 0;
  int n_paths = 0;
  double time = 0.0;
  std::uint32_t step = 0;  // rng step counter consumed so far
  std::vector<double> positions;   // n_paths x dim, unwrapped
  std::vector<double> gradients;   // n_paths x dim x dim row major, optional
  std::vector<std::uint8_t> flagged;

  std::int64_t n_flagged() const;
  double* position(int p) { return positions.data() + std::size_t(p) * dim; }
  const double* position(int p) const {
    return positions.data() + std::size_t(p) * dim;
  }
};

PathBatch make_batch(const double* x0, int dim, const FlowConfig& cfg);

// One Euler-Maruyama step for every path of the batch, drawing increments at
// counter (seed, node, path, batch.step). When gradients are enabled they are
// advanced with the realized increments of the same step, as the exact
// Jacobian of the discrete position update.
void step_ensemble(PathBatch& batch, const TimeDependentVelocity* v,
                   const FlowConfig& cfg, std::uint32_t node);

PathBatch simulate_paths(const double* x0, int dim,
                         const TimeDependentVelocity* v, const FlowConfig& cfg,
                         std::uint32_t node, double t0, double t1);

// Ordered cycle of at least 16 points; consecutive points (including the
// wrap-around pair) must be distinct.
struct Contour {
  int dim = 0;
  std::vector<double> points;  // m x dim row major

  int size() const { return dim > 0 ? int(points.size()) / dim : 0; }
  const double* point(int i) const { return points.data() + std::size_t(i) * dim; }

  static Contour circle(const std::array<double, 2>& center, double radius,
                        int m);
  // Circle in the plane spanned by span1, span2 (orthonormalized here).
  static Contour circle3(const std::array<double, 3>& center, double radius,
                         const std::array<double, 3>& span1,
                         const std::array<double, 3>& span2, int m);
};

void validate_contour(const Contour& gamma);

// Every point of a path sees the same Wiener increments (node kContourNode),
// so the transported polygon stays a closed curve of the same flow map.
struct ContourEnsemble {
  int dim = 0;
  int n_paths = 0;
  int m = 0;
  double time = 0.0;
  std::vector<double> positions;  // [path][point][dim]
  std::vector<double> gradients;  // [path][point][dim*dim], optional

  const double* path_points(int p) const {
    return positions.data() + std::size_t(p) * m * dim;
  }
};

ContourEnsemble transport_contour(const Contour& gamma,
                                  const TimeDependentVelocity* v,
                                  const FlowConfig& cfg, double t0, double t1);

using FieldEvaluator = std::function<void(const double* x, double* f)>;

// Loop integral sum_i f(midpoint_i) . (x_{i+1} - x_i) over the closed
// polygon; exact for fields linear along each chord.
double circulation(const double* pts, int m, int dim, const FieldEvaluator& f);
double circulation(const double* pts, int m, int dim, const SparseModes& f);
double circulation(const Contour& gamma, const VectorField& f);

struct MartingaleCheckpoint {
  double t = 0.0;
  double mean_delta = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct MartingaleResult {
  double start_value = 0.0;  // loop integral at the start time (deterministic)
  std::vector<MartingaleCheckpoint> checkpoints;
  bool pass = true;
};

// Transports gamma by the flow on [T-s, T] and checks that the mean of
// M(t) = loop integral of F(T-t, .) over the transported contour stays at its
// start value: |mean drift| <= 3 SE + bias_allowance * dt * (t - t0) at each
// checkpoint. F(T-t) comes from the trajectory snapshots, interpolated
// linearly in time and evaluated off-grid through its Fourier modes.
MartingaleResult martingale_test(const Contour& gamma, const Trajectory& traj,
                                 const TimeDependentVelocity* v, double T,
                                 double s, const FlowConfig& cfg,
                                 int n_checkpoints = 5,
                                 double bias_allowance = 1.0);

struct OnePointLawResult {
  int dim = 0;
  std::int64_t n_paths = 0;
  double expected_var = 0.0;  // 2 nu T per component
  std::array<double, 3> mean{};
  std::array<double, 3> mean_se{};
  std::array<std::array<double, 3>, 3> cov{};
  std::array<std::array<double, 3>, 3> cov_se{};
  std::array<double, 3> kurtosis{};
  double kurtosis_se = 0.0;  // gaussian reference sqrt(24/n)
  bool pass = true;
};

// Tests that the displacement X(T) - x0 is a centered gaussian with
// covariance 2 nu T I: componentwise mean within 3 SE of zero, covariance
// entries within 3 SE of the target, fourth-moment ratio within 3 SE of 3.
// Meaningful for flows whose law is Brownian (Rot2DBrownian, or Identity
// with v = 0).
OnePointLawResult one_point_law_test(const double* x0, int dim,
                                     const TimeDependentVelocity* v,
                                     const FlowConfig& cfg, double T);

// Ito correction produced by the rotated noise, as a loop integral over
// gamma. 2d kinds: integral of (d2 f1 - d1 f2) d(angle), times the spec's
// correction_scale; for brownian_rotation that undoes the angle prescale, so
// the value equals the circulation of (v . grad) f - (grad f)^T v. Rot3DBlock
// and Rot3DExp: integral of sum_k (curl f, w_k) dx_k where hat(w_k) =
// (d_k sigma_1) sigma_1^T. The polygon sum is Richardson-extrapolated
// against its half mesh (even-indexed points), so the point count must be
// even; plain midpoint sums stall at O(m^-2) while the extrapolated value
// tracks the exact integral, which vanishes when the integrand is a closed
// form. Identity returns 0.
double correction_term_integrand(const Contour& gamma,
                                 const SpectralVectorField& f,
                                 const RotationSpec& rot);
// Same 3d integrand with the rotation axis field given as Fourier modes.
double correction_term_integrand(const Contour& gamma,
                                 const SpectralVectorField& f,
                                 const SparseModes& axis);

// Raises NumericalGuard when flagged/total exceeds max_fraction.
void enforce_flag_budget(std::int64_t flagged, std::int64_t total,
                         double max_fraction = 0.01);

}  // namespace vecadvect

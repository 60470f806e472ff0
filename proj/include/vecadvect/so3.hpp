#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vecadvect/field.hpp"

namespace vecadvect {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// hat(u) y = u x y; vee is its inverse and rejects input whose symmetric
// part exceeds 1e-12 in max norm.
Mat3 hat(const Vec3& u);
Vec3 vee(const Mat3& m);

// Rodrigues rotation about axis a by angle |a|; series-expanded coefficients
// below |a| = 1e-8.
Mat3 exp_so3(const Vec3& a);

// Principal axis-angle extraction, |result| in [0, pi].
Vec3 log_so3(const Mat3& r);

struct BchResult {
  Vec3 w;
  // True when the arc-sine argument of the composite-angle formula had to be
  // clamped into [-1, 1]; the result is still within rounding of the branch.
  bool clamped = false;
};

// w with exp(hat(w)) = exp(hat(u)) exp(hat(v)) on the principal branch.
// Inputs with |u| or |v| >= pi - 1e-6, or a composite angle that close to
// pi, raise NumericalGuard.
BchResult bch(const Vec3& u, const Vec3& v);

// Angular rates of sigma = exp(hat(a)) under a perturbation da of a:
// hat(spatial) = (d sigma) sigma^T and hat(body) = sigma^T (d sigma).
// Both are smooth through |a| = 0 (series branch below 1e-6).
Vec3 rotation_rate_spatial(const Vec3& a, const Vec3& da);
Vec3 rotation_rate_body(const Vec3& a, const Vec3& da);

// The circulation correction matrix (d_k sigma) sigma^T for
// sigma = exp(hat(a)), with da the derivative of a along axis k.
// Equals hat(rotation_rate_spatial(a, da)); antisymmetric by construction.
Mat3 correction_term(const Vec3& a, const Vec3& da);

// Axis-angle form (1-cos|a|) hat(b x db) + sin|a| hat(db) + hat(b) d|a|
// with b = a/|a|; requires |a| > 0. Agrees with correction_term to 1e-12.
Mat3 correction_term_axis_form(const Vec3& a, const Vec3& da);

struct RotationAlgebraTerm {
  std::array<int, 3> mode{0, 0, 0};
  double phase = 0.0;
  Vec3 amplitude = Vec3::Zero();
};

// Band-limited so(3)-axis field a(x) = sum_j amp_j cos(k_j . x + phase_j)
// with exact closed-form derivatives, periodic over the box.
class RotationAlgebraField {
 public:
  RotationAlgebraField(const std::array<double, 3>& box,
                       std::vector<RotationAlgebraTerm> terms);

  // da(i, k) = d a_i / d x_k.
  void eval(const std::array<double, 3>& x, Vec3& a, Mat3& da) const;
  Vec3 value(const std::array<double, 3>& x) const;

  const std::array<double, 3>& box() const { return box_; }
  const std::vector<RotationAlgebraTerm>& terms() const { return terms_; }
  // Upper bound sum_j |amp_j| on max |a(x)|.
  double amplitude_bound() const;

 private:
  std::array<double, 3> box_;
  std::vector<RotationAlgebraTerm> terms_;
};

RotationAlgebraField random_rotation_algebra_field(
    const std::array<double, 3>& box, std::uint64_t seed, int n_terms,
    int max_mode, double amplitude);

// Connection one-form sampled on a 3D grid; comp[k] holds vee(A_k).
struct ConnectionOneForm {
  Grid grid;
  std::array<VectorField, 3> comp;
};

// Samples A_k = sigma^T d_k sigma for sigma = exp(hat(a)); this orientation
// satisfies the component system d a_1 = a_3 ^ a_2 (and cyclic) exactly.
ConnectionOneForm connection_of_rotation_field(const RotationAlgebraField& field,
                                               const Grid& g);

struct FlatConnectionResidual {
  // Residual vectors r_kl = d_k alpha_l - d_l alpha_k + alpha_k x alpha_l
  // for axis pairs (0,1), (0,2), (1,2); identically zero iff the form is flat.
  std::array<VectorField, 3> pair_residual;
  double max_abs = 0.0;
};

FlatConnectionResidual flat_connection_residual(const ConnectionOneForm& conn);

struct RepresentationResidual {
  VectorField residual;
  double max_abs = 0.0;
};

// Pointwise residual of the axis/angle/potential system that ties a rotated
// noise field to the advection nonlinearity:
//   r_k = (cos phi - 1)(curl F . (b x d_k b)) + sin phi (curl F . d_k b)
//       + (curl F . b) d_k phi + d_k psi - (v x curl F)_k / nu.
// b must be unit-length pointwise (to 1e-10); all fields share one 3D grid.
RepresentationResidual representation_residual(const VectorField& b,
                                               const ScalarField& phi,
                                               const ScalarField& psi,
                                               const VectorField& v,
                                               const VectorField& f, double nu);

}  // namespace vecadvect

#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "vecadvect/field.hpp"

namespace vecadvect {

// Closed-form, possibly time-dependent vector field on a periodic box.
class AnalyticVectorField {
 public:
  virtual ~AnalyticVectorField() = default;
  virtual int dim() const = 0;
  virtual int ncomp() const { return dim(); }
  // Fills v[ncomp]; when jac is non-null also fills row-major d v_i/d x_j
  // (ncomp x dim).
  virtual void eval(double t, const double* x, double* v,
                    double* jac = nullptr) const = 0;
  // Box the closed form is periodic on; sampling on a mismatched box is an
  // error since the samples would not be periodic.
  virtual std::array<double, 3> box() const = 0;

  VectorField sample(const Grid& g, double t) const;
  bool box_matches(const Grid& g) const;
};

using AnalyticPtr = std::shared_ptr<const AnalyticVectorField>;

// u(t,x,y) = exp(-2 nu t) (-cos x sin y, sin x cos y) on [0,2pi)^2.
// Solves both the heat equation and the 2d Navier-Stokes system.
AnalyticPtr taylor_green_2d(double nu);

// u = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x) on [0,2pi)^3;
// Beltrami: curl u = u.
AnalyticPtr abc_flow(double a, double b, double c);

// Same plan-form as taylor_green_2d embedded as (u1,u2,0) on [0,2pi)^3,
// independent of the third coordinate.
AnalyticPtr taylor_green_embedded(double nu);

// Real solenoidal single mode u(x) = 2 Re[(p + i q) exp(i k.x)] with
// k = 2 pi n / L; p and q are projected orthogonal to k at construction.
AnalyticPtr single_mode(int dim, const std::array<int, 3>& n,
                        const std::array<double, 3>& amplitude_re,
                        const std::array<double, 3>& amplitude_im,
                        const std::array<double, 3>& box);

// u = (A sin(2 pi x2/L2), 0[, 0]) : unidirectional shear.
AnalyticPtr shear_flow(int dim, double amplitude,
                       const std::array<double, 3>& box);

AnalyticPtr zero_field(int dim, const std::array<double, 3>& box);

// v(t,x) = lambda * inner(lambda^2 t, lambda x); the parabolic rescaling of a
// velocity field.
AnalyticPtr scaled_velocity(AnalyticPtr inner, double lambda);

// Band-limited random solenoidal field, reproducible from the seed: complex
// gaussian coefficients on modes 0 < |n_j| <= max_mode inside the dealias
// band, projected divergence free, hermitized, scaled to |f|_H = norm.
// With embed2d_in_3d the field has 3 components depending on x1,x2 only and
// zero third component.
SpectralVectorField random_solenoidal(const Grid& g, std::uint64_t seed,
                                      int max_mode, double norm,
                                      bool embed2d_in_3d = false);

// Random scalar with the same band limit, zero mean, |f|_H = norm.
SpectralScalarField random_scalar(const Grid& g, std::uint64_t seed,
                                  int max_mode, double norm);

}  // namespace vecadvect

#pragma once

#include "vecadvect/field.hpp"

namespace vecadvect {

// Forward transform: c_hat(k) = (1/prod N) * sum_x f(x) exp(-i k.x).
// Inverse transform: f(x) = sum_k c_hat(k) exp(+i k.x).
SpectralScalarField transform_forward(const ScalarField& f);
ScalarField transform_inverse(const SpectralScalarField& c);
SpectralVectorField transform_forward(const VectorField& f);
VectorField transform_inverse(const SpectralVectorField& c);

// Max |c(k) - conj(c(-k))| over all modes; zero for transforms of real data.
double hermitian_symmetry_error(const SpectralScalarField& c);
double hermitian_symmetry_error(const SpectralVectorField& c);

}  // namespace vecadvect

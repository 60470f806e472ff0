#pragma once

#include <array>
#include <functional>

#include "vecadvect/fft.hpp"
#include "vecadvect/field.hpp"

namespace vecadvect {

// Calls fn(flat, n, k) for every stored mode; n holds signed integer modes,
// k the wavenumbers 2*pi*n_j/L_j (zero on axes beyond dim).
template <class Fn>
void for_modes(const Grid& g, Fn&& fn) {
  const int n0 = g.size(0);
  const int n1 = g.dim() > 1 ? g.size(1) : 1;
  const int n2 = g.dim() > 2 ? g.size(2) : 1;
  std::array<int, 3> n{0, 0, 0};
  std::array<double, 3> k{0.0, 0.0, 0.0};
  std::int64_t flat = 0;
  for (int i0 = 0; i0 < n0; ++i0) {
    n[0] = g.mode_index(0, i0);
    k[0] = g.wavenumber_of_mode(0, n[0]);
    for (int i1 = 0; i1 < n1; ++i1) {
      if (g.dim() > 1) {
        n[1] = g.mode_index(1, i1);
        k[1] = g.wavenumber_of_mode(1, n[1]);
      }
      for (int i2 = 0; i2 < n2; ++i2, ++flat) {
        if (g.dim() > 2) {
          n[2] = g.mode_index(2, i2);
          k[2] = g.wavenumber_of_mode(2, n[2]);
        }
        fn(flat, n, k);
      }
    }
  }
}

// True when any axis sits on its Nyquist mode n_j == N_j/2. Derivative and
// projection multipliers annihilate such modes; plain transforms keep them.
bool has_nyquist(const Grid& g, const std::array<int, 3>& n);

// True when |n_j| <= floor((N_j-1)/3) on every axis.
bool in_dealias_band(const Grid& g, const std::array<int, 3>& n);

// Zeroes every mode outside the strict dealias band.
void apply_dealias_mask(SpectralScalarField& f);
void apply_dealias_mask(SpectralVectorField& f);

// Leray-Helmholtz projection P = I - k k^T/|k|^2 (identity at k=0,
// zero on Nyquist planes).
SpectralVectorField helmholtz_project(const SpectralVectorField& f);
VectorField helmholtz_project(const VectorField& f);

// Max_k |k . f_hat(k)| / max_k (|k| |f_hat(k)|), a scale-free divergence
// measure; returns 0 for the zero field.
double relative_divergence(const SpectralVectorField& f);
double relative_divergence(const VectorField& f);

SpectralVectorField curl3(const SpectralVectorField& f);
SpectralScalarField rot2(const SpectralVectorField& f);  // d1 f2 - d2 f1
SpectralVectorField perp_grad(const SpectralScalarField& s);  // (-d2 s, d1 s)
SpectralVectorField grad(const SpectralScalarField& s);

// g with curl g = f, div g = 0, zero mean: g_hat = (i k x f_hat)/|k|^2.
// Rejects nonzero-mean input and divergence above 1e-8 (relative).
SpectralVectorField curl_inverse(const SpectralVectorField& f);

// Scalar s with laplacian s = f, zero mean; rejects nonzero-mean input.
SpectralScalarField inverse_laplacian(const SpectralScalarField& f);

// L^2 pairing: cell_volume * sum_x f.g on the grid.
double inner_product_H(const ScalarField& f, const ScalarField& g);
double inner_product_H(const VectorField& f, const VectorField& g);
// Plancherel form: volume * Re sum_k f_hat . conj(g_hat).
double inner_product_H(const SpectralVectorField& f, const SpectralVectorField& g);
double inner_product_H(const SpectralScalarField& f, const SpectralScalarField& g);
double norm_H(const VectorField& f);
double norm_H(const SpectralVectorField& f);
double norm_H(const SpectralScalarField& f);

// Sobolev norm of order k in {-1,0,1,2}: sqrt(V * sum (1+|k|^2)^k |f_hat|^2).
double sobolev_norm(const SpectralVectorField& f, int order);
// Homogeneous version with multiplier |k|^(2 order); order -1 rejects
// nonzero-mean input, order >= 0 ignores the mean mode only for order > 0.
double homogeneous_norm(const SpectralVectorField& f, int order);

double mean_magnitude(const SpectralVectorField& f);  // |f_hat(0)| (euclidean)

// Compressed list of Fourier modes for fast off-grid evaluation.
struct SparseModes {
  int dim = 0;
  int ncomp = 0;
  std::array<double, 3> box{1.0, 1.0, 1.0};
  std::array<double, 3> inv_box{1.0, 1.0, 1.0};
  struct Mode {
    std::array<double, 3> k;
    // Real-form weights: f(x) += 2*(re*cos(k.x) - im*sin(k.x)) per component,
    // or 1x weight for self-conjugate modes.
    std::array<double, 3> re;
    std::array<double, 3> im;
  };
  std::vector<Mode> modes;

  // Adds f(x) into value[ncomp]; if jac is non-null also adds the row-major
  // Jacobian d f_i / d x_j into jac[ncomp*dim]. Coordinates are wrapped
  // periodically before summation.
  void evaluate(const double* x, double* value, double* jac = nullptr) const;
};

// Keeps modes with |coef| > threshold * max|coef| over half-space
// representatives (threshold 0 keeps every nonzero mode). Nyquist modes are
// rejected if above threshold since they have no smooth interpolant.
SparseModes sparsify(const SpectralVectorField& f, double threshold = 0.0);
SparseModes sparsify(const SpectralScalarField& f, double threshold = 0.0);

// Dense reference evaluator: direct sum over every stored mode.
void evaluate_dense(const SpectralVectorField& f, const double* x, double* value);

}  // namespace vecadvect

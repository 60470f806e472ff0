#pragma once

#include <cstdint>

#include "vecadvect/pde.hpp"

namespace vecadvect {

struct PairingTrace {
  std::vector<double> times;
  std::vector<double> pairing;  // (F(t), G(T-t))_H
  double deviation = 0.0;       // max_i |p(t_i) - p(0)| / max(|p(0)|, 1e-14)
};

// Evolves F0 forward and G0 through the adjoint equation on [0,T] and pairs
// F(t_i) with G(T - t_i) at n_checkpoints equispaced interior times plus the
// endpoints; the pairing is conserved for exact solutions.
PairingTrace pairing_trace(const SpectralVectorField& F0,
                           const SpectralVectorField& G0,
                           const TimeDependentVelocity& v, double T,
                           const SolverConfig& cfg, int n_checkpoints);

struct DualityRelation {
  double lhs = 0.0;  // (curl F0, T_T^{S_T v} G0)_H
  double rhs = 0.0;  // (curl T_T^v F0, G0)_H
  double gap = 0.0;  // |lhs - rhs| / max(|lhs|, |rhs|, 1e-14)
};
// S_T v (t) = -v(T-t); both sides use the forward evolution only.
DualityRelation duality_relation(const SpectralVectorField& F0,
                                 const SpectralVectorField& G0,
                                 const TimeDependentVelocity& v, double T,
                                 const SolverConfig& cfg);

struct SerrinResult {
  double pairing_gap = 0.0;      // worst pairing deviation over the trials
  double vorticity_ratio = 0.0;  // |curl F(T)|_H / |curl F(0)|_H
  double expected_ratio = 0.0;   // exp(-2 nu T) for the planar vortex lattice
  double ratio_error = 0.0;
};
// Runs the decaying planar vortex lattice embedded in 3d as the F-state with
// advecting velocity -u(t), pairing it against n_trials random adjoint data.
SerrinResult serrin_experiment(const Grid& g3, double nu, double T,
                               const SolverConfig& cfg, int n_trials,
                               std::uint64_t seed);

double helicity(const SpectralVectorField& u);  // (u, curl u)_H
double helicity(const VectorField& u);

// Psi_lambda f (x) = lambda f(lambda x): samples scale by lambda, the box by
// 1/lambda, sizes are unchanged.
VectorField scaling_transform(const VectorField& f, double lambda);
ScalarField scaling_transform(const ScalarField& f, double lambda);

struct ScalingCheck {
  double roundtrip = 0.0;   // max |Psi_{1/lam} Psi_lam f - f|
  double intertwine = 0.0;  // max coef gap, left vs right transported field
};
// Left: evolve Psi_lam F0 with velocity Psi_lam u for time t at step dt.
// Right: evolve F0 with u for time lam^2 t at step lam^2 dt, then rescale.
// For lam a power of two the two paths agree bit for bit.
ScalingCheck scaling_checks(const SpectralVectorField& F0, AnalyticPtr u,
                            double lambda, double t, const SolverConfig& cfg);

struct NormDualityProbe {
  int m = 0;
  std::vector<double> gram_T;  // row major, (phi_i, T_T^v phi_j)_H
  std::vector<double> gram_S;  // (curl T_T^{S_T v} psi_i, curl psi_j)_H
  double max_entry_gap = 0.0;  // relative to the largest entry
  double quotient_gap = 0.0;   // quadratic forms on a fixed probe vector
};
// psi_i = curl^{-1} phi_i; the H-pairing Gram of the forward evolution equals
// the first-order homogeneous Gram of the reversed evolution on potentials.
NormDualityProbe norm_duality_probe(const Grid& g3, int m,
                                    const TimeDependentVelocity& v, double T,
                                    const SolverConfig& cfg,
                                    std::uint64_t seed);

}  // namespace vecadvect

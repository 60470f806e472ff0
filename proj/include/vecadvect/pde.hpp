#pragma once

#include <functional>
#include <vector>

#include "vecadvect/field.hpp"
#include "vecadvect/velocity.hpp"

namespace vecadvect {

enum class Scheme { IFRK4, IFEuler };

struct SolverConfig {
  double nu = 0.0;
  double dt = 0.0;
  Scheme scheme = Scheme::IFRK4;
  bool dealias = true;
  bool collect_energy = false;
};

// Optional right-hand forcing, projected solenoidal at each stage.
struct ForcingSpec {
  AnalyticPtr analytic;
  std::function<SpectralVectorField(double)> spectral;
  bool empty() const { return !analytic && !spectral; }
};

struct Trajectory {
  Grid grid;
  double nu = 0.0;
  std::vector<double> times;
  std::vector<SpectralVectorField> states;
  // Per-step scalars when SolverConfig::collect_energy is set.
  std::vector<double> e_times;
  std::vector<double> energy;       // |F|_H^2
  std::vector<double> dissipation;  // 2 nu |grad F|_H^2
  std::vector<double> production;   // 2 (curl F, v x F)_H

  const SpectralVectorField& state_at(double t) const;
};

enum class BForm { CurlForm, GradForm };

// B(v,F) = P(v x curl F); GradForm uses the pointwise identity
// (v x curl F)^k = sum_j v^j d_k F^j - (v . grad) F^k.
SpectralVectorField nonlinearity_B(const VectorField& v,
                                   const SpectralVectorField& F,
                                   bool dealias = true,
                                   BForm form = BForm::CurlForm);

// curl(w x G); in 2d the scalar form (d2 s, -d1 s) with s = w1 G2 - w2 G1.
SpectralVectorField curl_cross(const VectorField& w,
                               const SpectralVectorField& G,
                               bool dealias = true);

// dF/dt = -nu A F - B(v(t),F) + P f,  A = -laplacian.
Trajectory solve_F(const SpectralVectorField& F0,
                   const TimeDependentVelocity& v, double T,
                   const SolverConfig& cfg, const ForcingSpec& f = {},
                   const std::vector<double>& save_times = {},
                   double t_start = 0.0);

// dG/dt = -nu A G + curl(v(T-t) x G) + P f on [0,T].
Trajectory solve_G(const SpectralVectorField& G0,
                   const TimeDependentVelocity& v, double T,
                   const SolverConfig& cfg, const ForcingSpec& f = {},
                   const std::vector<double>& save_times = {});

// Final state of solve_F; the two-parameter evolution T_t^v applied to F0.
SpectralVectorField transport(const SpectralVectorField& F0,
                              const TimeDependentVelocity& v, double T,
                              const SolverConfig& cfg);
SpectralVectorField transport_with_forcing(const SpectralVectorField& F0,
                                           const TimeDependentVelocity& v,
                                           double T, const SolverConfig& cfg,
                                           const ForcingSpec& f);
// Final state of solve_G.
SpectralVectorField transport_adjoint(const SpectralVectorField& G0,
                                      const TimeDependentVelocity& v, double T,
                                      const SolverConfig& cfg);

// Max over interior steps of |d/dt energy + dissipation - production| using a
// five-point time derivative of the collected per-step energy log.
double energy_residual(const Trajectory& traj);

}  // namespace vecadvect

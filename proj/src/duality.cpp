#include "vecadvect/duality.hpp"

#include <cmath>

#include "vecadvect/analytic.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"

namespace vecadvect {

namespace {

std::vector<double> checkpoint_times(double T, int n_checkpoints) {
  if (n_checkpoints < 1) throw ConfigError("pairing_trace: need checkpoints");
  std::vector<double> ts;
  for (int i = 0; i <= n_checkpoints; ++i)
    ts.push_back(T * double(i) / double(n_checkpoints));
  return ts;
}

PairingTrace pair_trajectories(const Trajectory& ftraj, const Trajectory& gtraj,
                               double T, const std::vector<double>& ts) {
  PairingTrace out;
  for (double t : ts) {
    out.times.push_back(t);
    out.pairing.push_back(
        inner_product_H(ftraj.state_at(t), gtraj.state_at(T - t)));
  }
  const double p0 = out.pairing.front();
  double dev = 0.0;
  for (double p : out.pairing) dev = std::max(dev, std::abs(p - p0));
  out.deviation = dev / std::max(std::abs(p0), 1e-14);
  return out;
}

}  // namespace

PairingTrace pairing_trace(const SpectralVectorField& F0,
                           const SpectralVectorField& G0,
                           const TimeDependentVelocity& v, double T,
                           const SolverConfig& cfg, int n_checkpoints) {
  const auto ts = checkpoint_times(T, n_checkpoints);
  const Trajectory ftraj = solve_F(F0, v, T, cfg, {}, ts);
  const Trajectory gtraj = solve_G(G0, v, T, cfg, {}, ts);
  return pair_trajectories(ftraj, gtraj, T, ts);
}

DualityRelation duality_relation(const SpectralVectorField& F0,
                                 const SpectralVectorField& G0,
                                 const TimeDependentVelocity& v, double T,
                                 const SolverConfig& cfg) {
  if (F0.grid.dim() != 3)
    throw ConfigError("duality_relation: needs a 3d grid");
  DualityRelation out;
  const auto gT = transport(G0, v.time_reversed(T), T, cfg);
  out.lhs = inner_product_H(curl3(F0), gT);
  const auto fT = transport(F0, v, T, cfg);
  out.rhs = inner_product_H(curl3(fT), G0);
  out.gap = std::abs(out.lhs - out.rhs) /
            std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-14});
  return out;
}

namespace {

struct Negated final : AnalyticVectorField {
  AnalyticPtr inner;
  explicit Negated(AnalyticPtr f) : inner(std::move(f)) {}
  int dim() const override { return inner->dim(); }
  std::array<double, 3> box() const override { return inner->box(); }
  void eval(double t, const double* x, double* v, double* jac) const override {
    inner->eval(t, x, v, jac);
    const int d = inner->ncomp();
    for (int i = 0; i < d; ++i) v[i] = -v[i];
    if (jac)
      for (int i = 0; i < d * dim(); ++i) jac[i] = -jac[i];
  }
};

}  // namespace

SerrinResult serrin_experiment(const Grid& g3, double nu, double T,
                               const SolverConfig& cfg, int n_trials,
                               std::uint64_t seed) {
  if (g3.dim() != 3) throw ConfigError("serrin_experiment: needs a 3d grid");
  const AnalyticPtr u = taylor_green_embedded(nu);
  const auto F0 = transform_forward(u->sample(g3, 0.0));
  const auto v = TimeDependentVelocity::analytic(
      std::make_shared<Negated>(u));

  SerrinResult out;
  out.expected_ratio = std::exp(-2.0 * nu * T);
  const auto ts = [&] {
    std::vector<double> v10;
    for (int i = 0; i <= 10; ++i) v10.push_back(T * double(i) / 10.0);
    return v10;
  }();
  const Trajectory ftraj = solve_F(F0, v, T, cfg, {}, ts);
  for (int trial = 0; trial < n_trials; ++trial) {
    const auto G0 = random_solenoidal(g3, seed + std::uint64_t(trial), 2, 1.0);
    const Trajectory gtraj = solve_G(G0, v, T, cfg, {}, ts);
    out.pairing_gap = std::max(
        out.pairing_gap, pair_trajectories(ftraj, gtraj, T, ts).deviation);
  }
  out.vorticity_ratio =
      norm_H(curl3(ftraj.states.back())) / norm_H(curl3(F0));
  out.ratio_error = std::abs(out.vorticity_ratio - out.expected_ratio);
  return out;
}

double helicity(const SpectralVectorField& u) {
  return inner_product_H(u, curl3(u));
}

double helicity(const VectorField& u) {
  return helicity(transform_forward(u));
}

namespace {

Grid scaled_grid(const Grid& g, double lambda) {
  std::array<double, 3> box = g.box_lengths();
  for (int a = 0; a < g.dim(); ++a) box[a] /= lambda;
  return Grid::make(g.dim(), g.sizes(), box);
}

}  // namespace

VectorField scaling_transform(const VectorField& f, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("scaling_transform: lambda must be > 0");
  VectorField out(scaled_grid(f.grid, lambda), f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c)
    for (size_t i = 0; i < f.comp[c].size(); ++i)
      out.comp[c][i] = lambda * f.comp[c][i];
  return out;
}

ScalarField scaling_transform(const ScalarField& f, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("scaling_transform: lambda must be > 0");
  ScalarField out(scaled_grid(f.grid, lambda));
  for (size_t i = 0; i < f.data.size(); ++i) out.data[i] = lambda * f.data[i];
  return out;
}

ScalingCheck scaling_checks(const SpectralVectorField& F0, AnalyticPtr u,
                            double lambda, double t, const SolverConfig& cfg) {
  ScalingCheck out;
  const VectorField f0p = transform_inverse(F0);
  const VectorField once = scaling_transform(f0p, lambda);
  const VectorField back = scaling_transform(once, 1.0 / lambda);
  for (int c = 0; c < f0p.ncomp(); ++c)
    for (size_t i = 0; i < f0p.comp[c].size(); ++i)
      out.roundtrip =
          std::max(out.roundtrip, std::abs(back.comp[c][i] - f0p.comp[c][i]));

  const auto v_left =
      TimeDependentVelocity::analytic(scaled_velocity(u, lambda));
  const auto left = transport(transform_forward(once), v_left, t, cfg);

  SolverConfig cfg_right = cfg;
  cfg_right.dt = lambda * lambda * cfg.dt;
  const auto v_right = TimeDependentVelocity::analytic(u);
  const auto right_big =
      transport(F0, v_right, lambda * lambda * t, cfg_right);
  const auto right =
      transform_forward(scaling_transform(transform_inverse(right_big), lambda));

  for (int c = 0; c < left.ncomp(); ++c)
    for (size_t i = 0; i < left.comp[c].size(); ++i)
      out.intertwine =
          std::max(out.intertwine, std::abs(left.comp[c][i] - right.comp[c][i]));
  return out;
}

NormDualityProbe norm_duality_probe(const Grid& g3, int m,
                                    const TimeDependentVelocity& v, double T,
                                    const SolverConfig& cfg,
                                    std::uint64_t seed) {
  if (g3.dim() != 3) throw ConfigError("norm_duality_probe: needs a 3d grid");
  if (m < 1) throw ConfigError("norm_duality_probe: m must be >= 1");
  NormDualityProbe out;
  out.m = m;
  std::vector<SpectralVectorField> phi, Tphi, TSpsi_curl;
  for (int i = 0; i < m; ++i)
    phi.push_back(random_solenoidal(g3, seed + std::uint64_t(i), 2, 1.0));
  const auto vrev = v.time_reversed(T);
  for (int i = 0; i < m; ++i) {
    Tphi.push_back(transport(phi[i], v, T, cfg));
    const auto psi = curl_inverse(phi[i]);
    TSpsi_curl.push_back(curl3(transport(psi, vrev, T, cfg)));
  }
  out.gram_T.assign(size_t(m) * m, 0.0);
  out.gram_S.assign(size_t(m) * m, 0.0);
  double scale = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      // (phi_i, T^v phi_j)_H  vs  <T^{S_T v} psi_i, psi_j>_{h,1}
      const double a = inner_product_H(phi[i], Tphi[j]);
      const double b = inner_product_H(TSpsi_curl[i], phi[j]);
      out.gram_T[size_t(i) * m + j] = a;
      out.gram_S[size_t(i) * m + j] = b;
      scale = std::max({scale, std::abs(a), std::abs(b)});
    }
  for (size_t i = 0; i < out.gram_T.size(); ++i)
    out.max_entry_gap =
        std::max(out.max_entry_gap, std::abs(out.gram_T[i] - out.gram_S[i]));
  out.max_entry_gap /= std::max(scale, 1e-14);

  // quadratic forms x^T G x with a fixed deterministic probe vector
  double qt = 0.0, qs = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double xi = 1.0 + 0.25 * i, xj = 1.0 + 0.25 * j;
      qt += xi * xj * out.gram_T[size_t(i) * m + j];
      qs += xi * xj * out.gram_S[size_t(i) * m + j];
    }
  out.quotient_gap =
      std::abs(qt - qs) / std::max({std::abs(qt), std::abs(qs), 1e-14});
  return out;
}

}  // namespace vecadvect

#include "vecadvect/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"

namespace vecadvect {

const SpectralVectorField& Trajectory::state_at(double t) const {
  for (size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t)))
      return states[i];
  throw ConfigError("trajectory: no state stored at t = " + std::to_string(t));
}

namespace {

void check_vF(const VectorField& v, const SpectralVectorField& F,
              const char* where) {
  require_same_grid(v.grid, F.grid, where);
  const int d = F.grid.dim();
  if (v.ncomp() != d || F.ncomp() != d)
    throw ConfigError(std::string(where) + ": component count mismatch");
}

}  // namespace

SpectralVectorField nonlinearity_B(const VectorField& v,
                                   const SpectralVectorField& F, bool dealias,
                                   BForm form) {
  check_vF(v, F, "nonlinearity_B");
  const Grid& g = F.grid;
  const int d = g.dim();
  const std::int64_t n = g.points();
  VectorField cross(g, d);
  if (form == BForm::CurlForm) {
    if (d == 3) {
      const VectorField w = transform_inverse(curl3(F));
      for (std::int64_t i = 0; i < n; ++i) {
        cross.comp[0][i] =
            v.comp[1][i] * w.comp[2][i] - v.comp[2][i] * w.comp[1][i];
        cross.comp[1][i] =
            v.comp[2][i] * w.comp[0][i] - v.comp[0][i] * w.comp[2][i];
        cross.comp[2][i] =
            v.comp[0][i] * w.comp[1][i] - v.comp[1][i] * w.comp[0][i];
      }
    } else {
      const ScalarField w = transform_inverse(rot2(F));
      for (std::int64_t i = 0; i < n; ++i) {
        cross.comp[0][i] = v.comp[1][i] * w.data[i];
        cross.comp[1][i] = -v.comp[0][i] * w.data[i];
      }
    }
  } else {
    // (v x curl F)^k = sum_j v^j d_k F^j - (v . grad) F^k
    std::vector<std::vector<double>> dF(size_t(d) * d);
    const cplx I(0.0, 1.0);
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < d; ++a) {
        SpectralScalarField der;
        der.grid = g;
        der.coef.assign(size_t(n), cplx(0.0, 0.0));
        for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& m,
                         const std::array<double, 3>& k) {
          if (has_nyquist(g, m)) return;
          der.coef[flat] = I * k[a] * F.comp[j][flat];
        });
        dF[size_t(j) * d + a] = transform_inverse(der).data;
      }
    for (int k = 0; k < d; ++k)
      for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
          s += v.comp[j][i] *
               (dF[size_t(j) * d + k][i] - dF[size_t(k) * d + j][i]);
        cross.comp[k][i] = s;
      }
  }
  SpectralVectorField out = transform_forward(cross);
  if (dealias) apply_dealias_mask(out);
  return helmholtz_project(out);
}

SpectralVectorField curl_cross(const VectorField& w,
                               const SpectralVectorField& G, bool dealias) {
  check_vF(w, G, "curl_cross");
  const Grid& g = G.grid;
  const std::int64_t n = g.points();
  const cplx I(0.0, 1.0);
  if (g.dim() == 3) {
    const VectorField gp = transform_inverse(G);
    VectorField cr(g, 3);
    for (std::int64_t i = 0; i < n; ++i) {
      cr.comp[0][i] = w.comp[1][i] * gp.comp[2][i] - w.comp[2][i] * gp.comp[1][i];
      cr.comp[1][i] = w.comp[2][i] * gp.comp[0][i] - w.comp[0][i] * gp.comp[2][i];
      cr.comp[2][i] = w.comp[0][i] * gp.comp[1][i] - w.comp[1][i] * gp.comp[0][i];
    }
    SpectralVectorField ch = transform_forward(cr);
    if (dealias) apply_dealias_mask(ch);
    return curl3(ch);
  }
  const VectorField gp = transform_inverse(G);
  ScalarField s(g);
  for (std::int64_t i = 0; i < n; ++i)
    s.data[i] = w.comp[0][i] * gp.comp[1][i] - w.comp[1][i] * gp.comp[0][i];
  SpectralScalarField sh = transform_forward(s);
  if (dealias) apply_dealias_mask(sh);
  SpectralVectorField out(g, 2);
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& m,
                   const std::array<double, 3>& k) {
    if (has_nyquist(g, m)) return;
    out.comp[0][flat] = I * k[1] * sh.coef[flat];
    out.comp[1][flat] = -I * k[0] * sh.coef[flat];
  });
  return out;
}

namespace {

std::vector<double> heat_factor(const Grid& g, double nu, double dt) {
  std::vector<double> e(size_t(g.points()));
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>&,
                   const std::array<double, 3>& k) {
    double k2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) k2 += k[a] * k[a];
    e[size_t(flat)] = std::exp(-nu * k2 * dt);
  });
  return e;
}

SpectralVectorField scaled(const SpectralVectorField& u,
                           const std::vector<double>& e) {
  SpectralVectorField out(u.grid, u.ncomp());
  for (int c = 0; c < u.ncomp(); ++c)
    for (size_t i = 0; i < e.size(); ++i) out.comp[c][i] = u.comp[c][i] * e[i];
  return out;
}

void axpy(SpectralVectorField& acc, const SpectralVectorField& x, double s) {
  for (int c = 0; c < acc.ncomp(); ++c)
    for (size_t i = 0; i < acc.comp[c].size(); ++i)
      acc.comp[c][i] += s * x.comp[c][i];
}

std::int64_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("solver: dt must be positive");
  if (!(T > 0.0)) throw ConfigError("solver: horizon must be positive");
  const double r = T / dt;
  const std::int64_t n = std::llround(r);
  if (n < 1 || std::abs(double(n) - r) > 1e-9 * std::max(1.0, r))
    throw ConfigError("solver: dt must divide the horizon");
  return n;
}

struct SaveSet {
  std::vector<std::int64_t> idx;  // sorted step indices to store
};

SaveSet build_saves(const std::vector<double>& save_times, double t_begin,
                    double dt, std::int64_t n_steps) {
  SaveSet s;
  s.idx.push_back(0);
  s.idx.push_back(n_steps);
  for (double t : save_times) {
    const double r = (t - t_begin) / dt;
    const std::int64_t i = std::llround(r);
    if (i < 0 || i > n_steps || std::abs(double(i) - r) > 1e-6)
      throw ConfigError("solver: save time off the step lattice");
    s.idx.push_back(i);
  }
  std::sort(s.idx.begin(), s.idx.end());
  s.idx.erase(std::unique(s.idx.begin(), s.idx.end()), s.idx.end());
  return s;
}

double production_integral(const Grid& g, const VectorField& v,
                           const SpectralVectorField& u) {
  const std::int64_t n = g.points();
  const VectorField up = transform_inverse(u);
  double acc = 0.0;
  if (g.dim() == 3) {
    const VectorField w = transform_inverse(curl3(u));
    for (std::int64_t i = 0; i < n; ++i) {
      const double c0 =
          v.comp[1][i] * up.comp[2][i] - v.comp[2][i] * up.comp[1][i];
      const double c1 =
          v.comp[2][i] * up.comp[0][i] - v.comp[0][i] * up.comp[2][i];
      const double c2 =
          v.comp[0][i] * up.comp[1][i] - v.comp[1][i] * up.comp[0][i];
      acc += w.comp[0][i] * c0 + w.comp[1][i] * c1 + w.comp[2][i] * c2;
    }
  } else {
    const ScalarField w = transform_inverse(rot2(u));
    for (std::int64_t i = 0; i < n; ++i)
      acc += w.data[i] *
             (v.comp[0][i] * up.comp[1][i] - v.comp[1][i] * up.comp[0][i]);
  }
  return acc * g.cell_volume();
}

Trajectory integrate(const SpectralVectorField& u0,
                     const TimeDependentVelocity& v, double T,
                     const SolverConfig& cfg, const ForcingSpec& f,
                     const std::vector<double>& save_times, double t_begin,
                     bool g_equation) {
  const Grid& g = u0.grid;
  if (!(cfg.nu > 0.0)) throw ConfigError("solver: nu must be positive");
  if (v.dim() != g.dim()) throw ConfigError("solver: velocity dim mismatch");
  if (u0.ncomp() != g.dim())
    throw ConfigError("solver: state component count mismatch");
  const std::int64_t n_steps = step_count(T, cfg.dt);
  const double dt = cfg.dt;
  const SaveSet saves = build_saves(save_times, t_begin, dt, n_steps);

  // Velocity on the equation clock: the G equation advects with v(T - t).
  auto vel_time = [&](double t_local) {
    return g_equation ? T - t_local : t_begin + t_local;
  };
  const bool vconst = v.constant_in_time();
  VectorField vcache;
  double vcache_t = 0.0;
  bool vcache_ok = false;
  auto stage_velocity = [&](double t_local) -> const VectorField& {
    const double tv = vel_time(t_local);
    if (!vcache_ok || (!vconst && tv != vcache_t)) {
      vcache = v.sample(g, tv);
      vcache_t = tv;
      vcache_ok = true;
    }
    return vcache;
  };

  const double kmax = g.max_wavenumber();
  auto cfl_check = [&](double t_local) {
    double speed = 0.0;
    const VectorField& vf = stage_velocity(t_local);
    for (std::int64_t i = 0; i < g.points(); ++i) {
      double s = 0.0;
      for (int c = 0; c < vf.ncomp(); ++c) s += vf.comp[c][i] * vf.comp[c][i];
      speed = std::max(speed, s);
    }
    speed = std::sqrt(speed);
    if (dt * speed * kmax > 1.0)
      throw NumericalGuard("solver: advective CFL bound exceeded, dt*|v|*kmax = " +
                           std::to_string(dt * speed * kmax));
  };

  // The forcing clock always runs forward, also for the G equation.
  auto forcing_term = [&](double t_local) -> SpectralVectorField {
    SpectralVectorField fh;
    if (f.analytic) {
      fh = transform_forward(f.analytic->sample(g, t_begin + t_local));
    } else {
      fh = f.spectral(t_begin + t_local);
      require_same_grid(fh.grid, g, "solver forcing");
    }
    if (cfg.dealias) apply_dealias_mask(fh);
    return helmholtz_project(fh);
  };

  auto rhs = [&](const SpectralVectorField& u,
                 double t_local) -> SpectralVectorField {
    const VectorField& vf = stage_velocity(t_local);
    SpectralVectorField nl;
    if (g_equation) {
      nl = curl_cross(vf, u, cfg.dealias);
    } else {
      nl = nonlinearity_B(vf, u, cfg.dealias);
      for (auto& comp : nl.comp)
        for (cplx& z : comp) z = -z;
    }
    if (!f.empty()) axpy(nl, forcing_term(t_local), 1.0);
    return nl;
  };

  const std::vector<double> E = heat_factor(g, cfg.nu, dt);
  const std::vector<double> E2 = heat_factor(g, cfg.nu, dt / 2.0);

  Trajectory traj;
  traj.grid = g;
  traj.nu = cfg.nu;
  SpectralVectorField u = u0;
  size_t save_pos = 0;
  auto maybe_save = [&](std::int64_t step) {
    if (save_pos < saves.idx.size() && saves.idx[save_pos] == step) {
      traj.times.push_back(t_begin + double(step) * dt);
      traj.states.push_back(u);
      ++save_pos;
    }
  };
  auto log_energy = [&](std::int64_t step) {
    if (!cfg.collect_energy) return;
    const double t_local = double(step) * dt;
    traj.e_times.push_back(t_begin + t_local);
    traj.energy.push_back(inner_product_H(u, u));
    double diss = 0.0;
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>&,
                     const std::array<double, 3>& k) {
      double k2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) k2 += k[a] * k[a];
      for (int c = 0; c < u.ncomp(); ++c)
        diss += k2 * std::norm(u.comp[c][flat]);
    });
    traj.dissipation.push_back(2.0 * cfg.nu * diss * g.volume());
    traj.production.push_back(
        2.0 * production_integral(g, stage_velocity(t_local), u));
  };

  maybe_save(0);
  log_energy(0);
  for (std::int64_t step = 0; step < n_steps; ++step) {
    const double t = double(step) * dt;
    if (step == 0 || !vconst) cfl_check(t);
    if (cfg.scheme == Scheme::IFEuler) {
      SpectralVectorField a = rhs(u, t);
      axpy(u, a, dt);
      u = scaled(u, E);
    } else {
      const SpectralVectorField a = rhs(u, t);
      SpectralVectorField ua = u;
      axpy(ua, a, dt / 2.0);
      const SpectralVectorField b = rhs(scaled(ua, E2), t + dt / 2.0);
      SpectralVectorField ub = scaled(u, E2);
      axpy(ub, b, dt / 2.0);
      const SpectralVectorField c = rhs(ub, t + dt / 2.0);
      SpectralVectorField uc = scaled(u, E);
      {
        SpectralVectorField ec = scaled(c, E2);
        axpy(uc, ec, dt);
      }
      const SpectralVectorField d = rhs(uc, t + dt);
      SpectralVectorField unew = scaled(u, E);
      {
        SpectralVectorField ea = scaled(a, E);
        axpy(unew, ea, dt / 6.0);
        SpectralVectorField bc = b;
        axpy(bc, c, 1.0);
        SpectralVectorField ebc = scaled(bc, E2);
        axpy(unew, ebc, dt / 3.0);
        axpy(unew, d, dt / 6.0);
      }
      u = std::move(unew);
    }
    maybe_save(step + 1);
    log_energy(step + 1);
  }
  return traj;
}

}  // namespace

Trajectory solve_F(const SpectralVectorField& F0,
                   const TimeDependentVelocity& v, double T,
                   const SolverConfig& cfg, const ForcingSpec& f,
                   const std::vector<double>& save_times, double t_start) {
  return integrate(F0, v, T, cfg, f, save_times, t_start, false);
}

Trajectory solve_G(const SpectralVectorField& G0,
                   const TimeDependentVelocity& v, double T,
                   const SolverConfig& cfg, const ForcingSpec& f,
                   const std::vector<double>& save_times) {
  return integrate(G0, v, T, cfg, f, save_times, 0.0, true);
}

SpectralVectorField transport(const SpectralVectorField& F0,
                              const TimeDependentVelocity& v, double T,
                              const SolverConfig& cfg) {
  Trajectory t = solve_F(F0, v, T, cfg);
  return std::move(t.states.back());
}

SpectralVectorField transport_with_forcing(const SpectralVectorField& F0,
                                           const TimeDependentVelocity& v,
                                           double T, const SolverConfig& cfg,
                                           const ForcingSpec& f) {
  Trajectory t = solve_F(F0, v, T, cfg, f);
  return std::move(t.states.back());
}

SpectralVectorField transport_adjoint(const SpectralVectorField& G0,
                                      const TimeDependentVelocity& v, double T,
                                      const SolverConfig& cfg) {
  Trajectory t = solve_G(G0, v, T, cfg);
  return std::move(t.states.back());
}

double energy_residual(const Trajectory& traj) {
  const size_t n = traj.e_times.size();
  if (n < 5) throw ConfigError("energy_residual: needs at least five samples");
  const double h = traj.e_times[1] - traj.e_times[0];
  double worst = 0.0;
  for (size_t i = 2; i + 2 < n; ++i) {
    const double ddt = (-traj.energy[i + 2] + 8.0 * traj.energy[i + 1] -
                        8.0 * traj.energy[i - 1] + traj.energy[i - 2]) /
                       (12.0 * h);
    worst = std::max(
        worst, std::abs(ddt + traj.dissipation[i] - traj.production[i]));
  }
  return worst;
}

}  // namespace vecadvect

#include "vecadvect/fk.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <thread>

#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/rng.hpp"

namespace vecadvect {

namespace {

void validate_fk(const Grid& g, double T, double s, const FkConfig& cfg) {
  if (!(T > 0.0)) throw ConfigError("fk horizon T must be positive");
  if (s < 0.0 || s > T + 1e-12 * std::max(1.0, T))
    throw ConfigError("fk window must satisfy 0 <= s <= T");
  if (cfg.n_paths < 1) throw ConfigError("fk needs n_paths >= 1");
  if (cfg.threads < 1) throw ConfigError("fk needs threads >= 1");
  if (g.points() >= std::int64_t(kFieldGenNode))
    throw ConfigError("grid too large for per-node stream keys");
}

std::uint32_t node_key(std::int64_t idx, const FkConfig& cfg) {
  return cfg.crn ? kCrnNode : std::uint32_t(idx);
}

FlowConfig flow_config(const Grid& g, double nu, const FkConfig& cfg,
                       const RotationSpec& rot) {
  FlowConfig fc;
  fc.nu = nu;
  fc.dt = cfg.dt;
  fc.n_paths = cfg.n_paths;
  fc.seed = cfg.seed;
  fc.rotation = rot;
  fc.with_gradients = true;
  fc.det_low = cfg.det_low;
  fc.det_high = cfg.det_high;
  double lmin = g.box(0);
  for (int a = 1; a < g.dim(); ++a) lmin = std::min(lmin, g.box(a));
  fc.guard_length = 0.5 * lmin;
  return fc;
}

// Pullback Q^j = sum_i F0^i J_ij for the curve form, Q_i = sum_j F0^j cof_ji
// for the surface form.
void path_estimate(const double* f0, const double* grad, int dim, bool surface,
                   double* q) {
  if (!surface) {
    for (int j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (int i = 0; i < dim; ++i) acc += f0[i] * grad[i * dim + j];
      q[j] = acc;
    }
    return;
  }
  double cof[9];
  cofactor3(grad, cof);
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) acc += f0[j] * cof[j * 3 + i];
    q[i] = acc;
  }
}

struct NodeStats {
  std::vector<double> mean;    // points x dim
  std::vector<double> sem;     // points x dim
  std::vector<double> moment;  // points
  std::vector<std::int64_t> flags;
};

// Runs one batch per node and reduces it to mean / standard error / monitor
// slots owned by that node, so any node partition over threads gives
// bit-identical output.
NodeStats run_batches(const Grid& g, const SparseModes& f0m,
                      const TimeDependentVelocity* v, double T, double s,
                      const FkConfig& cfg, const FlowConfig& fc,
                      bool surface) {
  const int dim = g.dim();
  const std::int64_t npts = g.points();
  NodeStats st;
  st.mean.assign(std::size_t(npts) * dim, 0.0);
  st.sem.assign(std::size_t(npts) * dim, 0.0);
  st.moment.assign(std::size_t(npts), 0.0);
  st.flags.assign(std::size_t(npts), 0);

  auto worker = [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> qs(std::size_t(cfg.n_paths) * dim);
    const double n = double(cfg.n_paths);
    for (std::int64_t idx = lo; idx < hi; ++idx) {
      const auto x0 = g.node(idx);
      const PathBatch batch =
          simulate_paths(x0.data(), dim, v, fc, node_key(idx, cfg), T - s, T);
      double f0[3];
      double msq = 0.0;
      for (int p = 0; p < cfg.n_paths; ++p) {
        std::fill(f0, f0 + dim, 0.0);
        f0m.evaluate(batch.position(p), f0);
        double* q = qs.data() + std::size_t(p) * dim;
        path_estimate(f0, batch.gradients.data() + std::size_t(p) * dim * dim,
                      dim, surface, q);
        double qq = 0.0;
        for (int c = 0; c < dim; ++c) qq += q[c] * q[c];
        msq += qq;
      }
      st.moment[std::size_t(idx)] = msq / n;
      st.flags[std::size_t(idx)] = batch.n_flagged();
      for (int c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (int p = 0; p < cfg.n_paths; ++p)
          mean += qs[std::size_t(p) * dim + c];
        mean /= n;
        double var = 0.0;
        for (int p = 0; p < cfg.n_paths; ++p) {
          const double d = qs[std::size_t(p) * dim + c] - mean;
          var += d * d;
        }
        var = cfg.n_paths > 1 ? var / (n - 1.0) : 0.0;
        st.mean[std::size_t(idx) * dim + c] = mean;
        st.sem[std::size_t(idx) * dim + c] = std::sqrt(var / n);
      }
    }
  };

  const int nthreads = int(std::min<std::int64_t>(cfg.threads, npts));
  if (nthreads <= 1) {
    worker(0, npts);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int t = 0; t < nthreads; ++t) {
      const std::int64_t lo = npts * t / nthreads;
      const std::int64_t hi = npts * (t + 1) / nthreads;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return st;
}

FkEstimate assemble(const Grid& g, NodeStats&& st, const FkConfig& cfg,
                    RotationKind kind, bool project) {
  const int dim = g.dim();
  const std::int64_t npts = g.points();
  FkEstimate est;
  est.field = VectorField(g, dim);
  est.se = VectorField(g, dim);
  est.n_paths = cfg.n_paths;
  est.kind = kind;
  for (int c = 0; c < dim; ++c) {
    double rms = 0.0;
    for (std::int64_t i = 0; i < npts; ++i) {
      est.field.comp[c][std::size_t(i)] = st.mean[std::size_t(i) * dim + c];
      const double se = st.sem[std::size_t(i) * dim + c];
      est.se.comp[c][std::size_t(i)] = se;
      rms += se * se;
    }
    est.se_summary[std::size_t(c)] = std::sqrt(rms / double(npts));
  }
  for (std::int64_t i = 0; i < npts; ++i) {
    est.n_flagged += st.flags[std::size_t(i)];
    est.moment_beta1 = std::max(est.moment_beta1, st.moment[std::size_t(i)]);
  }
  enforce_flag_budget(est.n_flagged, std::int64_t(cfg.n_paths) * npts,
                      cfg.max_flag_fraction);
  if (project) est.field = helmholtz_project(est.field);
  return est;
}

FkComparison compare_impl(const VectorField& a, const VectorField& b,
                          const VectorField* sa, const VectorField* sb) {
  if (a.grid.dim() != b.grid.dim() || a.grid.points() != b.grid.points())
    throw ConfigError("fk comparison needs matching grids");
  const int dim = a.ncomp();
  const std::int64_t npts = a.grid.points();
  FkComparison cmp;
  cmp.node_gap.assign(std::size_t(npts), 0.0);
  cmp.node_se.assign(std::size_t(npts), 0.0);
  double gap2 = 0.0, se2 = 0.0, ref2 = 0.0;
  for (std::int64_t i = 0; i < npts; ++i) {
    double g2 = 0.0, s2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double d = a.comp[c][std::size_t(i)] - b.comp[c][std::size_t(i)];
      g2 += d * d;
      if (sa) s2 += sa->comp[c][std::size_t(i)] * sa->comp[c][std::size_t(i)];
      if (sb) s2 += sb->comp[c][std::size_t(i)] * sb->comp[c][std::size_t(i)];
      ref2 += b.comp[c][std::size_t(i)] * b.comp[c][std::size_t(i)];
    }
    cmp.node_gap[std::size_t(i)] = std::sqrt(g2);
    cmp.node_se[std::size_t(i)] = std::sqrt(s2);
    gap2 += g2;
    se2 += s2;
  }
  const double vol = a.grid.cell_volume();
  cmp.gap_h = std::sqrt(gap2 * vol);
  cmp.se_h = std::sqrt(se2 * vol);
  cmp.ref_h = std::sqrt(ref2 * vol);
  return cmp;
}

}  // namespace

void cofactor3(const double* j, double* out) {
  out[0] = j[4] * j[8] - j[5] * j[7];
  out[1] = j[5] * j[6] - j[3] * j[8];
  out[2] = j[3] * j[7] - j[4] * j[6];
  out[3] = j[2] * j[7] - j[1] * j[8];
  out[4] = j[0] * j[8] - j[2] * j[6];
  out[5] = j[1] * j[6] - j[0] * j[7];
  out[6] = j[1] * j[5] - j[2] * j[4];
  out[7] = j[2] * j[3] - j[0] * j[5];
  out[8] = j[0] * j[4] - j[1] * j[3];
}

FkEstimate fk_curve(const VectorField& F0, const TimeDependentVelocity* v,
                    double nu, double T, double s, const FkConfig& cfg) {
  const Grid& g = F0.grid;
  validate_fk(g, T, s, cfg);
  if (F0.ncomp() != g.dim())
    throw ConfigError("fk_curve needs one component per dimension");
  const SparseModes f0m = sparsify(transform_forward(F0));
  const FlowConfig fc = flow_config(g, nu, cfg, identity_rotation());
  fc.validate(g.dim());
  NodeStats st = run_batches(g, f0m, v, T, s, cfg, fc, false);
  return assemble(g, std::move(st), cfg, RotationKind::Identity, true);
}

FkEstimate fk_rot2d(const VectorField& F0, const ScalarField& phi, double nu,
                    double T, double s, const FkConfig& cfg) {
  const Grid& g = F0.grid;
  validate_fk(g, T, s, cfg);
  if (g.dim() != 2) throw ConfigError("fk_rot2d is two dimensional");
  if (phi.grid.points() != g.points() || phi.grid.dim() != 2)
    throw ConfigError("fk_rot2d needs phi on the same grid as F0");
  const SparseModes f0m = sparsify(transform_forward(F0));
  const FlowConfig fc = flow_config(g, nu, cfg, brownian_rotation(phi, nu));
  fc.validate(2);
  NodeStats st = run_batches(g, f0m, nullptr, T, s, cfg, fc, false);
  return assemble(g, std::move(st), cfg, RotationKind::Rot2DBrownian, true);
}

FkEstimate fk_surface(const VectorField& F0_curl_form,
                      const TimeDependentVelocity* v, double nu, double T,
                      double s, const FkConfig& cfg) {
  const Grid& g = F0_curl_form.grid;
  validate_fk(g, T, s, cfg);
  if (g.dim() != 3) throw ConfigError("fk_surface is three dimensional");
  const SparseModes f0m = sparsify(transform_forward(F0_curl_form));
  const FlowConfig fc = flow_config(g, nu, cfg, identity_rotation());
  fc.validate(3);
  NodeStats st = run_batches(g, f0m, v, T, s, cfg, fc, true);
  return assemble(g, std::move(st), cfg, RotationKind::Identity, false);
}

FkComplexReport fk_complex_check(const VectorField& F0, const ScalarField& phi,
                                 double nu, double T, double s,
                                 const FkConfig& cfg) {
  const Grid& g = F0.grid;
  validate_fk(g, T, s, cfg);
  if (g.dim() != 2) throw ConfigError("fk_complex_check is two dimensional");
  if (phi.grid.points() != g.points() || phi.grid.dim() != 2)
    throw ConfigError("fk_complex_check needs phi on the same grid as F0");

  const SparseModes f0m = sparsify(transform_forward(F0));
  const RotationSpec rot = brownian_rotation(phi, nu);
  const FlowConfig fc = flow_config(g, nu, cfg, rot);
  fc.validate(2);
  const std::int64_t npts = g.points();
  const int nsteps = int(std::llround(s / cfg.dt));
  if (std::abs(nsteps * cfg.dt - s) > 1e-9 * std::max(1.0, s))
    throw ConfigError("fk window is not an integer number of steps");

  NodeStats st;
  st.mean.assign(std::size_t(npts) * 2, 0.0);
  st.sem.assign(std::size_t(npts) * 2, 0.0);
  st.moment.assign(std::size_t(npts), 0.0);
  st.flags.assign(std::size_t(npts), 0);
  std::vector<double> state_gap(std::size_t(cfg.threads), 0.0);

  auto worker = [&](int tid, std::int64_t lo, std::int64_t hi) {
    using cd = std::complex<double>;
    std::vector<double> qs(std::size_t(cfg.n_paths) * 2);
    std::vector<double> pre(std::size_t(cfg.n_paths) * 2);
    std::vector<cd> ps(std::size_t(cfg.n_paths));
    std::vector<cd> qgrad(std::size_t(cfg.n_paths));
    double& gap = state_gap[std::size_t(tid)];
    const double n = double(cfg.n_paths);
    for (std::int64_t idx = lo; idx < hi; ++idx) {
      const auto x0 = g.node(idx);
      PathBatch batch = make_batch(x0.data(), 2, fc);
      std::fill(ps.begin(), ps.end(), cd(0.0, 0.0));
      std::fill(qgrad.begin(), qgrad.end(), cd(1.0, 0.0));
      for (int k = 0; k < nsteps; ++k) {
        std::copy(batch.positions.begin(), batch.positions.end(), pre.begin());
        step_ensemble(batch, nullptr, fc, node_key(idx, cfg));
        for (int p = 0; p < cfg.n_paths; ++p) {
          const double* xp = pre.data() + std::size_t(p) * 2;
          double vv[2] = {0.0, 0.0};
          rot.velocity.evaluate(xp, vv);
          const cd vc(vv[0], vv[1]);
          const cd dz(batch.position(p)[0] - xp[0],
                      batch.position(p)[1] - xp[1]);
          const cd p0 = ps[std::size_t(p)];
          const cd q0 = qgrad[std::size_t(p)];
          ps[std::size_t(p)] =
              p0 + (std::conj(vc) * p0 - vc * q0) * dz / (4.0 * nu);
          qgrad[std::size_t(p)] =
              q0 + (vc * q0 - std::conj(vc) * p0) * std::conj(dz) / (4.0 * nu);
          const double* gr = batch.gradients.data() + std::size_t(p) * 4;
          const cd pm(0.5 * (gr[0] - gr[3]), 0.5 * (gr[1] + gr[2]));
          const cd qm(0.5 * (gr[0] + gr[3]), 0.5 * (gr[1] - gr[2]));
          gap = std::max(gap, std::abs(ps[std::size_t(p)] - pm));
          gap = std::max(gap, std::abs(qgrad[std::size_t(p)] - qm));
        }
      }
      double msq = 0.0;
      for (int p = 0; p < cfg.n_paths; ++p) {
        double f0[2] = {0.0, 0.0};
        f0m.evaluate(batch.position(p), f0);
        const cd f0c(f0[0], f0[1]);
        const cd qc = std::conj(f0c) * ps[std::size_t(p)] +
                      f0c * qgrad[std::size_t(p)];
        qs[std::size_t(p) * 2] = qc.real();
        qs[std::size_t(p) * 2 + 1] = qc.imag();
        msq += std::norm(qc);
      }
      st.moment[std::size_t(idx)] = msq / n;
      st.flags[std::size_t(idx)] = batch.n_flagged();
      for (int c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (int p = 0; p < cfg.n_paths; ++p) mean += qs[std::size_t(p) * 2 + c];
        mean /= n;
        double var = 0.0;
        for (int p = 0; p < cfg.n_paths; ++p) {
          const double d = qs[std::size_t(p) * 2 + c] - mean;
          var += d * d;
        }
        var = cfg.n_paths > 1 ? var / (n - 1.0) : 0.0;
        st.mean[std::size_t(idx) * 2 + c] = mean;
        st.sem[std::size_t(idx) * 2 + c] = std::sqrt(var / n);
      }
    }
  };

  const int nthreads = int(std::min<std::int64_t>(cfg.threads, npts));
  if (nthreads <= 1) {
    worker(0, 0, npts);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int t = 0; t < nthreads; ++t) {
      const std::int64_t lo = npts * t / nthreads;
      const std::int64_t hi = npts * (t + 1) / nthreads;
      pool.emplace_back(worker, t, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  FkComplexReport rep;
  rep.estimate =
      assemble(g, std::move(st), cfg, RotationKind::Rot2DBrownian, true);
  for (double v2 : state_gap) rep.max_state_gap = std::max(rep.max_state_gap, v2);

  const FkEstimate real_route = fk_rot2d(F0, phi, nu, T, s, cfg);
  for (int c = 0; c < 2; ++c)
    for (std::int64_t i = 0; i < npts; ++i)
      rep.max_estimate_gap = std::max(
          rep.max_estimate_gap,
          std::abs(rep.estimate.field.comp[c][std::size_t(i)] -
                   real_route.field.comp[c][std::size_t(i)]));
  rep.pass = rep.max_estimate_gap <= rep.tolerance;
  return rep;
}

FkComparison compare_estimates(const FkEstimate& a, const FkEstimate& b) {
  return compare_impl(a.field, b.field, &a.se, &b.se);
}

FkComparison compare_to_reference(const FkEstimate& a, const VectorField& ref) {
  return compare_impl(a.field, ref, &a.se, nullptr);
}

double se_h_norm(const FkEstimate& est) {
  double s2 = 0.0;
  for (const auto& comp : est.se.comp)
    for (double v : comp) s2 += v * v;
  return std::sqrt(s2 * est.field.grid.cell_volume());
}

double curled_se_h_bound(const FkEstimate& est) {
  const Grid& g = est.field.grid;
  double k2sum = 0.0;
  for_modes(g, [&](std::int64_t, const std::array<int, 3>& n,
                   const std::array<double, 3>& k) {
    if (has_nyquist(g, n)) return;
    k2sum += k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  });
  return se_h_norm(est) * std::sqrt(k2sum / double(g.points()));
}

}  // namespace vecadvect

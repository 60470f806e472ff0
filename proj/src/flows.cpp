#include "vecadvect/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include <Eigen/Dense>

#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"

namespace vecadvect {

namespace {

using Mat3Row = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

int integer_steps(double t0, double t1, double dt) {
  if (t1 < t0 - 1e-12) throw ConfigError("flow horizon runs backwards");
  const double r = (t1 - t0) / dt;
  const long long n = std::llround(r);
  if (n < 0 || std::abs(r - double(n)) > 1e-6)
    throw ConfigError("flow horizon is not an integer number of steps");
  return int(n);
}

const char* kind_name(RotationKind k) {
  switch (k) {
    case RotationKind::Identity: return "identity";
    case RotationKind::Rot2DSameLaw: return "rot2d-same-law";
    case RotationKind::Rot2DBrownian: return "rot2d-brownian";
    case RotationKind::Rot3DBlock: return "rot3d-block";
    case RotationKind::Rot3DExp: return "rot3d-exp";
  }
  return "?";
}

// One Euler-Maruyama step of positions and, when enabled, of the pathwise
// derivative. The derivative update is the exact Jacobian of the discrete
// position update, so finite differences of the flow map with shared noise
// reproduce it to rounding.
struct Stepper {
  const TimeDependentVelocity* vel = nullptr;
  const RotationSpec* rot = nullptr;
  const FlowConfig* cfg = nullptr;
  int dim = 0;
  double root = 0.0;  // sqrt(2 nu dt)
  bool noise = false;
  bool grads = false;

  Stepper(const TimeDependentVelocity* v, const FlowConfig& c, int d)
      : vel(v), rot(&c.rotation), cfg(&c), dim(d) {
    noise = c.nu > 0.0;
    root = std::sqrt(2.0 * c.nu * c.dt);
    grads = c.with_gradients;
  }

  void advance(double t, const double* z, double* x, double* g,
               std::uint8_t* flag) const {
    const RotationKind kind = rot->kind;
    const bool drift = rot->drift() && vel != nullptr;
    const bool need_vjac =
        grads && drift &&
        (kind == RotationKind::Identity || kind == RotationKind::Rot3DExp);

    double vval[3] = {0.0, 0.0, 0.0};
    double vjac[9] = {0.0};
    if (drift) {
      vel->eval(t, x, vval, need_vjac ? vjac : nullptr);
      if (cfg->guard_length > 0.0) {
        double sp = 0.0;
        for (int d = 0; d < dim; ++d) sp += vval[d] * vval[d];
        if (std::sqrt(sp) * cfg->dt > cfg->guard_length) {
          std::ostringstream os;
          os << "drift step " << std::sqrt(sp) * cfg->dt
             << " exceeds the guard length " << cfg->guard_length;
          throw NumericalGuard(os.str());
        }
      }
    }

    double nv[3] = {0.0, 0.0, 0.0};  // realized sqrt(2 nu) sigma_1 dW
    Vec3 a = Vec3::Zero();
    Mat3 da = Mat3::Zero();
    if (noise) {
      switch (kind) {
        case RotationKind::Identity:
          for (int d = 0; d < dim; ++d) nv[d] = root * z[d];
          break;
        case RotationKind::Rot2DSameLaw:
        case RotationKind::Rot2DBrownian: {
          double th = 0.0;
          rot->angle.evaluate(x, &th);
          const double c = std::cos(th), s = std::sin(th);
          nv[0] = root * (c * z[0] - s * z[1]);
          nv[1] = root * (s * z[0] + c * z[1]);
          break;
        }
        case RotationKind::Rot3DBlock: {
          double th = 0.0;
          rot->angle.evaluate(x, &th);
          const double c = std::cos(th), s = std::sin(th);
          nv[0] = root * (c * z[0] - s * z[1]);
          nv[1] = root * (s * z[0] + c * z[1]);
          nv[2] = root * z[2];
          break;
        }
        case RotationKind::Rot3DExp: {
          rot->axis->eval({x[0], x[1], x[2]}, a, da);
          const Mat3 r = exp_so3(a);
          for (int i = 0; i < 3; ++i)
            nv[i] = root * (r(i, 0) * z[0] + r(i, 1) * z[1] + r(i, 2) * z[2]);
          break;
        }
      }
    }

    if (grads) {
      if (dim == 2) {
        double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;
        if (kind == RotationKind::Identity) {
          m00 = cfg->dt * vjac[0];
          m01 = cfg->dt * vjac[1];
          m10 = cfg->dt * vjac[2];
          m11 = cfg->dt * vjac[3];
        } else {  // Rot2DBrownian
          double vb[2] = {0.0, 0.0};
          rot->velocity.evaluate(x, vb);
          const double half_inv_nu = 0.5 / cfg->nu;
          m00 = vb[1] * nv[1] * half_inv_nu;
          m01 = -vb[0] * nv[1] * half_inv_nu;
          m10 = -vb[1] * nv[0] * half_inv_nu;
          m11 = vb[0] * nv[0] * half_inv_nu;
        }
        const double t00 = m00 * g[0] + m01 * g[2];
        const double t01 = m00 * g[1] + m01 * g[3];
        const double t10 = m10 * g[0] + m11 * g[2];
        const double t11 = m10 * g[1] + m11 * g[3];
        g[0] += t00;
        g[1] += t01;
        g[2] += t10;
        g[3] += t11;
        const double det = g[0] * g[3] - g[1] * g[2];
        if (!(det >= cfg->det_low && det <= cfg->det_high)) *flag = 1;
      } else {
        Mat3Row m = Mat3Row::Zero();
        if (need_vjac)
          m = cfg->dt * Eigen::Map<const Mat3Row>(vjac);
        if (kind == RotationKind::Rot3DExp && noise) {
          const Vec3 e(nv[0], nv[1], nv[2]);
          for (int l = 0; l < 3; ++l)
            m.col(l) += correction_term(a, da.col(l)) * e;
        }
        Eigen::Map<Mat3Row> gm(g);
        gm += (m * gm).eval();
        const double det = gm.determinant();
        if (!(det >= cfg->det_low && det <= cfg->det_high)) *flag = 1;
      }
    }

    for (int d = 0; d < dim; ++d)
      x[d] += (drift ? cfg->dt * vval[d] : 0.0) + nv[d];
  }
};

}  // namespace

int RotationSpec::required_dim() const {
  switch (kind) {
    case RotationKind::Identity: return 0;
    case RotationKind::Rot2DSameLaw:
    case RotationKind::Rot2DBrownian: return 2;
    case RotationKind::Rot3DBlock:
    case RotationKind::Rot3DExp: return 3;
  }
  return 0;
}

std::array<double, 3> RotationSpec::box() const {
  if (kind == RotationKind::Rot3DExp && axis) return axis->box();
  if (rotates()) return angle.box;
  return {0.0, 0.0, 0.0};
}

RotationSpec identity_rotation() { return {}; }

RotationSpec same_law_rotation(const ScalarField& angle) {
  if (angle.grid.dim() != 2)
    throw ConfigError("same-law rotation expects a 2d angle field");
  RotationSpec r;
  r.kind = RotationKind::Rot2DSameLaw;
  r.angle = sparsify(transform_forward(angle));
  return r;
}

RotationSpec brownian_rotation(const ScalarField& phi, double nu) {
  if (phi.grid.dim() != 2)
    throw ConfigError("brownian rotation expects a 2d stream function");
  if (!(nu > 0.0)) throw ConfigError("brownian rotation needs nu > 0");
  const SpectralScalarField ph = transform_forward(phi);
  SpectralScalarField scaled = ph;
  for (auto& c : scaled.coef) c /= -2.0 * nu;
  RotationSpec r;
  r.kind = RotationKind::Rot2DBrownian;
  r.angle = sparsify(scaled);
  r.velocity = sparsify(perp_grad(ph));
  r.correction_scale = -2.0 * nu;
  return r;
}

RotationSpec block_rotation(const ScalarField& angle) {
  if (angle.grid.dim() != 3)
    throw ConfigError("block rotation expects a 3d angle field");
  RotationSpec r;
  r.kind = RotationKind::Rot3DBlock;
  r.angle = sparsify(transform_forward(angle));
  return r;
}

RotationSpec exp_rotation(RotationAlgebraField axis) {
  RotationSpec r;
  r.kind = RotationKind::Rot3DExp;
  r.axis = std::make_shared<RotationAlgebraField>(std::move(axis));
  return r;
}

void FlowConfig::validate(int dim) const {
  if (dim != 2 && dim != 3) throw ConfigError("flows support dim 2 or 3");
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw ConfigError("flow nu must be finite and >= 0");
  if (!(dt > 0.0)) throw ConfigError("flow dt must be positive");
  if (n_paths < 1) throw ConfigError("flow needs at least one path");
  if (!(det_low > 0.0 && det_low < det_high))
    throw ConfigError("determinant flag window must satisfy 0 < low < high");
  if (guard_length < 0.0) throw ConfigError("guard length must be >= 0");

  const int rd = rotation.required_dim();
  if (rd != 0 && rd != dim) {
    std::ostringstream os;
    os << "rotation kind " << kind_name(rotation.kind) << " needs dim " << rd
       << ", flow has dim " << dim;
    throw ConfigError(os.str());
  }
  switch (rotation.kind) {
    case RotationKind::Identity:
      break;
    case RotationKind::Rot2DSameLaw:
    case RotationKind::Rot3DBlock:
      if (rotation.angle.ncomp != 1 || rotation.angle.dim != dim)
        throw ConfigError("rotation angle field has the wrong shape");
      break;
    case RotationKind::Rot2DBrownian:
      if (!(nu > 0.0))
        throw ConfigError("the drift-free rotated flow needs nu > 0");
      if (rotation.angle.ncomp != 1 || rotation.velocity.ncomp != 2)
        throw ConfigError("rotation stream data has the wrong shape");
      break;
    case RotationKind::Rot3DExp:
      if (!rotation.axis) throw ConfigError("rotation axis field is missing");
      break;
  }
  if (with_gradients && (rotation.kind == RotationKind::Rot2DSameLaw ||
                         rotation.kind == RotationKind::Rot3DBlock)) {
    std::ostringstream os;
    os << "pathwise derivative is not implemented for rotation kind "
       << kind_name(rotation.kind);
    throw ConfigError(os.str());
  }
}

std::int64_t PathBatch::n_flagged() const {
  std::int64_t n = 0;
  for (auto f : flagged) n += f != 0;
  return n;
}

PathBatch make_batch(const double* x0, int dim, const FlowConfig& cfg) {
  cfg.validate(dim);
  PathBatch b;
  b.dim = dim;
  b.n_paths = cfg.n_paths;
  b.positions.resize(std::size_t(cfg.n_paths) * dim);
  for (int p = 0; p < cfg.n_paths; ++p)
    for (int d = 0; d < dim; ++d) b.positions[std::size_t(p) * dim + d] = x0[d];
  if (cfg.with_gradients) {
    b.gradients.assign(std::size_t(cfg.n_paths) * dim * dim, 0.0);
    for (int p = 0; p < cfg.n_paths; ++p)
      for (int d = 0; d < dim; ++d)
        b.gradients[(std::size_t(p) * dim + d) * dim + d] = 1.0;
  }
  b.flagged.assign(cfg.n_paths, 0);
  return b;
}

void step_ensemble(PathBatch& batch, const TimeDependentVelocity* v,
                   const FlowConfig& cfg, std::uint32_t node) {
  cfg.validate(batch.dim);
  if (batch.n_paths != cfg.n_paths)
    throw ConfigError("batch size does not match the flow config");
  const Stepper st(v, cfg, batch.dim);
  const std::size_t dd = std::size_t(batch.dim) * batch.dim;
  double z[3] = {0.0, 0.0, 0.0};
  for (int p = 0; p < batch.n_paths; ++p) {
    if (st.noise)
      NormalStream(cfg.seed, node, std::uint32_t(p))
          .normals(batch.step, 0, z, batch.dim);
    st.advance(batch.time, z, batch.position(p),
               cfg.with_gradients ? batch.gradients.data() + p * dd : nullptr,
               &batch.flagged[p]);
  }
  batch.time += cfg.dt;
  batch.step += 1;
}

PathBatch simulate_paths(const double* x0, int dim,
                         const TimeDependentVelocity* v, const FlowConfig& cfg,
                         std::uint32_t node, double t0, double t1) {
  const int n = integer_steps(t0, t1, cfg.dt);
  PathBatch b = make_batch(x0, dim, cfg);
  b.time = t0;
  for (int k = 0; k < n; ++k) step_ensemble(b, v, cfg, node);
  return b;
}

Contour Contour::circle(const std::array<double, 2>& center, double radius,
                        int m) {
  if (!(radius > 0.0)) throw ConfigError("contour radius must be positive");
  Contour c;
  c.dim = 2;
  c.points.resize(std::size_t(m > 0 ? m : 0) * 2);
  for (int i = 0; i < m; ++i) {
    const double th = 2.0 * Grid::kPi * i / m;
    c.points[2 * std::size_t(i)] = center[0] + radius * std::cos(th);
    c.points[2 * std::size_t(i) + 1] = center[1] + radius * std::sin(th);
  }
  validate_contour(c);
  return c;
}

Contour Contour::circle3(const std::array<double, 3>& center, double radius,
                         const std::array<double, 3>& span1,
                         const std::array<double, 3>& span2, int m) {
  if (!(radius > 0.0)) throw ConfigError("contour radius must be positive");
  Vec3 e1(span1[0], span1[1], span1[2]);
  Vec3 e2(span2[0], span2[1], span2[2]);
  if (e1.norm() < 1e-12) throw ConfigError("contour plane vector is zero");
  e1.normalize();
  e2 -= e1.dot(e2) * e1;
  if (e2.norm() < 1e-10)
    throw ConfigError("contour plane vectors are parallel");
  e2.normalize();
  Contour c;
  c.dim = 3;
  c.points.resize(std::size_t(m > 0 ? m : 0) * 3);
  for (int i = 0; i < m; ++i) {
    const double th = 2.0 * Grid::kPi * i / m;
    const Vec3 p = Vec3(center[0], center[1], center[2]) +
                   radius * (std::cos(th) * e1 + std::sin(th) * e2);
    for (int d = 0; d < 3; ++d) c.points[3 * std::size_t(i) + d] = p[d];
  }
  validate_contour(c);
  return c;
}

void validate_contour(const Contour& gamma) {
  if (gamma.dim != 2 && gamma.dim != 3)
    throw ConfigError("contours support dim 2 or 3");
  if (gamma.points.size() % gamma.dim != 0)
    throw ConfigError("contour point array has a ragged shape");
  const int m = gamma.size();
  if (m < 16) throw ConfigError("contours need at least 16 points");
  for (int i = 0; i < m; ++i) {
    const double* a = gamma.point(i);
    const double* b = gamma.point((i + 1) % m);
    double d2 = 0.0;
    for (int d = 0; d < gamma.dim; ++d) d2 += (b[d] - a[d]) * (b[d] - a[d]);
    if (!(d2 > 0.0))
      throw ConfigError("consecutive contour points must be distinct");
  }
}

ContourEnsemble transport_contour(const Contour& gamma,
                                  const TimeDependentVelocity* v,
                                  const FlowConfig& cfg, double t0, double t1) {
  validate_contour(gamma);
  cfg.validate(gamma.dim);
  const int n = integer_steps(t0, t1, cfg.dt);
  const int dim = gamma.dim;
  const int m = gamma.size();
  const std::size_t dd = std::size_t(dim) * dim;

  ContourEnsemble e;
  e.dim = dim;
  e.n_paths = cfg.n_paths;
  e.m = m;
  e.time = t1;
  e.positions.resize(std::size_t(cfg.n_paths) * m * dim);
  if (cfg.with_gradients)
    e.gradients.assign(std::size_t(cfg.n_paths) * m * dd, 0.0);

  const Stepper st(v, cfg, dim);
  std::vector<double> pos(std::size_t(m) * dim);
  std::vector<double> grd;
  std::vector<std::uint8_t> flags(m, 0);
  double z[3] = {0.0, 0.0, 0.0};
  for (int p = 0; p < cfg.n_paths; ++p) {
    std::copy(gamma.points.begin(), gamma.points.end(), pos.begin());
    if (cfg.with_gradients) {
      grd.assign(std::size_t(m) * dd, 0.0);
      for (int i = 0; i < m; ++i)
        for (int d = 0; d < dim; ++d) grd[i * dd + d * std::size_t(dim) + d] = 1.0;
    }
    std::fill(flags.begin(), flags.end(), 0);
    const NormalStream ns(cfg.seed, kContourNode, std::uint32_t(p));
    for (int k = 0; k < n; ++k) {
      if (st.noise) ns.normals(std::uint32_t(k), 0, z, dim);
      const double t = t0 + k * cfg.dt;
      for (int i = 0; i < m; ++i)
        st.advance(t, z, pos.data() + std::size_t(i) * dim,
                   cfg.with_gradients ? grd.data() + i * dd : nullptr,
                   &flags[i]);
    }
    std::copy(pos.begin(), pos.end(),
              e.positions.begin() + std::size_t(p) * m * dim);
    if (cfg.with_gradients)
      std::copy(grd.begin(), grd.end(),
                e.gradients.begin() + std::size_t(p) * m * dd);
  }
  return e;
}

double circulation(const double* pts, int m, int dim, const FieldEvaluator& f) {
  if (m < 3) throw ConfigError("circulation needs at least 3 points");
  if (dim != 2 && dim != 3) throw ConfigError("circulation supports dim 2 or 3");
  double acc = 0.0;
  double mid[3], fv[3];
  for (int i = 0; i < m; ++i) {
    const double* a = pts + std::size_t(i) * dim;
    const double* b = pts + std::size_t((i + 1) % m) * dim;
    for (int d = 0; d < dim; ++d) mid[d] = 0.5 * (a[d] + b[d]);
    for (int d = 0; d < dim; ++d) fv[d] = 0.0;
    f(mid, fv);
    for (int d = 0; d < dim; ++d) acc += fv[d] * (b[d] - a[d]);
  }
  return acc;
}

double circulation(const double* pts, int m, int dim, const SparseModes& f) {
  if (f.ncomp != dim)
    throw ConfigError("circulation field must have dim components");
  return circulation(pts, m, dim, [&f](const double* x, double* out) {
    f.evaluate(x, out);
  });
}

double circulation(const Contour& gamma, const VectorField& f) {
  validate_contour(gamma);
  if (f.grid.dim() != gamma.dim)
    throw ConfigError("circulation field dimension mismatch");
  const SparseModes sm = sparsify(transform_forward(f));
  return circulation(gamma.points.data(), gamma.size(), gamma.dim, sm);
}

namespace {

// F(te) between trajectory snapshots: linear blend of the two bracketing
// states, each evaluated through its Fourier modes.
struct BlendedState {
  const SparseModes* lo = nullptr;
  const SparseModes* hi = nullptr;
  double wlo = 1.0, whi = 0.0;
  int ncomp = 0;

  void operator()(const double* x, double* out) const {
    double tmp[3] = {0.0, 0.0, 0.0};
    lo->evaluate(x, tmp);
    for (int c = 0; c < ncomp; ++c) out[c] = wlo * tmp[c];
    if (hi != nullptr) {
      for (int c = 0; c < ncomp; ++c) tmp[c] = 0.0;
      hi->evaluate(x, tmp);
      for (int c = 0; c < ncomp; ++c) out[c] += whi * tmp[c];
    }
  }
};

BlendedState locate_state(const Trajectory& traj, double te,
                          std::vector<SparseModes>& cache,
                          std::vector<int>& cached) {
  const auto& tv = traj.times;
  if (tv.empty()) throw ConfigError("trajectory holds no snapshots");
  const double tol = 1e-9 * std::max(1.0, std::abs(te));
  if (te < tv.front() - tol || te > tv.back() + tol)
    throw ConfigError("requested time lies outside the trajectory");
  const auto get = [&](int i) -> const SparseModes* {
    for (std::size_t j = 0; j < cached.size(); ++j)
      if (cached[j] == i) return &cache[j];
    cache.push_back(sparsify(traj.states[std::size_t(i)]));
    cached.push_back(i);
    return &cache.back();
  };
  BlendedState b;
  b.ncomp = traj.grid.dim();
  auto it = std::lower_bound(tv.begin(), tv.end(), te - tol);
  int hi = int(it - tv.begin());
  if (hi >= int(tv.size())) hi = int(tv.size()) - 1;
  if (std::abs(tv[std::size_t(hi)] - te) <= tol) {
    b.lo = get(hi);
    return b;
  }
  if (hi == 0) {
    b.lo = get(0);
    return b;
  }
  const int lo = hi - 1;
  const double span = tv[std::size_t(hi)] - tv[std::size_t(lo)];
  b.whi = (te - tv[std::size_t(lo)]) / span;
  b.wlo = 1.0 - b.whi;
  b.lo = get(lo);
  b.hi = get(hi);
  return b;
}

}  // namespace

MartingaleResult martingale_test(const Contour& gamma, const Trajectory& traj,
                                 const TimeDependentVelocity* v, double T,
                                 double s, const FlowConfig& cfg,
                                 int n_checkpoints, double bias_allowance) {
  validate_contour(gamma);
  if (traj.grid.dim() != gamma.dim)
    throw ConfigError("trajectory and contour dimensions differ");
  if (std::abs(cfg.nu - traj.nu) > 1e-12 * std::max(1.0, traj.nu))
    throw ConfigError("flow and trajectory must share the same nu");
  if (!(s > 0.0) || s > T + 1e-12)
    throw ConfigError("martingale window must satisfy 0 < s <= T");
  if (n_checkpoints < 2) throw ConfigError("need at least two checkpoints");
  if (bias_allowance < 0.0) throw ConfigError("bias allowance must be >= 0");

  FlowConfig fc = cfg;
  fc.with_gradients = false;
  if (fc.guard_length == 0.0) {
    double lmin = traj.grid.box(0);
    for (int a = 1; a < traj.grid.dim(); ++a)
      lmin = std::min(lmin, traj.grid.box(a));
    fc.guard_length = 0.5 * lmin;
  }
  fc.validate(gamma.dim);

  const double t0 = T - s;
  const int nsteps = integer_steps(t0, T, fc.dt);
  if (nsteps < n_checkpoints - 1 || nsteps % (n_checkpoints - 1) != 0)
    throw ConfigError(
        "checkpoint count must divide the step count of the window");
  const int spc = nsteps / (n_checkpoints - 1);

  std::vector<SparseModes> cache;
  cache.reserve(2 * std::size_t(n_checkpoints));
  std::vector<int> cached;
  std::vector<BlendedState> evals(static_cast<std::size_t>(n_checkpoints));
  for (int j = 0; j < n_checkpoints; ++j) {
    const double te = std::max(0.0, s - double(j) * spc * fc.dt);
    evals[std::size_t(j)] = locate_state(traj, te, cache, cached);
  }

  const int dim = gamma.dim;
  const int m = gamma.size();
  const double start_value =
      circulation(gamma.points.data(), m, dim, std::cref(evals[0]));

  std::vector<std::vector<double>> circs(
      std::size_t(n_checkpoints) - 1,
      std::vector<double>(std::size_t(fc.n_paths), 0.0));
  const Stepper st(v, fc, dim);
  std::vector<double> pos(std::size_t(m) * dim);
  std::uint8_t dummy_flag = 0;
  double z[3] = {0.0, 0.0, 0.0};
  for (int p = 0; p < fc.n_paths; ++p) {
    std::copy(gamma.points.begin(), gamma.points.end(), pos.begin());
    const NormalStream ns(fc.seed, kContourNode, std::uint32_t(p));
    for (int k = 0; k < nsteps; ++k) {
      if (st.noise) ns.normals(std::uint32_t(k), 0, z, dim);
      const double t = t0 + k * fc.dt;
      for (int i = 0; i < m; ++i)
        st.advance(t, z, pos.data() + std::size_t(i) * dim, nullptr,
                   &dummy_flag);
      if ((k + 1) % spc == 0) {
        const int j = (k + 1) / spc;
        circs[std::size_t(j) - 1][std::size_t(p)] =
            circulation(pos.data(), m, dim, std::cref(evals[std::size_t(j)]));
      }
    }
  }

  MartingaleResult r;
  r.start_value = start_value;
  r.checkpoints.resize(std::size_t(n_checkpoints));
  r.checkpoints[0] = {t0, 0.0, 0.0, 0.0, true};
  for (int j = 1; j < n_checkpoints; ++j) {
    const auto& c = circs[std::size_t(j) - 1];
    const double n = double(fc.n_paths);
    double mean = 0.0;
    for (double x : c) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : c) var += (x - mean) * (x - mean);
    var = fc.n_paths > 1 ? var / (n - 1.0) : 0.0;
    MartingaleCheckpoint& cp = r.checkpoints[std::size_t(j)];
    cp.t = t0 + double(j) * spc * fc.dt;
    cp.mean_delta = mean - start_value;
    cp.se = std::sqrt(var / n);
    cp.bound = 3.0 * cp.se + bias_allowance * fc.dt * (cp.t - t0);
    cp.pass = std::abs(cp.mean_delta) <= cp.bound;
    r.pass = r.pass && cp.pass;
  }
  return r;
}

OnePointLawResult one_point_law_test(const double* x0, int dim,
                                     const TimeDependentVelocity* v,
                                     const FlowConfig& cfg, double T) {
  if (!(cfg.nu > 0.0))
    throw ConfigError("the one-point law test needs nu > 0");
  const PathBatch b = simulate_paths(x0, dim, v, cfg, 0, 0.0, T);
  const std::int64_t n = b.n_paths;
  if (n < 2) throw ConfigError("the one-point law test needs n_paths >= 2");

  OnePointLawResult r;
  r.dim = dim;
  r.n_paths = n;
  r.expected_var = 2.0 * cfg.nu * T;

  std::array<double, 3> mean{};
  for (int p = 0; p < n; ++p)
    for (int d = 0; d < dim; ++d) mean[std::size_t(d)] += b.position(p)[d] - x0[d];
  for (int d = 0; d < dim; ++d) mean[std::size_t(d)] /= double(n);

  std::array<double, 3> m2{}, m4{};
  std::array<std::array<double, 3>, 3> cov{}, covv{};
  for (int p = 0; p < n; ++p) {
    double dd[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d)
      dd[d] = b.position(p)[d] - x0[d] - mean[std::size_t(d)];
    for (int c = 0; c < dim; ++c) {
      m2[std::size_t(c)] += dd[c] * dd[c];
      m4[std::size_t(c)] += dd[c] * dd[c] * dd[c] * dd[c];
      for (int e = 0; e < dim; ++e) cov[std::size_t(c)][std::size_t(e)] += dd[c] * dd[e];
    }
  }
  for (int c = 0; c < dim; ++c) {
    m2[std::size_t(c)] /= double(n);
    m4[std::size_t(c)] /= double(n);
    for (int e = 0; e < dim; ++e) cov[std::size_t(c)][std::size_t(e)] /= double(n - 1);
  }
  // spread of the product samples, for the cov standard errors
  for (int p = 0; p < n; ++p) {
    double dd[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d)
      dd[d] = b.position(p)[d] - x0[d] - mean[std::size_t(d)];
    for (int c = 0; c < dim; ++c)
      for (int e = 0; e < dim; ++e) {
        const double q = dd[c] * dd[e] - cov[std::size_t(c)][std::size_t(e)];
        covv[std::size_t(c)][std::size_t(e)] += q * q;
      }
  }

  r.pass = true;
  for (int c = 0; c < dim; ++c) {
    r.mean[std::size_t(c)] = mean[std::size_t(c)];
    r.mean_se[std::size_t(c)] =
        std::sqrt(m2[std::size_t(c)] * double(n) / double(n - 1) / double(n));
    r.kurtosis[std::size_t(c)] =
        m4[std::size_t(c)] / (m2[std::size_t(c)] * m2[std::size_t(c)]);
    for (int e = 0; e < dim; ++e) {
      r.cov[std::size_t(c)][std::size_t(e)] = cov[std::size_t(c)][std::size_t(e)];
      r.cov_se[std::size_t(c)][std::size_t(e)] =
          std::sqrt(covv[std::size_t(c)][std::size_t(e)] / double(n - 1) / double(n));
    }
  }
  r.kurtosis_se = std::sqrt(24.0 / double(n));
  for (int c = 0; c < dim; ++c) {
    if (std::abs(r.mean[std::size_t(c)]) > 3.0 * r.mean_se[std::size_t(c)])
      r.pass = false;
    if (std::abs(r.kurtosis[std::size_t(c)] - 3.0) > 3.0 * r.kurtosis_se)
      r.pass = false;
    for (int e = 0; e < dim; ++e) {
      const double target = c == e ? r.expected_var : 0.0;
      if (std::abs(r.cov[std::size_t(c)][std::size_t(e)] - target) >
          3.0 * r.cov_se[std::size_t(c)][std::size_t(e)])
        r.pass = false;
    }
  }
  return r;
}

namespace {

double sum_2d_form(const Contour& gamma, const SparseModes& gmodes,
                   const SparseModes& angle, int stride) {
  const int m = gamma.size();
  double acc = 0.0;
  double mid[2];
  for (int i = 0; i < m; i += stride) {
    const double* a = gamma.point(i);
    const double* b = gamma.point((i + stride) % m);
    mid[0] = 0.5 * (a[0] + b[0]);
    mid[1] = 0.5 * (a[1] + b[1]);
    double gv = 0.0, tha = 0.0, thb = 0.0;
    gmodes.evaluate(mid, &gv);
    angle.evaluate(a, &tha);
    angle.evaluate(b, &thb);
    acc += gv * (thb - tha);
  }
  return acc;
}

using AxisEval = std::function<void(const double* x, Vec3& a, Mat3& da)>;

double sum_3d_form(const Contour& gamma, const SparseModes& curlm,
                   const AxisEval& axis, int stride) {
  const int m = gamma.size();
  double acc = 0.0;
  double mid[3], cv[3];
  Vec3 a;
  Mat3 da;
  for (int i = 0; i < m; i += stride) {
    const double* p = gamma.point(i);
    const double* q = gamma.point((i + stride) % m);
    for (int d = 0; d < 3; ++d) mid[d] = 0.5 * (p[d] + q[d]);
    for (int d = 0; d < 3; ++d) cv[d] = 0.0;
    curlm.evaluate(mid, cv);
    axis(mid, a, da);
    for (int k = 0; k < 3; ++k) {
      const Vec3 w = rotation_rate_spatial(a, da.col(k));
      acc += (cv[0] * w[0] + cv[1] * w[1] + cv[2] * w[2]) * (q[k] - p[k]);
    }
  }
  return acc;
}

double refined(double fine, double coarse) {
  return (4.0 * fine - coarse) / 3.0;
}

void require_even(const Contour& gamma) {
  if (gamma.size() % 2 != 0)
    throw ConfigError(
        "the correction integrand needs an even point count for its "
        "half-mesh refinement");
}

double correction_3d(const Contour& gamma, const SpectralVectorField& f,
                     const AxisEval& axis) {
  const SparseModes curlm = sparsify(curl3(f));
  return refined(sum_3d_form(gamma, curlm, axis, 1),
                 sum_3d_form(gamma, curlm, axis, 2));
}

}  // namespace

double correction_term_integrand(const Contour& gamma,
                                 const SpectralVectorField& f,
                                 const RotationSpec& rot) {
  validate_contour(gamma);
  require_even(gamma);
  if (rot.kind == RotationKind::Identity) return 0.0;
  if (rot.required_dim() != gamma.dim)
    throw ConfigError("rotation kind and contour dimension differ");
  if (f.grid.dim() != gamma.dim)
    throw ConfigError("field and contour dimensions differ");

  if (gamma.dim == 2) {
    // d2 f1 - d1 f2 = -rot2(f)
    SpectralScalarField g = rot2(f);
    for (auto& c : g.coef) c = -c;
    const SparseModes gm = sparsify(g);
    return rot.correction_scale *
           refined(sum_2d_form(gamma, gm, rot.angle, 1),
                   sum_2d_form(gamma, gm, rot.angle, 2));
  }

  if (rot.kind == RotationKind::Rot3DBlock) {
    const SparseModes& th = rot.angle;
    const AxisEval axis = [&th](const double* x, Vec3& a, Mat3& da) {
      double val = 0.0, jac[3] = {0.0, 0.0, 0.0};
      th.evaluate(x, &val, jac);
      a = Vec3(0.0, 0.0, val);
      da.setZero();
      for (int k = 0; k < 3; ++k) da(2, k) = jac[k];
    };
    return correction_3d(gamma, f, axis);
  }

  const RotationAlgebraField& ax = *rot.axis;
  const AxisEval axis = [&ax](const double* x, Vec3& a, Mat3& da) {
    ax.eval({x[0], x[1], x[2]}, a, da);
  };
  return correction_3d(gamma, f, axis);
}

double correction_term_integrand(const Contour& gamma,
                                 const SpectralVectorField& f,
                                 const SparseModes& axis) {
  validate_contour(gamma);
  require_even(gamma);
  if (gamma.dim != 3 || f.grid.dim() != 3 || axis.dim != 3 || axis.ncomp != 3)
    throw ConfigError("the axis-mode correction integrand is 3d only");
  const AxisEval ae = [&axis](const double* x, Vec3& a, Mat3& da) {
    double val[3] = {0.0, 0.0, 0.0};
    double jac[9] = {0.0};
    axis.evaluate(x, val, jac);
    for (int i = 0; i < 3; ++i) {
      a[i] = val[i];
      for (int k = 0; k < 3; ++k) da(i, k) = jac[i * 3 + k];
    }
  };
  return correction_3d(gamma, f, ae);
}

void enforce_flag_budget(std::int64_t flagged, std::int64_t total,
                         double max_fraction) {
  if (total <= 0) throw ConfigError("flag budget needs a positive total");
  if (double(flagged) > max_fraction * double(total)) {
    std::ostringstream os;
    os << flagged << " of " << total
       << " paths hit the determinant flag window (budget "
       << max_fraction * 100.0 << "%)";
    throw NumericalGuard(os.str());
  }
}

}  // namespace vecadvect

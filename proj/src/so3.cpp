#include "vecadvect/so3.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "vecadvect/analytic.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/rng.hpp"

namespace vecadvect {

namespace {

constexpr double kPi = Grid::kPi;
constexpr double kSeriesSwitch = 1e-6;
constexpr double kBranchMargin = 1e-6;

// sin(t)/t
double coef_sinc(double t) {
  if (t < kSeriesSwitch) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0;
  }
  return std::sin(t) / t;
}

// (1 - cos t)/t^2, evaluated as 2 sin^2(t/2)/t^2 to avoid cancellation.
double coef_versine(double t) {
  if (t < kSeriesSwitch) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0;
  }
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin t)/t^3
double coef_cubic(double t) {
  if (t < kSeriesSwitch) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

}  // namespace

Mat3 hat(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u[2], u[1], u[2], 0.0, -u[0], -u[1], u[0], 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  const double sym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (sym > 1e-12) throw ConfigError("vee: input is not antisymmetric");
  return Vec3(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
              0.5 * (m(1, 0) - m(0, 1)));
}

Mat3 exp_so3(const Vec3& a) {
  const double t = a.norm();
  double c1, c2;
  if (t < 1e-8) {
    const double t2 = t * t;
    c1 = 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0;
    c2 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0;
  } else {
    c1 = std::sin(t) / t;
    const double s = std::sin(0.5 * t);
    c2 = 2.0 * s * s / (t * t);
  }
  const Mat3 ah = hat(a);
  return Mat3::Identity() + c1 * ah + c2 * (ah * ah);
}

Vec3 log_so3(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vec3 anti(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
                  0.5 * (r(1, 0) - r(0, 1)));
  const double s = anti.norm();  // sin(theta), read off the matrix itself
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) return anti;
  if (theta < kPi - 1e-4) return (theta / s) * anti;
  // Near pi the antisymmetric part degenerates; recover the axis from the
  // rank-one symmetric part n n^T = (sym(r) - c I)/(1 - c).
  const Mat3 nnt = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int j = 0;
  for (int i = 1; i < 3; ++i)
    if (nnt(i, i) > nnt(j, j)) j = i;
  Vec3 n = nnt.col(j) / std::sqrt(std::max(nnt(j, j), 1e-300));
  n.normalize();
  if (anti.dot(n) < 0.0) n = -n;
  return theta * n;
}

BchResult bch(const Vec3& u, const Vec3& v) {
  const double theta = u.norm();
  const double phi = v.norm();
  if (theta >= kPi - kBranchMargin || phi >= kPi - kBranchMargin)
    throw NumericalGuard("bch: input rotation angle too close to pi");
  if (theta == 0.0) return {v, false};
  if (phi == 0.0) return {u, false};

  const double c = std::clamp(u.dot(v) / (theta * phi), -1.0, 1.0);
  const double st = std::sin(theta), sp = std::sin(phi);
  const double sht = std::sin(0.5 * theta), shp = std::sin(0.5 * phi);
  const double cht = std::cos(0.5 * theta), chp = std::cos(0.5 * phi);

  const double a1 = st * chp * chp - sp * sht * sht * c;
  const double b1 = sp * cht * cht - st * shp * shp * c;
  const double c1 = 0.5 * st * sp - 2.0 * sht * sht * shp * shp * c;

  const Vec3 n = (a1 / theta) * u + (b1 / phi) * v + (c1 / (theta * phi)) * u.cross(v);
  const double d = n.norm();

  BchResult out;
  out.clamped = d > 1.0;
  const double ds = std::min(d, 1.0);

  // cos of the composite angle from the quaternion real part.
  const double q0 = cht * chp - sht * shp * c;
  const double cos_total = 2.0 * q0 * q0 - 1.0;
  const double angle = cos_total >= 0.0 ? std::asin(ds) : kPi - std::asin(ds);
  if (angle >= kPi - kBranchMargin)
    throw NumericalGuard("bch: composite rotation angle too close to pi");

  out.w = d < 1e-15 ? Vec3(u + v) : Vec3((angle / ds) * n);
  return out;
}

Vec3 rotation_rate_spatial(const Vec3& a, const Vec3& da) {
  const double t = a.norm();
  return coef_sinc(t) * da + coef_cubic(t) * a.dot(da) * a +
         coef_versine(t) * a.cross(da);
}

Vec3 rotation_rate_body(const Vec3& a, const Vec3& da) {
  const double t = a.norm();
  return coef_sinc(t) * da + coef_cubic(t) * a.dot(da) * a -
         coef_versine(t) * a.cross(da);
}

Mat3 correction_term(const Vec3& a, const Vec3& da) {
  return hat(rotation_rate_spatial(a, da));
}

Mat3 correction_term_axis_form(const Vec3& a, const Vec3& da) {
  const double t = a.norm();
  if (!(t > 0.0))
    throw ConfigError("correction_term_axis_form: |a| must be positive");
  const Vec3 b = a / t;
  const double dt = a.dot(da) / t;
  const Vec3 db = da / t - a * (a.dot(da) / (t * t * t));
  return (1.0 - std::cos(t)) * hat(b.cross(db)) + std::sin(t) * hat(db) +
         hat(b) * dt;
}

RotationAlgebraField::RotationAlgebraField(const std::array<double, 3>& box,
                                           std::vector<RotationAlgebraTerm> terms)
    : box_(box), terms_(std::move(terms)) {
  for (int d = 0; d < 3; ++d)
    if (!(box_[d] > 0.0))
      throw ConfigError("RotationAlgebraField: box lengths must be positive");
}

void RotationAlgebraField::eval(const std::array<double, 3>& x, Vec3& a,
                                Mat3& da) const {
  a.setZero();
  da.setZero();
  for (const auto& term : terms_) {
    std::array<double, 3> k;
    double kx = term.phase;
    for (int d = 0; d < 3; ++d) {
      k[d] = 2.0 * kPi * term.mode[d] / box_[d];
      kx += k[d] * x[d];
    }
    const double cs = std::cos(kx);
    const double sn = std::sin(kx);
    a += term.amplitude * cs;
    for (int d = 0; d < 3; ++d) da.col(d) -= term.amplitude * (sn * k[d]);
  }
}

Vec3 RotationAlgebraField::value(const std::array<double, 3>& x) const {
  Vec3 a;
  Mat3 da;
  eval(x, a, da);
  return a;
}

double RotationAlgebraField::amplitude_bound() const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.amplitude.norm();
  return s;
}

RotationAlgebraField random_rotation_algebra_field(
    const std::array<double, 3>& box, std::uint64_t seed, int n_terms,
    int max_mode, double amplitude) {
  if (n_terms < 1) throw ConfigError("random_rotation_algebra_field: n_terms >= 1");
  if (max_mode < 1) throw ConfigError("random_rotation_algebra_field: max_mode >= 1");
  const std::uint32_t span = 2 * std::uint32_t(max_mode) + 1;
  std::vector<RotationAlgebraTerm> terms(n_terms);
  for (int j = 0; j < n_terms; ++j) {
    NormalStream ns(seed, kFieldGenNode, 0x524F5400u + std::uint32_t(j));
    RotationAlgebraTerm& term = terms[j];
    std::uint32_t block = 0;
    bool zero = true;
    while (zero) {
      const std::uint64_t bits = ns.bits(0, block++);
      for (int d = 0; d < 3; ++d) {
        const std::uint32_t part = std::uint32_t(bits >> (20 * d)) & 0xFFFFFu;
        term.mode[d] = int(part % span) - max_mode;
        if (term.mode[d] != 0) zero = false;
      }
    }
    term.phase = 2.0 * kPi * u64_to_unit(ns.bits(1, 0));
    double z[4];
    ns.normals(2, 0, z, 3);
    Vec3 dir(z[0], z[1], z[2]);
    if (dir.norm() < 1e-12) dir = Vec3(1.0, 0.0, 0.0);
    term.amplitude = dir.normalized() * (amplitude / n_terms);
  }
  return RotationAlgebraField(box, std::move(terms));
}

ConnectionOneForm connection_of_rotation_field(const RotationAlgebraField& field,
                                               const Grid& g) {
  if (g.dim() != 3)
    throw ConfigError("connection_of_rotation_field: grid must be 3D");
  for (int d = 0; d < 3; ++d)
    if (std::abs(g.box(d) - field.box()[d]) > 1e-12 * field.box()[d])
      throw ConfigError("connection_of_rotation_field: box mismatch");
  ConnectionOneForm conn;
  conn.grid = g;
  for (int k = 0; k < 3; ++k) conn.comp[k] = VectorField(g, 3);
  const std::int64_t m = g.points();
  for (std::int64_t p = 0; p < m; ++p) {
    const auto x = g.node(p);
    Vec3 a;
    Mat3 da;
    field.eval(x, a, da);
    for (int k = 0; k < 3; ++k) {
      const Vec3 alpha = rotation_rate_body(a, da.col(k));
      for (int i = 0; i < 3; ++i) conn.comp[k].comp[i][p] = alpha[i];
    }
  }
  return conn;
}

FlatConnectionResidual flat_connection_residual(const ConnectionOneForm& conn) {
  const Grid& g = conn.grid;
  if (g.dim() != 3) throw ConfigError("flat_connection_residual: grid must be 3D");
  for (int k = 0; k < 3; ++k) {
    require_same_grid(g, conn.comp[k].grid, "flat_connection_residual");
    if (conn.comp[k].ncomp() != 3)
      throw ConfigError("flat_connection_residual: components must have 3 entries");
  }

  std::array<SpectralVectorField, 3> spec;
  for (int k = 0; k < 3; ++k) spec[k] = transform_forward(conn.comp[k]);

  auto derivative = [&](int k, int l) {
    SpectralVectorField d(g, 3);
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                     const std::array<double, 3>& kv) {
      const cplx mult = has_nyquist(g, n) ? cplx(0.0, 0.0) : cplx(0.0, kv[k]);
      for (int c = 0; c < 3; ++c) d.comp[c][flat] = mult * spec[l].comp[c][flat];
    });
    return transform_inverse(d);
  };

  static const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  FlatConnectionResidual out;
  const std::int64_t m = g.points();
  for (int p = 0; p < 3; ++p) {
    const int k = pairs[p][0], l = pairs[p][1];
    const VectorField dk_al = derivative(k, l);
    const VectorField dl_ak = derivative(l, k);
    out.pair_residual[p] = VectorField(g, 3);
    for (std::int64_t q = 0; q < m; ++q) {
      const Vec3 ak(conn.comp[k].comp[0][q], conn.comp[k].comp[1][q],
                    conn.comp[k].comp[2][q]);
      const Vec3 al(conn.comp[l].comp[0][q], conn.comp[l].comp[1][q],
                    conn.comp[l].comp[2][q]);
      const Vec3 cross = ak.cross(al);
      for (int i = 0; i < 3; ++i) {
        const double r = dk_al.comp[i][q] - dl_ak.comp[i][q] + cross[i];
        out.pair_residual[p].comp[i][q] = r;
        out.max_abs = std::max(out.max_abs, std::abs(r));
      }
    }
  }
  return out;
}

RepresentationResidual representation_residual(const VectorField& b,
                                               const ScalarField& phi,
                                               const ScalarField& psi,
                                               const VectorField& v,
                                               const VectorField& f, double nu) {
  const Grid& g = f.grid;
  if (g.dim() != 3) throw ConfigError("representation_residual: grid must be 3D");
  require_same_grid(g, b.grid, "representation_residual");
  require_same_grid(g, phi.grid, "representation_residual");
  require_same_grid(g, psi.grid, "representation_residual");
  require_same_grid(g, v.grid, "representation_residual");
  if (b.ncomp() != 3 || v.ncomp() != 3 || f.ncomp() != 3)
    throw ConfigError("representation_residual: vector fields must have 3 components");
  if (!(nu > 0.0)) throw ConfigError("representation_residual: nu must be positive");

  const std::int64_t m = g.points();
  for (std::int64_t q = 0; q < m; ++q) {
    const double norm2 = b.comp[0][q] * b.comp[0][q] + b.comp[1][q] * b.comp[1][q] +
                         b.comp[2][q] * b.comp[2][q];
    if (std::abs(norm2 - 1.0) > 2e-10)
      throw ConfigError("representation_residual: b must be unit length pointwise");
  }

  const VectorField w = transform_inverse(curl3(transform_forward(f)));

  const SpectralVectorField b_spec = transform_forward(b);
  const SpectralScalarField phi_spec = transform_forward(phi);
  const SpectralScalarField psi_spec = transform_forward(psi);

  std::array<VectorField, 3> db;   // db[k] = d b / d x_k
  std::array<ScalarField, 3> dphi;
  std::array<ScalarField, 3> dpsi;
  for (int k = 0; k < 3; ++k) {
    SpectralVectorField bd(g, 3);
    SpectralScalarField pd(g), sd(g);
    for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                     const std::array<double, 3>& kv) {
      const cplx mult = has_nyquist(g, n) ? cplx(0.0, 0.0) : cplx(0.0, kv[k]);
      for (int c = 0; c < 3; ++c) bd.comp[c][flat] = mult * b_spec.comp[c][flat];
      pd.coef[flat] = mult * phi_spec.coef[flat];
      sd.coef[flat] = mult * psi_spec.coef[flat];
    });
    db[k] = transform_inverse(bd);
    dphi[k] = transform_inverse(pd);
    dpsi[k] = transform_inverse(sd);
  }

  RepresentationResidual out;
  out.residual = VectorField(g, 3);
  for (std::int64_t q = 0; q < m; ++q) {
    const Vec3 wq(w.comp[0][q], w.comp[1][q], w.comp[2][q]);
    const Vec3 bq(b.comp[0][q], b.comp[1][q], b.comp[2][q]);
    const Vec3 vq(v.comp[0][q], v.comp[1][q], v.comp[2][q]);
    const double cp = std::cos(phi[q]);
    const double sp = std::sin(phi[q]);
    const Vec3 vxw = vq.cross(wq);
    for (int k = 0; k < 3; ++k) {
      const Vec3 dbk(db[k].comp[0][q], db[k].comp[1][q], db[k].comp[2][q]);
      const double r = (cp - 1.0) * wq.dot(bq.cross(dbk)) + sp * wq.dot(dbk) +
                       wq.dot(bq) * dphi[k][q] + dpsi[k][q] - vxw[k] / nu;
      out.residual.comp[k][q] = r;
      out.max_abs = std::max(out.max_abs, std::abs(r));
    }
  }
  return out;
}

}  // namespace vecadvect

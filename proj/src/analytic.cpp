#include "vecadvect/analytic.hpp"

#include <cmath>
#include <cstring>

#include "vecadvect/errors.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/rng.hpp"

namespace vecadvect {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

bool AnalyticVectorField::box_matches(const Grid& g) const {
  if (g.dim() != dim()) return false;
  const auto b = box();
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(b[a] - g.box(a)) > 1e-12 * b[a]) return false;
  return true;
}

VectorField AnalyticVectorField::sample(const Grid& g, double t) const {
  if (!box_matches(g))
    throw ConfigError("analytic field: grid box does not match the period");
  VectorField out(g, ncomp());
  const std::int64_t n = g.points();
  double v[3];
  for (std::int64_t i = 0; i < n; ++i) {
    const auto x = g.node(i);
    eval(t, x.data(), v);
    for (int c = 0; c < ncomp(); ++c) out.comp[c][i] = v[c];
  }
  return out;
}

namespace {

struct TaylorGreen2d final : AnalyticVectorField {
  double nu;
  explicit TaylorGreen2d(double n) : nu(n) {}
  int dim() const override { return 2; }
  std::array<double, 3> box() const override { return {kTwoPi, kTwoPi, 1.0}; }
  void eval(double t, const double* x, double* v, double* jac) const override {
    const double e = std::exp(-2.0 * nu * t);
    const double cx = std::cos(x[0]), sx = std::sin(x[0]);
    const double cy = std::cos(x[1]), sy = std::sin(x[1]);
    v[0] = -e * cx * sy;
    v[1] = e * sx * cy;
    if (jac) {
      jac[0] = e * sx * sy;
      jac[1] = -e * cx * cy;
      jac[2] = e * cx * cy;
      jac[3] = -e * sx * sy;
    }
  }
};

struct AbcFlow final : AnalyticVectorField {
  double A, B, C;
  AbcFlow(double a, double b, double c) : A(a), B(b), C(c) {}
  int dim() const override { return 3; }
  std::array<double, 3> box() const override {
    return {kTwoPi, kTwoPi, kTwoPi};
  }
  void eval(double, const double* x, double* v, double* jac) const override {
    const double sx = std::sin(x[0]), cx = std::cos(x[0]);
    const double sy = std::sin(x[1]), cy = std::cos(x[1]);
    const double sz = std::sin(x[2]), cz = std::cos(x[2]);
    v[0] = A * sz + C * cy;
    v[1] = B * sx + A * cz;
    v[2] = C * sy + B * cx;
    if (jac) {
      jac[0] = 0.0;
      jac[1] = -C * sy;
      jac[2] = A * cz;
      jac[3] = B * cx;
      jac[4] = 0.0;
      jac[5] = -A * sz;
      jac[6] = -B * sx;
      jac[7] = C * cy;
      jac[8] = 0.0;
    }
  }
};

struct TaylorGreenEmbedded final : AnalyticVectorField {
  double nu;
  explicit TaylorGreenEmbedded(double n) : nu(n) {}
  int dim() const override { return 3; }
  std::array<double, 3> box() const override {
    return {kTwoPi, kTwoPi, kTwoPi};
  }
  void eval(double t, const double* x, double* v, double* jac) const override {
    const double e = std::exp(-2.0 * nu * t);
    const double cx = std::cos(x[0]), sx = std::sin(x[0]);
    const double cy = std::cos(x[1]), sy = std::sin(x[1]);
    v[0] = -e * cx * sy;
    v[1] = e * sx * cy;
    v[2] = 0.0;
    if (jac) {
      std::memset(jac, 0, 9 * sizeof(double));
      jac[0] = e * sx * sy;
      jac[1] = -e * cx * cy;
      jac[3] = e * cx * cy;
      jac[4] = -e * sx * sy;
    }
  }
};

struct SingleMode final : AnalyticVectorField {
  int d;
  std::array<double, 3> box_;
  std::array<double, 3> k{0, 0, 0};
  std::array<double, 3> p{0, 0, 0}, q{0, 0, 0};
  SingleMode(int dim_in, const std::array<int, 3>& n,
             const std::array<double, 3>& re, const std::array<double, 3>& im,
             const std::array<double, 3>& box_in)
      : d(dim_in), box_(box_in) {
    bool all_zero = true;
    for (int a = 0; a < d; ++a) {
      if (!(box_[a] > 0.0)) throw ConfigError("single_mode: bad box");
      k[a] = kTwoPi * n[a] / box_[a];
      if (n[a] != 0) all_zero = false;
    }
    if (all_zero) throw ConfigError("single_mode: mode must be nonzero");
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) k2 += k[a] * k[a];
    double pk = 0.0, qk = 0.0;
    for (int a = 0; a < d; ++a) {
      pk += re[a] * k[a];
      qk += im[a] * k[a];
    }
    for (int a = 0; a < d; ++a) {
      p[a] = re[a] - k[a] * pk / k2;
      q[a] = im[a] - k[a] * qk / k2;
    }
  }
  int dim() const override { return d; }
  std::array<double, 3> box() const override { return box_; }
  void eval(double, const double* x, double* v, double* jac) const override {
    double theta = 0.0;
    for (int a = 0; a < d; ++a) theta += k[a] * x[a];
    const double c = std::cos(theta), s = std::sin(theta);
    for (int i = 0; i < d; ++i) {
      v[i] = 2.0 * (p[i] * c - q[i] * s);
      if (jac) {
        const double dv = -2.0 * (p[i] * s + q[i] * c);
        for (int a = 0; a < d; ++a) jac[i * d + a] = dv * k[a];
      }
    }
  }
};

struct ShearFlow final : AnalyticVectorField {
  int d;
  double amp;
  std::array<double, 3> box_;
  ShearFlow(int dim_in, double a, const std::array<double, 3>& b)
      : d(dim_in), amp(a), box_(b) {}
  int dim() const override { return d; }
  std::array<double, 3> box() const override { return box_; }
  void eval(double, const double* x, double* v, double* jac) const override {
    const double w = kTwoPi / box_[1];
    for (int i = 0; i < d; ++i) v[i] = 0.0;
    v[0] = amp * std::sin(w * x[1]);
    if (jac) {
      std::memset(jac, 0, size_t(d) * d * sizeof(double));
      jac[0 * d + 1] = amp * w * std::cos(w * x[1]);
    }
  }
};

struct ZeroField final : AnalyticVectorField {
  int d;
  std::array<double, 3> box_;
  ZeroField(int dim_in, const std::array<double, 3>& b) : d(dim_in), box_(b) {}
  int dim() const override { return d; }
  std::array<double, 3> box() const override { return box_; }
  void eval(double, const double*, double* v, double* jac) const override {
    for (int i = 0; i < d; ++i) v[i] = 0.0;
    if (jac) std::memset(jac, 0, size_t(d) * d * sizeof(double));
  }
};

struct ScaledVelocity final : AnalyticVectorField {
  AnalyticPtr inner;
  double lam;
  ScaledVelocity(AnalyticPtr in, double l) : inner(std::move(in)), lam(l) {}
  int dim() const override { return inner->dim(); }
  std::array<double, 3> box() const override {
    auto b = inner->box();
    for (int a = 0; a < dim(); ++a) b[a] /= lam;
    return b;
  }
  void eval(double t, const double* x, double* v, double* jac) const override {
    double y[3];
    for (int a = 0; a < dim(); ++a) y[a] = lam * x[a];
    inner->eval(lam * lam * t, y, v, jac);
    const int d = dim();
    for (int i = 0; i < d; ++i) v[i] *= lam;
    if (jac)
      for (int i = 0; i < d * d; ++i) jac[i] *= lam * lam;
  }
};

}  // namespace

AnalyticPtr taylor_green_2d(double nu) {
  return std::make_shared<TaylorGreen2d>(nu);
}
AnalyticPtr abc_flow(double a, double b, double c) {
  return std::make_shared<AbcFlow>(a, b, c);
}
AnalyticPtr taylor_green_embedded(double nu) {
  return std::make_shared<TaylorGreenEmbedded>(nu);
}
AnalyticPtr single_mode(int dim, const std::array<int, 3>& n,
                        const std::array<double, 3>& re,
                        const std::array<double, 3>& im,
                        const std::array<double, 3>& box) {
  return std::make_shared<SingleMode>(dim, n, re, im, box);
}
AnalyticPtr shear_flow(int dim, double amplitude,
                       const std::array<double, 3>& box) {
  return std::make_shared<ShearFlow>(dim, amplitude, box);
}
AnalyticPtr zero_field(int dim, const std::array<double, 3>& box) {
  return std::make_shared<ZeroField>(dim, box);
}
AnalyticPtr scaled_velocity(AnalyticPtr inner, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("scaled_velocity: lambda must be > 0");
  return std::make_shared<ScaledVelocity>(std::move(inner), lambda);
}

namespace {

// Canonical half-space representative: first nonzero signed mode is positive.
bool representative(const Grid& g, const std::array<int, 3>& n) {
  for (int a = 0; a < g.dim(); ++a) {
    if (n[a] != 0) return n[a] > 0;
  }
  return false;  // zero mode excluded
}

}  // namespace

SpectralVectorField random_solenoidal(const Grid& g, std::uint64_t seed,
                                      int max_mode, double norm,
                                      bool embed2d_in_3d) {
  if (embed2d_in_3d && g.dim() != 3)
    throw ConfigError("random_solenoidal: embedding needs a 3d grid");
  for (int a = 0; a < g.dim(); ++a)
    if (max_mode > g.dealias_cutoff(a))
      throw ConfigError("random_solenoidal: max_mode exceeds the dealias band");
  const int d = g.dim();
  const int draw_comps = embed2d_in_3d ? 2 : d;
  SpectralVectorField f(g, d);
  std::uint32_t counter = 0;
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                   const std::array<double, 3>& k) {
    for (int a = 0; a < d; ++a)
      if (std::abs(n[a]) > max_mode) return;
    if (embed2d_in_3d && n[2] != 0) return;
    if (!representative(g, n)) return;
    NormalStream stream(seed, kFieldGenNode, counter++);
    double z[6];
    stream.normals(0, 0, z, 2 * draw_comps);
    cplx c[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < draw_comps; ++a) c[a] = cplx(z[2 * a], z[2 * a + 1]);
    // project orthogonal to k
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) k2 += k[a] * k[a];
    cplx kdotc(0.0, 0.0);
    for (int a = 0; a < d; ++a) kdotc += k[a] * c[a];
    kdotc /= k2;
    for (int a = 0; a < d; ++a) c[a] -= k[a] * kdotc;
    const auto idx = g.unflatten(flat);
    const std::int64_t conj_flat =
        g.flat_index((g.size(0) - idx[0]) % g.size(0),
                     d > 1 ? (g.size(1) - idx[1]) % g.size(1) : 0,
                     d > 2 ? (g.size(2) - idx[2]) % g.size(2) : 0);
    for (int a = 0; a < d; ++a) {
      f.comp[a][flat] = c[a];
      f.comp[a][conj_flat] = std::conj(c[a]);
    }
  });
  const double have = norm_H(f);
  if (have == 0.0) throw ConfigError("random_solenoidal: empty band");
  const double s = norm / have;
  for (int a = 0; a < d; ++a)
    for (cplx& z : f.comp[a]) z *= s;
  return f;
}

SpectralScalarField random_scalar(const Grid& g, std::uint64_t seed,
                                  int max_mode, double norm) {
  for (int a = 0; a < g.dim(); ++a)
    if (max_mode > g.dealias_cutoff(a))
      throw ConfigError("random_scalar: max_mode exceeds the dealias band");
  SpectralScalarField f(g);
  std::uint32_t counter = 0;
  const int d = g.dim();
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                   const std::array<double, 3>&) {
    for (int a = 0; a < d; ++a)
      if (std::abs(n[a]) > max_mode) return;
    if (!representative(g, n)) return;
    NormalStream stream(seed, kFieldGenNode, counter++);
    double z[2];
    stream.normals(0, 0, z, 2);
    const cplx c(z[0], z[1]);
    const auto idx = g.unflatten(flat);
    f.coef[flat] = c;
    f.coef[g.flat_index((g.size(0) - idx[0]) % g.size(0),
                        d > 1 ? (g.size(1) - idx[1]) % g.size(1) : 0,
                        d > 2 ? (g.size(2) - idx[2]) % g.size(2) : 0)] =
        std::conj(c);
  });
  const double have = norm_H(f);
  if (have == 0.0) throw ConfigError("random_scalar: empty band");
  const double s = norm / have;
  for (cplx& z : f.coef) z *= s;
  return f;
}

}  // namespace vecadvect

#include "vecadvect/ops.hpp"

#include <algorithm>
#include <cmath>

#include "vecadvect/errors.hpp"

namespace vecadvect {

bool has_nyquist(const Grid& g, const std::array<int, 3>& n) {
  for (int a = 0; a < g.dim(); ++a)
    if (n[a] == g.size(a) / 2) return true;
  return false;
}

bool in_dealias_band(const Grid& g, const std::array<int, 3>& n) {
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(n[a]) > g.dealias_cutoff(a)) return false;
  return true;
}

void apply_dealias_mask(SpectralScalarField& f) {
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>&) {
    if (!in_dealias_band(f.grid, n)) f.coef[flat] = 0.0;
  });
}

void apply_dealias_mask(SpectralVectorField& f) {
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>&) {
    if (!in_dealias_band(f.grid, n))
      for (int c = 0; c < f.ncomp(); ++c) f.comp[c][flat] = 0.0;
  });
}

SpectralVectorField helmholtz_project(const SpectralVectorField& f) {
  const int d = f.grid.dim();
  if (f.ncomp() != d)
    throw ConfigError("helmholtz_project: ncomp must equal grid dim");
  SpectralVectorField out(f.grid, d);
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) k2 += k[a] * k[a];
    if (k2 == 0.0) {
      for (int c = 0; c < d; ++c) out.comp[c][flat] = f.comp[c][flat];
      return;
    }
    cplx kdotf(0.0, 0.0);
    for (int a = 0; a < d; ++a) kdotf += k[a] * f.comp[a][flat];
    kdotf /= k2;
    for (int c = 0; c < d; ++c)
      out.comp[c][flat] = f.comp[c][flat] - k[c] * kdotf;
  });
  return out;
}

VectorField helmholtz_project(const VectorField& f) {
  return transform_inverse(helmholtz_project(transform_forward(f)));
}

double relative_divergence(const SpectralVectorField& f) {
  const int d = f.grid.dim();
  double num = 0.0, den = 0.0;
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    cplx kdotf(0.0, 0.0);
    double k2 = 0.0, f2 = 0.0;
    for (int a = 0; a < d; ++a) {
      kdotf += k[a] * f.comp[a][flat];
      k2 += k[a] * k[a];
      f2 += std::norm(f.comp[a][flat]);
    }
    num = std::max(num, std::abs(kdotf));
    den = std::max(den, std::sqrt(k2 * f2));
  });
  return den > 0.0 ? num / den : 0.0;
}

double relative_divergence(const VectorField& f) {
  return relative_divergence(transform_forward(f));
}

SpectralVectorField curl3(const SpectralVectorField& f) {
  if (f.grid.dim() != 3 || f.ncomp() != 3)
    throw ConfigError("curl3: needs a 3-component field on a 3d grid");
  SpectralVectorField out(f.grid, 3);
  const cplx I(0.0, 1.0);
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    out.comp[0][flat] = I * (k[1] * f.comp[2][flat] - k[2] * f.comp[1][flat]);
    out.comp[1][flat] = I * (k[2] * f.comp[0][flat] - k[0] * f.comp[2][flat]);
    out.comp[2][flat] = I * (k[0] * f.comp[1][flat] - k[1] * f.comp[0][flat]);
  });
  return out;
}

SpectralScalarField rot2(const SpectralVectorField& f) {
  if (f.grid.dim() != 2 || f.ncomp() != 2)
    throw ConfigError("rot2: needs a 2-component field on a 2d grid");
  SpectralScalarField out(f.grid);
  const cplx I(0.0, 1.0);
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    out.coef[flat] = I * (k[0] * f.comp[1][flat] - k[1] * f.comp[0][flat]);
  });
  return out;
}

SpectralVectorField perp_grad(const SpectralScalarField& s) {
  if (s.grid.dim() != 2) throw ConfigError("perp_grad: needs a 2d grid");
  SpectralVectorField out(s.grid, 2);
  const cplx I(0.0, 1.0);
  for_modes(s.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(s.grid, n)) return;
    out.comp[0][flat] = -I * k[1] * s.coef[flat];
    out.comp[1][flat] = I * k[0] * s.coef[flat];
  });
  return out;
}

SpectralVectorField grad(const SpectralScalarField& s) {
  SpectralVectorField out(s.grid, s.grid.dim());
  const cplx I(0.0, 1.0);
  for_modes(s.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(s.grid, n)) return;
    for (int a = 0; a < s.grid.dim(); ++a)
      out.comp[a][flat] = I * k[a] * s.coef[flat];
  });
  return out;
}

namespace {

double max_coef_magnitude(const SpectralVectorField& f) {
  double m = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (const cplx& z : f.comp[c]) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace

SpectralVectorField curl_inverse(const SpectralVectorField& f) {
  if (f.grid.dim() != 3 || f.ncomp() != 3)
    throw ConfigError("curl_inverse: needs a 3-component field on a 3d grid");
  const double scale = max_coef_magnitude(f);
  double mean = 0.0;
  for (int c = 0; c < 3; ++c) mean += std::norm(f.comp[c][0]);
  mean = std::sqrt(mean);
  if (mean > 1e-12 * std::max(scale, 1e-300))
    throw NumericalGuard("curl_inverse: input has nonzero mean");
  if (relative_divergence(f) > 1e-8)
    throw NumericalGuard("curl_inverse: input is not divergence free");
  SpectralVectorField out(f.grid, 3);
  const cplx I(0.0, 1.0);
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0.0) return;
    out.comp[0][flat] =
        I * (k[1] * f.comp[2][flat] - k[2] * f.comp[1][flat]) / k2;
    out.comp[1][flat] =
        I * (k[2] * f.comp[0][flat] - k[0] * f.comp[2][flat]) / k2;
    out.comp[2][flat] =
        I * (k[0] * f.comp[1][flat] - k[1] * f.comp[0][flat]) / k2;
  });
  return out;
}

SpectralScalarField inverse_laplacian(const SpectralScalarField& f) {
  double scale = 0.0;
  for (const cplx& z : f.coef) scale = std::max(scale, std::abs(z));
  if (std::abs(f.coef[0]) > 1e-12 * std::max(scale, 1e-300))
    throw NumericalGuard("inverse_laplacian: input has nonzero mean");
  SpectralScalarField out(f.grid);
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    double k2 = 0.0;
    for (int a = 0; a < f.grid.dim(); ++a) k2 += k[a] * k[a];
    if (k2 == 0.0) return;
    out.coef[flat] = -f.coef[flat] / k2;
  });
  return out;
}

double inner_product_H(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid, g.grid, "inner_product_H");
  double s = 0.0;
  const std::int64_t n = f.grid.points();
  for (std::int64_t i = 0; i < n; ++i) s += f.data[i] * g.data[i];
  return s * f.grid.cell_volume();
}

double inner_product_H(const VectorField& f, const VectorField& g) {
  require_same_grid(f.grid, g.grid, "inner_product_H");
  if (f.ncomp() != g.ncomp())
    throw ConfigError("inner_product_H: component count mismatch");
  double s = 0.0;
  const std::int64_t n = f.grid.points();
  for (int c = 0; c < f.ncomp(); ++c)
    for (std::int64_t i = 0; i < n; ++i) s += f.comp[c][i] * g.comp[c][i];
  return s * f.grid.cell_volume();
}

double inner_product_H(const SpectralVectorField& f,
                       const SpectralVectorField& g) {
  require_same_grid(f.grid, g.grid, "inner_product_H");
  if (f.ncomp() != g.ncomp())
    throw ConfigError("inner_product_H: component count mismatch");
  double s = 0.0;
  const std::int64_t n = f.grid.points();
  for (int c = 0; c < f.ncomp(); ++c)
    for (std::int64_t i = 0; i < n; ++i)
      s += f.comp[c][i].real() * g.comp[c][i].real() +
           f.comp[c][i].imag() * g.comp[c][i].imag();
  return s * f.grid.volume();
}

double inner_product_H(const SpectralScalarField& f,
                       const SpectralScalarField& g) {
  require_same_grid(f.grid, g.grid, "inner_product_H");
  double s = 0.0;
  const std::int64_t n = f.grid.points();
  for (std::int64_t i = 0; i < n; ++i)
    s += f.coef[i].real() * g.coef[i].real() +
         f.coef[i].imag() * g.coef[i].imag();
  return s * f.grid.volume();
}

double norm_H(const VectorField& f) { return std::sqrt(inner_product_H(f, f)); }
double norm_H(const SpectralVectorField& f) {
  return std::sqrt(inner_product_H(f, f));
}
double norm_H(const SpectralScalarField& f) {
  return std::sqrt(inner_product_H(f, f));
}

namespace {

void check_order(int order) {
  if (order < -1 || order > 2)
    throw ConfigError("norm order must be in {-1,0,1,2}");
}

}  // namespace

double sobolev_norm(const SpectralVectorField& f, int order) {
  check_order(order);
  double s = 0.0;
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>&,
                        const std::array<double, 3>& k) {
    double k2 = 0.0;
    for (int a = 0; a < f.grid.dim(); ++a) k2 += k[a] * k[a];
    double w = std::pow(1.0 + k2, order);
    for (int c = 0; c < f.ncomp(); ++c) s += w * std::norm(f.comp[c][flat]);
  });
  return std::sqrt(s * f.grid.volume());
}

double homogeneous_norm(const SpectralVectorField& f, int order) {
  check_order(order);
  if (order == -1) {
    if (mean_magnitude(f) > 1e-12 * std::max(max_coef_magnitude(f), 1e-300))
      throw NumericalGuard("homogeneous_norm(-1): input has nonzero mean");
  }
  double s = 0.0;
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>&,
                        const std::array<double, 3>& k) {
    double k2 = 0.0;
    for (int a = 0; a < f.grid.dim(); ++a) k2 += k[a] * k[a];
    if (k2 == 0.0 && order != 0) return;
    double w = order == 0 ? 1.0 : std::pow(k2, order);
    for (int c = 0; c < f.ncomp(); ++c) s += w * std::norm(f.comp[c][flat]);
  });
  return std::sqrt(s * f.grid.volume());
}

double mean_magnitude(const SpectralVectorField& f) {
  double s = 0.0;
  for (int c = 0; c < f.ncomp(); ++c) s += std::norm(f.comp[c][0]);
  return std::sqrt(s);
}

void SparseModes::evaluate(const double* x, double* value, double* jac) const {
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    double y = x[a] - box[a] * std::floor(x[a] * inv_box[a]);
    if (y >= box[a]) y -= box[a];
    t[a] = y;
  }
  for (int c = 0; c < ncomp; ++c) value[c] = 0.0;
  if (jac)
    for (int i = 0; i < ncomp * dim; ++i) jac[i] = 0.0;
  for (const Mode& m : modes) {
    double theta = 0.0;
    for (int a = 0; a < dim; ++a) theta += m.k[a] * t[a];
    const double cth = std::cos(theta), sth = std::sin(theta);
    for (int c = 0; c < ncomp; ++c) {
      value[c] += m.re[c] * cth - m.im[c] * sth;
      if (jac) {
        const double dv = -m.re[c] * sth - m.im[c] * cth;
        for (int a = 0; a < dim; ++a) jac[c * dim + a] += dv * m.k[a];
      }
    }
  }
}

namespace {

SparseModes sparsify_impl(const Grid& g, int ncomp,
                          const std::function<cplx(int, std::int64_t)>& coef_at,
                          double threshold) {
  SparseModes out;
  out.dim = g.dim();
  out.ncomp = ncomp;
  for (int a = 0; a < g.dim(); ++a) {
    out.box[a] = g.box(a);
    out.inv_box[a] = 1.0 / g.box(a);
  }
  double maxmag = 0.0;
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>&,
                   const std::array<double, 3>&) {
    for (int c = 0; c < ncomp; ++c)
      maxmag = std::max(maxmag, std::abs(coef_at(c, flat)));
  });
  const double cut = std::max(threshold * maxmag, 1e-13 * maxmag);
  for_modes(g, [&](std::int64_t flat, const std::array<int, 3>& n,
                   const std::array<double, 3>& k) {
    double mag = 0.0;
    for (int c = 0; c < ncomp; ++c)
      mag = std::max(mag, std::abs(coef_at(c, flat)));
    if (mag <= cut) return;
    if (has_nyquist(g, n))
      throw NumericalGuard(
          "sparsify: significant Nyquist content has no smooth interpolant");
    bool zero = true, positive = false;
    for (int a = 0; a < g.dim(); ++a) {
      if (n[a] != 0) {
        positive = n[a] > 0;
        zero = false;
        break;
      }
    }
    if (!zero && !positive) return;  // the conjugate partner carries it
    SparseModes::Mode m;
    m.k = {k[0], k[1], k[2]};
    const double w = zero ? 1.0 : 2.0;
    for (int c = 0; c < 3; ++c) {
      if (c < ncomp) {
        cplx z = coef_at(c, flat);
        m.re[c] = w * z.real();
        m.im[c] = w * z.imag();
      } else {
        m.re[c] = m.im[c] = 0.0;
      }
    }
    out.modes.push_back(m);
  });
  return out;
}

}  // namespace

SparseModes sparsify(const SpectralVectorField& f, double threshold) {
  return sparsify_impl(
      f.grid, f.ncomp(),
      [&](int c, std::int64_t flat) { return f.comp[c][flat]; }, threshold);
}

SparseModes sparsify(const SpectralScalarField& f, double threshold) {
  return sparsify_impl(
      f.grid, 1, [&](int, std::int64_t flat) { return f.coef[flat]; },
      threshold);
}

void evaluate_dense(const SpectralVectorField& f, const double* x,
                    double* value) {
  const int d = f.grid.dim();
  for (int c = 0; c < f.ncomp(); ++c) value[c] = 0.0;
  for_modes(f.grid, [&](std::int64_t flat, const std::array<int, 3>& n,
                        const std::array<double, 3>& k) {
    if (has_nyquist(f.grid, n)) return;
    double theta = 0.0;
    for (int a = 0; a < d; ++a) theta += k[a] * x[a];
    const cplx e(std::cos(theta), std::sin(theta));
    for (int c = 0; c < f.ncomp(); ++c)
      value[c] += (f.comp[c][flat] * e).real();
  });
}

}  // namespace vecadvect

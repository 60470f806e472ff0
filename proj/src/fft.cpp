#include "vecadvect/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace vecadvect {

namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_complex* buf = nullptr;
  std::int64_t n = 0;
};

// FFTW planning and buffer reuse are not thread safe; one lock serializes
// every transform. All heavy Monte Carlo paths avoid grid transforms.
std::mutex& fft_mutex() {
  static std::mutex m;
  return m;
}

PlanPair& plan_for(const Grid& g) {
  static std::map<std::tuple<int, int, int, int>, PlanPair> cache;
  auto key = std::make_tuple(g.dim(), g.size(0), g.dim() > 1 ? g.size(1) : 1,
                             g.dim() > 2 ? g.size(2) : 1);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  PlanPair p;
  p.n = g.points();
  p.buf = fftw_alloc_complex(static_cast<size_t>(p.n));
  if (g.dim() == 2) {
    p.fwd = fftw_plan_dft_2d(g.size(0), g.size(1), p.buf, p.buf, FFTW_FORWARD,
                             FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_2d(g.size(0), g.size(1), p.buf, p.buf, FFTW_BACKWARD,
                             FFTW_ESTIMATE);
  } else {
    p.fwd = fftw_plan_dft_3d(g.size(0), g.size(1), g.size(2), p.buf, p.buf,
                             FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_3d(g.size(0), g.size(1), g.size(2), p.buf, p.buf,
                             FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  return cache.emplace(key, p).first->second;
}

}  // namespace

SpectralScalarField transform_forward(const ScalarField& f) {
  SpectralScalarField out(f.grid);
  std::lock_guard<std::mutex> lock(fft_mutex());
  PlanPair& p = plan_for(f.grid);
  for (std::int64_t i = 0; i < p.n; ++i) {
    p.buf[i][0] = f.data[i];
    p.buf[i][1] = 0.0;
  }
  fftw_execute(p.fwd);
  const double scale = 1.0 / static_cast<double>(p.n);
  for (std::int64_t i = 0; i < p.n; ++i)
    out.coef[i] = cplx(p.buf[i][0] * scale, p.buf[i][1] * scale);
  return out;
}

ScalarField transform_inverse(const SpectralScalarField& c) {
  ScalarField out(c.grid);
  std::lock_guard<std::mutex> lock(fft_mutex());
  PlanPair& p = plan_for(c.grid);
  for (std::int64_t i = 0; i < p.n; ++i) {
    p.buf[i][0] = c.coef[i].real();
    p.buf[i][1] = c.coef[i].imag();
  }
  fftw_execute(p.bwd);
  for (std::int64_t i = 0; i < p.n; ++i) out.data[i] = p.buf[i][0];
  return out;
}

SpectralVectorField transform_forward(const VectorField& f) {
  SpectralVectorField out(f.grid, f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c) {
    ScalarField s;
    s.grid = f.grid;
    s.data = f.comp[c];
    out.comp[c] = transform_forward(s).coef;
  }
  return out;
}

VectorField transform_inverse(const SpectralVectorField& c) {
  VectorField out(c.grid, c.ncomp());
  for (int comp = 0; comp < c.ncomp(); ++comp) {
    SpectralScalarField s;
    s.grid = c.grid;
    s.coef = c.comp[comp];
    out.comp[comp] = transform_inverse(s).data;
  }
  return out;
}

namespace {

double hermitian_error_one(const Grid& g, const std::vector<cplx>& coef) {
  double worst = 0.0;
  const int n0 = g.size(0), n1 = g.dim() > 1 ? g.size(1) : 1,
            n2 = g.dim() > 2 ? g.size(2) : 1;
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i2 = 0; i2 < n2; ++i2) {
        const int j0 = (n0 - i0) % n0, j1 = (n1 - i1) % n1, j2 = (n2 - i2) % n2;
        const cplx a = coef[g.flat_index(i0, i1, i2)];
        const cplx b = coef[g.flat_index(j0, j1, j2)];
        worst = std::max(worst, std::abs(a - std::conj(b)));
      }
  return worst;
}

}  // namespace

double hermitian_symmetry_error(const SpectralScalarField& c) {
  return hermitian_error_one(c.grid, c.coef);
}

double hermitian_symmetry_error(const SpectralVectorField& c) {
  double worst = 0.0;
  for (int comp = 0; comp < c.ncomp(); ++comp)
    worst = std::max(worst, hermitian_error_one(c.grid, c.comp[comp]));
  return worst;
}

}  // namespace vecadvect

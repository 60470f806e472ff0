#pragma once

#include <complex>
#include <vector>

#include "vecadvect/errors.hpp"
#include "vecadvect/grid.hpp"

namespace vecadvect {

using cplx = std::complex<double>;

struct ScalarField {
  Grid grid;
  std::vector<double> data;

  ScalarField() = default;
  explicit ScalarField(const Grid& g)
      : grid(g), data(static_cast<size_t>(g.points()), 0.0) {}

  double& operator[](std::int64_t i) { return data[i]; }
  double operator[](std::int64_t i) const { return data[i]; }
};

struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> comp;  // comp[c][flat]

  VectorField() = default;
  VectorField(const Grid& g, int ncomp)
      : grid(g),
        comp(ncomp, std::vector<double>(static_cast<size_t>(g.points()), 0.0)) {}
  explicit VectorField(const Grid& g) : VectorField(g, g.dim()) {}

  int ncomp() const { return static_cast<int>(comp.size()); }
};

struct SpectralScalarField {
  Grid grid;
  std::vector<cplx> coef;

  SpectralScalarField() = default;
  explicit SpectralScalarField(const Grid& g)
      : grid(g), coef(static_cast<size_t>(g.points()), cplx(0.0, 0.0)) {}
};

struct SpectralVectorField {
  Grid grid;
  std::vector<std::vector<cplx>> comp;  // comp[c][flat]

  SpectralVectorField() = default;
  SpectralVectorField(const Grid& g, int ncomp)
      : grid(g),
        comp(ncomp,
             std::vector<cplx>(static_cast<size_t>(g.points()), cplx(0.0, 0.0))) {}
  explicit SpectralVectorField(const Grid& g) : SpectralVectorField(g, g.dim()) {}

  int ncomp() const { return static_cast<int>(comp.size()); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a != b) throw ConfigError(std::string(where) + ": grid mismatch");
}

}  // namespace vecadvect

#include "vecadvect/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vecadvect/errors.hpp"

namespace vecadvect {

Grid Grid::make(int dim, const std::array<int, 3>& sizes,
                const std::array<double, 3>& box) {
  if (dim != 2 && dim != 3) throw ConfigError("grid dim must be 2 or 3");
  Grid g;
  g.dim_ = dim;
  for (int a = 0; a < dim; ++a) {
    if (sizes[a] < 8 || sizes[a] % 2 != 0)
      throw ConfigError("grid size along axis " + std::to_string(a) +
                        " must be even and >= 8, got " +
                        std::to_string(sizes[a]));
    if (!(box[a] > 0.0))
      throw ConfigError("box length along axis " + std::to_string(a) +
                        " must be positive");
    g.n_[a] = sizes[a];
    g.box_[a] = box[a];
  }
  return g;
}

Grid Grid::make2d(int n0, int n1, double l0, double l1) {
  return make(2, {n0, n1, 1}, {l0, l1, 1.0});
}

Grid Grid::make3d(int n0, int n1, int n2, double l0, double l1, double l2) {
  return make(3, {n0, n1, n2}, {l0, l1, l2});
}

double Grid::max_wavenumber_axis() const {
  double m = 0.0;
  for (int a = 0; a < dim_; ++a) m = std::max(m, kPi * n_[a] / box_[a]);
  return m;
}

double Grid::max_wavenumber() const {
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double ka = kPi * n_[a] / box_[a];
    s += ka * ka;
  }
  return std::sqrt(s);
}

}  // namespace vecadvect

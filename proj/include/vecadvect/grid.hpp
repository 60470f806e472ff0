#pragma once

#include <array>
#include <cstdint>

namespace vecadvect {

// Uniform periodic grid on [0,L0) x ... x [0,L_{dim-1}), row-major storage
// with axis 0 slowest. Sizes must be even and >= 8; box lengths positive.
class Grid {
 public:
  Grid() = default;

  static Grid make2d(int n0, int n1, double l0, double l1);
  static Grid make3d(int n0, int n1, int n2, double l0, double l1, double l2);
  static Grid make(int dim, const std::array<int, 3>& sizes,
                   const std::array<double, 3>& box);

  int dim() const { return dim_; }
  int size(int axis) const { return n_[axis]; }
  double box(int axis) const { return box_[axis]; }
  const std::array<int, 3>& sizes() const { return n_; }
  const std::array<double, 3>& box_lengths() const { return box_; }

  std::int64_t points() const {
    std::int64_t p = 1;
    for (int a = 0; a < dim_; ++a) p *= n_[a];
    return p;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= box_[a];
    return v;
  }
  double cell_volume() const { return volume() / static_cast<double>(points()); }
  double spacing(int axis) const { return box_[axis] / n_[axis]; }

  // Signed integer mode n in (-N/2, N/2] for storage index i in [0,N).
  int mode_index(int axis, int i) const {
    return i <= n_[axis] / 2 ? i : i - n_[axis];
  }
  double wavenumber(int axis, int i) const {
    return 2.0 * kPi * mode_index(axis, i) / box_[axis];
  }
  double wavenumber_of_mode(int axis, int n) const {
    return 2.0 * kPi * n / box_[axis];
  }
  // Largest resolvable |k_j| on any axis: max_j pi*N_j/L_j.
  double max_wavenumber_axis() const;
  // Euclidean norm of the (pi*N_j/L_j)_j corner, for CFL-type bounds.
  double max_wavenumber() const;
  // Cutoff for the strict dealias band: |n_j| <= floor((N_j-1)/3).
  int dealias_cutoff(int axis) const { return (n_[axis] - 1) / 3; }

  std::int64_t flat_index(int i0, int i1, int i2 = 0) const {
    return (static_cast<std::int64_t>(i0) * n_[1] + i1) * n_[2] + i2;
  }
  std::array<int, 3> unflatten(std::int64_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    idx[2] = static_cast<int>(flat % n_[2]);
    flat /= n_[2];
    idx[1] = static_cast<int>(flat % n_[1]);
    idx[0] = static_cast<int>(flat / n_[1]);
    return idx;
  }
  std::array<double, 3> node(std::int64_t flat) const {
    auto idx = unflatten(flat);
    return {idx[0] * spacing(0), dim_ > 1 ? idx[1] * spacing(1) : 0.0,
            dim_ > 2 ? idx[2] * spacing(2) : 0.0};
  }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && box_ == o.box_;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }

  static constexpr double kPi = 3.14159265358979323846;

 private:
  int dim_ = 0;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> box_{1.0, 1.0, 1.0};
};

}  // namespace vecadvect

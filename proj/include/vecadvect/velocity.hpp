#pragma once

#include <memory>
#include <vector>

#include "vecadvect/analytic.hpp"
#include "vecadvect/field.hpp"
#include "vecadvect/ops.hpp"

namespace vecadvect {

// Velocity v(t,x), either a closed form or grid snapshots with linear
// interpolation in time. Supports the reversal v -> -v(T - .) exactly:
// the wrapper evaluates sign * base(a + b t), and reversing twice with the
// same horizon restores (sign, a, b) bit for bit.
class TimeDependentVelocity {
 public:
  TimeDependentVelocity() = default;

  static TimeDependentVelocity analytic(AnalyticPtr f);
  // Closed form evaluated at the fixed time t0, then held constant.
  static TimeDependentVelocity frozen(AnalyticPtr f, double t0 = 0.0);
  // Snapshots at t0 + i*dt; each must be solenoidal to 1e-10 (relative).
  static TimeDependentVelocity sampled(std::vector<VectorField> snapshots,
                                       double t0, double dt);

  // v'(t) = -v(T - t).
  TimeDependentVelocity time_reversed(double horizon) const;

  int dim() const;
  bool constant_in_time() const;
  VectorField sample(const Grid& g, double t) const;
  void eval(double t, const double* x, double* v, double* jac = nullptr) const;
  double max_speed(const Grid& g, double t) const;

 private:
  double inner_time(double t) const { return freeze_ ? t0_ : a_ + b_ * t; }

  AnalyticPtr fld_;
  std::vector<VectorField> snaps_;
  std::vector<SparseModes> snap_modes_;
  double snap_t0_ = 0.0, snap_dt_ = 0.0;
  bool freeze_ = false;
  double t0_ = 0.0;
  double sign_ = 1.0;
  double a_ = 0.0;
  double b_ = 1.0;
};

}  // namespace vecadvect

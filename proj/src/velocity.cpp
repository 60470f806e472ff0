#include "vecadvect/velocity.hpp"

#include <cmath>

#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"

namespace vecadvect {

TimeDependentVelocity TimeDependentVelocity::analytic(AnalyticPtr f) {
  if (!f) throw ConfigError("velocity: null field");
  TimeDependentVelocity v;
  v.fld_ = std::move(f);
  return v;
}

TimeDependentVelocity TimeDependentVelocity::frozen(AnalyticPtr f, double t0) {
  TimeDependentVelocity v = analytic(std::move(f));
  v.freeze_ = true;
  v.t0_ = t0;
  return v;
}

TimeDependentVelocity TimeDependentVelocity::sampled(
    std::vector<VectorField> snapshots, double t0, double dt) {
  if (snapshots.empty()) throw ConfigError("velocity: no snapshots");
  if (snapshots.size() > 1 && !(dt > 0.0))
    throw ConfigError("velocity: snapshot spacing must be positive");
  TimeDependentVelocity v;
  for (size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i].grid != snapshots[0].grid)
      throw ConfigError("velocity: snapshot grids differ");
    if (snapshots[i].ncomp() != snapshots[i].grid.dim())
      throw ConfigError("velocity: snapshot component count mismatch");
    const auto hat = transform_forward(snapshots[i]);
    if (relative_divergence(hat) > 1e-10)
      throw NumericalGuard("velocity: snapshot is not divergence free");
    v.snap_modes_.push_back(sparsify(hat));
  }
  v.snaps_ = std::move(snapshots);
  v.snap_t0_ = t0;
  v.snap_dt_ = dt;
  return v;
}

TimeDependentVelocity TimeDependentVelocity::time_reversed(
    double horizon) const {
  TimeDependentVelocity v = *this;
  v.sign_ = -sign_;
  v.a_ = a_ + b_ * horizon;
  v.b_ = -b_;
  return v;
}

int TimeDependentVelocity::dim() const {
  if (fld_) return fld_->dim();
  return snaps_.empty() ? 0 : snaps_[0].grid.dim();
}

bool TimeDependentVelocity::constant_in_time() const {
  if (fld_) return freeze_;
  return snaps_.size() == 1;
}

namespace {

// Interpolation weights clamped to the sampled window; times more than a
// whisker outside it are rejected.
void locate(double t, double t0, double dt, size_t n, size_t* i0, size_t* i1,
            double* w1) {
  if (n == 1) {
    *i0 = *i1 = 0;
    *w1 = 0.0;
    return;
  }
  const double span = dt * double(n - 1);
  double s = (t - t0) / dt;
  const double slack = 1e-9 * std::max(1.0, span / dt);
  if (s < -slack || s > double(n - 1) + slack)
    throw ConfigError("velocity: time outside the sampled window");
  s = std::min(std::max(s, 0.0), double(n - 1));
  const size_t lo = std::min(size_t(s), n - 2);
  *i0 = lo;
  *i1 = lo + 1;
  *w1 = s - double(lo);
}

}  // namespace

VectorField TimeDependentVelocity::sample(const Grid& g, double t) const {
  const double tt = inner_time(t);
  VectorField out;
  if (fld_) {
    out = fld_->sample(g, tt);
  } else {
    if (g != snaps_[0].grid)
      throw ConfigError("velocity: sampling grid differs from snapshot grid");
    size_t i0, i1;
    double w1;
    locate(tt, snap_t0_, snap_dt_, snaps_.size(), &i0, &i1, &w1);
    out = snaps_[i0];
    if (w1 != 0.0)
      for (int c = 0; c < out.ncomp(); ++c)
        for (std::int64_t i = 0; i < g.points(); ++i)
          out.comp[c][i] =
              (1.0 - w1) * out.comp[c][i] + w1 * snaps_[i1].comp[c][i];
  }
  if (sign_ < 0.0)
    for (auto& c : out.comp)
      for (double& x : c) x = -x;
  return out;
}

void TimeDependentVelocity::eval(double t, const double* x, double* v,
                                 double* jac) const {
  const double tt = inner_time(t);
  const int d = dim();
  if (fld_) {
    fld_->eval(tt, x, v, jac);
  } else {
    size_t i0, i1;
    double w1;
    locate(tt, snap_t0_, snap_dt_, snaps_.size(), &i0, &i1, &w1);
    snap_modes_[i0].evaluate(x, v, jac);
    if (w1 != 0.0) {
      double v2[3], jac2[9];
      snap_modes_[i1].evaluate(x, v2, jac ? jac2 : nullptr);
      for (int c = 0; c < d; ++c) v[c] = (1.0 - w1) * v[c] + w1 * v2[c];
      if (jac)
        for (int i = 0; i < d * d; ++i)
          jac[i] = (1.0 - w1) * jac[i] + w1 * jac2[i];
    }
  }
  if (sign_ < 0.0) {
    for (int c = 0; c < d; ++c) v[c] = -v[c];
    if (jac)
      for (int i = 0; i < d * d; ++i) jac[i] = -jac[i];
  }
}

double TimeDependentVelocity::max_speed(const Grid& g, double t) const {
  const VectorField v = sample(g, t);
  double worst = 0.0;
  for (std::int64_t i = 0; i < g.points(); ++i) {
    double s = 0.0;
    for (int c = 0; c < v.ncomp(); ++c) s += v.comp[c][i] * v.comp[c][i];
    worst = std::max(worst, s);
  }
  return std::sqrt(worst);
}

}  // namespace vecadvect

#include "vecadvect/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "vecadvect/acceptance.hpp"
#include "vecadvect/analytic.hpp"
#include "vecadvect/duality.hpp"
#include "vecadvect/errors.hpp"
#include "vecadvect/fft.hpp"
#include "vecadvect/fk.hpp"
#include "vecadvect/flows.hpp"
#include "vecadvect/io.hpp"
#include "vecadvect/ops.hpp"
#include "vecadvect/pde.hpp"
#include "vecadvect/report.hpp"
#include "vecadvect/velocity.hpp"
#include "vecadvect/version.hpp"

namespace vecadvect {
namespace {

constexpr double kTau = 2.0 * Grid::kPi;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Strict schema check: every present key must be declared, every required
// key must be present.
void check_keys(const Json& j, const std::string& where,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional) {
  if (!j.is_object()) fail(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const bool known =
        std::find(required.begin(), required.end(), k) != required.end() ||
        std::find(optional.begin(), optional.end(), k) != optional.end();
    if (!known) fail("unknown key '" + k + "' in " + where);
  }
  for (const auto& r : required)
    if (!j.contains(r)) fail(where + ": missing required field '" + r + "'");
}

// Keys injected by the runner and the command-line overrides.
std::vector<std::string> common(std::vector<std::string> opts) {
  opts.insert(opts.end(), {"kind", "out", "seed", "threads"});
  return opts;
}

const Json& member(const Json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    fail(where + ": missing required field '" + std::string(key) + "'");
  return *it;
}

double get_num(const Json& j, const std::string& where, const char* key) {
  const Json& v = member(j, where, key);
  if (!v.is_number()) fail(where + "." + key + ": expected a number");
  return v.get<double>();
}

double get_num_or(const Json& j, const std::string& where, const char* key,
                  double dflt) {
  return j.contains(key) ? get_num(j, where, key) : dflt;
}

int get_int(const Json& j, const std::string& where, const char* key) {
  const Json& v = member(j, where, key);
  if (!v.is_number_integer()) fail(where + "." + key + ": expected an integer");
  return v.get<int>();
}

int get_int_or(const Json& j, const std::string& where, const char* key,
               int dflt) {
  return j.contains(key) ? get_int(j, where, key) : dflt;
}

std::uint64_t get_u64(const Json& j, const std::string& where,
                      const char* key) {
  const Json& v = member(j, where, key);
  if (!v.is_number_integer() ||
      (v.is_number_integer() && !v.is_number_unsigned() &&
       v.get<std::int64_t>() < 0))
    fail(where + "." + key + ": expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool_or(const Json& j, const std::string& where, const char* key,
                 bool dflt) {
  if (!j.contains(key)) return dflt;
  const Json& v = j.at(key);
  if (!v.is_boolean()) fail(where + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string get_str(const Json& j, const std::string& where, const char* key) {
  const Json& v = member(j, where, key);
  if (!v.is_string()) fail(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::string get_str_or(const Json& j, const std::string& where,
                       const char* key, const std::string& dflt) {
  return j.contains(key) ? get_str(j, where, key) : dflt;
}

Grid parse_grid(const Json& cfg, const std::string& where, int want_dim) {
  const Json& gj = member(cfg, where, "grid");
  const std::string w = where + ".grid";
  check_keys(gj, w, {"sizes"}, {"box"});
  const Json& sz = gj.at("sizes");
  if (!sz.is_array() || (sz.size() != 2 && sz.size() != 3))
    fail(w + ".sizes: expected an array of 2 or 3 integers");
  const int dim = static_cast<int>(sz.size());
  if (want_dim != 0 && dim != want_dim)
    fail(where + ": needs a " + std::to_string(want_dim) + "d grid");
  std::array<int, 3> n{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    if (!sz[a].is_number_integer())
      fail(w + ".sizes: expected an array of integers");
    n[a] = sz[a].get<int>();
  }
  std::array<double, 3> box{kTau, kTau, kTau};
  if (gj.contains("box")) {
    const Json& bj = gj.at("box");
    if (!bj.is_array() || int(bj.size()) != dim)
      fail(w + ".box: expected an array of " + std::to_string(dim) +
           " lengths");
    for (int a = 0; a < dim; ++a) {
      if (!bj[a].is_number() || bj[a].get<double>() <= 0.0)
        fail(w + ".box: lengths must be positive numbers");
      box[a] = bj[a].get<double>();
    }
  }
  return dim == 2 ? Grid::make2d(n[0], n[1], box[0], box[1])
                  : Grid::make3d(n[0], n[1], n[2], box[0], box[1], box[2]);
}

std::vector<std::string> plus(std::vector<std::string> a,
                              std::initializer_list<const char*> b) {
  for (const char* s : b) a.emplace_back(s);
  return a;
}

AnalyticPtr make_analytic(const Json& r, const std::string& where, int dim,
                          double nu, const std::array<double, 3>& box,
                          const std::vector<std::string>& extra) {
  const std::string name = get_str(r, where, "recipe");
  auto need_dim = [&](int d) {
    if (dim != d)
      fail(where + ": recipe '" + name + "' needs a " + std::to_string(d) +
           "d grid");
  };
  if (name == "taylor-green") {
    check_keys(r, where, {"recipe"}, extra);
    need_dim(2);
    return taylor_green_2d(nu);
  }
  if (name == "taylor-green-embedded") {
    check_keys(r, where, {"recipe"}, extra);
    need_dim(3);
    return taylor_green_embedded(nu);
  }
  if (name == "abc") {
    check_keys(r, where, {"recipe"}, plus(extra, {"a", "b", "c"}));
    need_dim(3);
    return abc_flow(get_num_or(r, where, "a", 1.0),
                    get_num_or(r, where, "b", 1.0),
                    get_num_or(r, where, "c", 1.0));
  }
  if (name == "shear") {
    check_keys(r, where, {"recipe"}, plus(extra, {"amplitude"}));
    return shear_flow(dim, get_num_or(r, where, "amplitude", 1.0), box);
  }
  if (name == "single-mode") {
    check_keys(r, where, {"recipe", "mode", "re"}, plus(extra, {"im"}));
    auto vec3 = [&](const char* key, bool integer) {
      std::array<double, 3> out{0.0, 0.0, 0.0};
      const Json& a = r.at(key);
      if (!a.is_array() || int(a.size()) != dim)
        fail(where + "." + key + ": expected an array of " +
             std::to_string(dim) + " numbers");
      for (int i = 0; i < dim; ++i) {
        if (integer ? !a[i].is_number_integer() : !a[i].is_number())
          fail(where + "." + key + ": expected " +
               (integer ? "integers" : "numbers"));
        out[i] = a[i].get<double>();
      }
      return out;
    };
    const auto mode = vec3("mode", true);
    const auto re = vec3("re", false);
    std::array<double, 3> im{0.0, 0.0, 0.0};
    if (r.contains("im")) im = vec3("im", false);
    return single_mode(dim,
                       {int(mode[0]), int(mode[1]), int(mode[2])}, re, im,
                       box);
  }
  if (name == "zero") {
    check_keys(r, where, {"recipe"}, extra);
    return zero_field(dim, box);
  }
  fail(where + ": unknown recipe '" + name + "'");
}

struct VelocityInput {
  bool present = false;  // false: no advection (zero velocity)
  TimeDependentVelocity vel;
};

VelocityInput parse_velocity(const Json& cfg, const std::string& where,
                             const Grid& g, double nu) {
  VelocityInput out;
  if (!cfg.contains("velocity")) return out;
  const Json& r = cfg.at("velocity");
  const std::string w = where + ".velocity";
  if (!r.is_object()) fail(w + ": expected an object");
  const std::string name = get_str(r, w, "recipe");
  AnalyticPtr f = make_analytic(r, w, g.dim(), nu, g.box_lengths(),
                                {"frozen_at", "time_dependent"});
  if (name == "zero") return out;
  const bool timedep = get_bool_or(r, w, "time_dependent", false);
  if (timedep && r.contains("frozen_at"))
    fail(w + ": frozen_at conflicts with time_dependent");
  out.vel = timedep ? TimeDependentVelocity::analytic(f)
                    : TimeDependentVelocity::frozen(
                          f, get_num_or(r, w, "frozen_at", 0.0));
  out.present = true;
  return out;
}

SpectralVectorField parse_vector_data(const Json& cfg, const std::string& where,
                                      const char* key, const Grid& g,
                                      double nu) {
  const Json& r = member(cfg, where, key);
  const std::string w = where + "." + key;
  if (!r.is_object()) fail(w + ": expected an object");
  const std::string name = get_str(r, w, "recipe");
  if (name == "random-solenoidal") {
    check_keys(r, w, {"recipe", "seed"}, {"max_mode", "norm", "embed"});
    const bool embed = get_bool_or(r, w, "embed", false);
    if (embed && g.dim() != 3) fail(w + ": embed needs a 3d grid");
    return random_solenoidal(g, get_u64(r, w, "seed"),
                             get_int_or(r, w, "max_mode", 2),
                             get_num_or(r, w, "norm", 1.0), embed);
  }
  AnalyticPtr f = make_analytic(r, w, g.dim(), nu, g.box_lengths(), {"time"});
  const double t = get_num_or(r, w, "time", 0.0);
  return helmholtz_project(transform_forward(f->sample(g, t)));
}

ScalarField parse_scalar_data(const Json& cfg, const std::string& where,
                              const char* key, const Grid& g) {
  const Json& r = member(cfg, where, key);
  const std::string w = where + "." + key;
  if (!r.is_object()) fail(w + ": expected an object");
  if (g.dim() != 2) fail(w + ": stream functions need a 2d grid");
  const std::string name = get_str(r, w, "recipe");
  if (name == "random-scalar") {
    check_keys(r, w, {"recipe", "seed"}, {"max_mode", "norm"});
    return transform_inverse(random_scalar(g, get_u64(r, w, "seed"),
                                           get_int_or(r, w, "max_mode", 2),
                                           get_num_or(r, w, "norm", 1.0)));
  }
  check_keys(r, w, {"recipe"}, {"amplitude"});
  const double amp = get_num_or(r, w, "amplitude", 1.0);
  ScalarField out(g);
  if (name == "stream-taylor-green") {
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const auto x = g.node(q);
      out[q] = -amp * std::cos(x[0]) * std::cos(x[1]);
    }
  } else if (name == "product-sine") {
    for (std::int64_t q = 0; q < g.points(); ++q) {
      const auto x = g.node(q);
      out[q] = amp * std::sin(x[0]) * std::sin(x[1]);
    }
  } else {
    fail(w + ": unknown recipe '" + name + "'");
  }
  return out;
}

TimeDependentVelocity velocity_of_stream(const ScalarField& phi) {
  return TimeDependentVelocity::sampled(
      {transform_inverse(perp_grad(transform_forward(phi)))}, 0.0, 0.0);
}

TimeDependentVelocity zero_velocity(const Grid& g) {
  return TimeDependentVelocity::frozen(zero_field(g.dim(), g.box_lengths()),
                                       0.0);
}

const char* rotation_kind_name(RotationKind k) {
  switch (k) {
    case RotationKind::Identity: return "identity";
    case RotationKind::Rot2DSameLaw: return "rot2d-same-law";
    case RotationKind::Rot2DBrownian: return "rot2d-brownian";
    case RotationKind::Rot3DBlock: return "rot3d-block";
    case RotationKind::Rot3DExp: return "rot3d-exp";
  }
  return "unknown";
}

Json estimate_json(const FkEstimate& est, std::uint64_t seed) {
  Json j;
  j["flow_kind"] = rotation_kind_name(est.kind);
  j["n_paths"] = est.n_paths;
  j["seed"] = seed;
  Json se = Json::array();
  for (int c = 0; c < est.field.ncomp(); ++c) se.push_back(est.se_summary[c]);
  j["se_summary"] = se;
  j["se_h"] = se_h_norm(est);
  j["n_flagged"] = est.n_flagged;
  j["moment_beta1"] = est.moment_beta1;
  return j;
}

void export_estimate(const std::string& out, const std::string& stem,
                     const FkEstimate& est, std::uint64_t seed) {
  write_vaf1(join(out, stem + ".vaf1"), est.field);
  write_vaf1(join(out, stem + "_se.vaf1"), est.se);
  write_json_file(join(out, stem + ".json"), estimate_json(est, seed));
}

void write_comparison_csv(const std::string& path, const FkComparison& cmp) {
  CsvTable t;
  t.header = {"node", "abs_gap", "se"};
  t.rows.reserve(cmp.node_gap.size());
  for (size_t i = 0; i < cmp.node_gap.size(); ++i)
    t.rows.push_back({double(i), cmp.node_gap[i], cmp.node_se[i]});
  write_csv(path, t);
}

FkConfig parse_fk_cfg(const Json& cfg, const std::string& w) {
  FkConfig fc;
  fc.n_paths = get_int(cfg, w, "n_paths");
  fc.dt = get_num(cfg, w, "dt");
  fc.seed = get_u64(cfg, w, "seed");
  fc.crn = get_bool_or(cfg, w, "crn", false);
  fc.threads = get_int_or(cfg, w, "threads", 1);
  return fc;
}

struct KindOutput {
  Json result;
  bool pass = true;
};

KindOutput run_duality(const Json& cfg, const std::string& out) {
  const std::string w = "duality config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "f0", "g0"},
             common({"velocity", "checkpoints", "tolerance", "dt_sweep"}));
  const Grid g = parse_grid(cfg, w, 0);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double dt = get_num(cfg, w, "dt");
  const int checkpoints = get_int_or(cfg, w, "checkpoints", 10);
  const double tol = get_num_or(cfg, w, "tolerance", 1e-5);

  const SpectralVectorField F0 = parse_vector_data(cfg, w, "f0", g, nu);
  const SpectralVectorField G0 = parse_vector_data(cfg, w, "g0", g, nu);
  const VelocityInput vin = parse_velocity(cfg, w, g, nu);
  const TimeDependentVelocity v = vin.present ? vin.vel : zero_velocity(g);

  const SolverConfig sc{nu, dt, Scheme::IFRK4, true, false};
  const PairingTrace tr = pairing_trace(F0, G0, v, T, sc, checkpoints);

  KindOutput ko;
  ko.result["kind"] = "duality";
  ko.result["deviation"] = tr.deviation;
  ko.result["tolerance"] = tol;
  ko.result["times"] = tr.times;
  ko.result["pairing"] = tr.pairing;
  ko.pass = tr.deviation <= tol;

  write_plot(join(out, "pairing"),
             {"conserved pairing", "t", "(F(t), G(T-t))_H", false, false},
             {{"pairing", tr.times, tr.pairing, {}}});

  if (cfg.contains("dt_sweep")) {
    const Json& sj = cfg.at("dt_sweep");
    if (!sj.is_array() || sj.size() < 2)
      fail(w + ".dt_sweep: expected an array of at least two time steps");
    std::vector<double> dts;
    for (const auto& e : sj) {
      if (!e.is_number() || e.get<double>() <= 0.0)
        fail(w + ".dt_sweep: time steps must be positive numbers");
      dts.push_back(e.get<double>());
    }
    std::sort(dts.begin(), dts.end(), std::greater<double>());
    std::vector<double> devs;
    for (double d : dts) {
      const SolverConfig si{nu, d, Scheme::IFRK4, true, false};
      devs.push_back(pairing_trace(F0, G0, v, T, si, checkpoints).deviation);
    }
    std::vector<double> orders;
    double best = 0.0;
    for (size_t i = 1; i < dts.size(); ++i) {
      const double o = std::log(devs[i - 1] / devs[i]) /
                       std::log(dts[i - 1] / dts[i]);
      orders.push_back(o);
      best = std::max(best, o);
    }
    ko.result["dt_sweep"] = dts;
    ko.result["sweep_deviations"] = devs;
    ko.result["pair_orders"] = orders;
    ko.result["order"] = best;
    write_plot(join(out, "convergence"),
               {"pairing deviation vs dt", "dt", "max relative deviation",
                true, true},
               {{"deviation", dts, devs, {}}});
  }

  ko.result["pass"] = ko.pass;
  return ko;
}

KindOutput run_duality_relation(const Json& cfg, const std::string& out) {
  const std::string w = "duality-relation config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "velocity", "seed"},
             common({"n_pairs", "tolerance", "max_mode", "norm"}));
  const Grid g = parse_grid(cfg, w, 3);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double dt = get_num(cfg, w, "dt");
  const std::uint64_t seed = get_u64(cfg, w, "seed");
  const int n_pairs = get_int_or(cfg, w, "n_pairs", 5);
  const double tol = get_num_or(cfg, w, "tolerance", 1e-5);
  const int max_mode = get_int_or(cfg, w, "max_mode", 2);
  const double norm = get_num_or(cfg, w, "norm", 1.0);
  if (n_pairs < 1) fail(w + ".n_pairs: must be positive");

  const VelocityInput vin = parse_velocity(cfg, w, g, nu);
  const TimeDependentVelocity v = vin.present ? vin.vel : zero_velocity(g);
  const SolverConfig sc{nu, dt, Scheme::IFRK4, true, false};

  CsvTable t;
  t.header = {"pair", "lhs", "rhs", "gap"};
  Json gaps = Json::array();
  double worst = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const auto F0 = random_solenoidal(g, seed + 2 * std::uint64_t(i), max_mode,
                                      norm);
    const auto G0 = random_solenoidal(g, seed + 2 * std::uint64_t(i) + 1,
                                      max_mode, norm);
    const DualityRelation d = duality_relation(F0, G0, v, T, sc);
    t.rows.push_back({double(i), d.lhs, d.rhs, d.gap});
    gaps.push_back(d.gap);
    worst = std::max(worst, d.gap);
  }
  write_csv(join(out, "pairs.csv"), t);

  KindOutput ko;
  ko.result["kind"] = "duality-relation";
  ko.result["n_pairs"] = n_pairs;
  ko.result["gaps"] = gaps;
  ko.result["max_gap"] = worst;
  ko.result["tolerance"] = tol;
  ko.pass = worst <= tol;
  ko.result["pass"] = ko.pass;
  return ko;
}

KindOutput run_serrin(const Json& cfg, const std::string& out) {
  const std::string w = "serrin config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "seed"},
             common({"n_trials", "tolerance", "ratio_tolerance"}));
  const Grid g = parse_grid(cfg, w, 3);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double dt = get_num(cfg, w, "dt");
  const std::uint64_t seed = get_u64(cfg, w, "seed");
  const int n_trials = get_int_or(cfg, w, "n_trials", 3);
  const double tol = get_num_or(cfg, w, "tolerance", 1e-5);
  const double rtol = get_num_or(cfg, w, "ratio_tolerance", 1e-8);

  const SolverConfig sc{nu, dt, Scheme::IFRK4, true, false};
  const SerrinResult r = serrin_experiment(g, nu, T, sc, n_trials, seed);

  KindOutput ko;
  ko.result["kind"] = "serrin";
  ko.result["pairing_gap"] = r.pairing_gap;
  ko.result["vorticity_ratio"] = r.vorticity_ratio;
  ko.result["expected_ratio"] = r.expected_ratio;
  ko.result["ratio_error"] = r.ratio_error;
  ko.result["tolerance"] = tol;
  ko.result["ratio_tolerance"] = rtol;
  ko.pass = r.pairing_gap <= tol && r.ratio_error <= rtol;
  ko.result["pass"] = ko.pass;

  CsvTable t;
  t.header = {"pairing_gap", "vorticity_ratio", "expected_ratio",
              "ratio_error"};
  t.rows.push_back(
      {r.pairing_gap, r.vorticity_ratio, r.expected_ratio, r.ratio_error});
  write_csv(join(out, "serrin.csv"), t);
  return ko;
}

KindOutput run_fk_pde(const Json& cfg, const std::string& out, int dim) {
  const std::string w = dim == 2 ? "fk2d config" : "fk3d config";
  std::vector<std::string> opts{"velocity", "pde_dt", "tolerance_rel", "crn"};
  if (dim == 2)
    opts = plus(opts, {"phi", "flow", "complex_check", "complex_paths"});
  check_keys(cfg, w, {"grid", "nu", "T", "s", "f0", "n_paths", "dt", "seed"},
             common(opts));
  const Grid g = parse_grid(cfg, w, dim);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double s = get_num(cfg, w, "s");
  const double pde_dt = get_num_or(cfg, w, "pde_dt", 1e-3);
  const double rel = get_num_or(cfg, w, "tolerance_rel", 0.02);
  const FkConfig fc = parse_fk_cfg(cfg, w);
  const std::string flow = get_str_or(cfg, w, "flow", "identity");

  const SpectralVectorField F0h = parse_vector_data(cfg, w, "f0", g, nu);
  const VectorField F0 = transform_inverse(F0h);

  KindOutput ko;
  ko.result["kind"] = dim == 2 ? "fk2d" : "fk3d";
  ko.result["flow"] = flow;

  FkEstimate est;
  TimeDependentVelocity vel;
  bool has_vel = false;
  if (flow == "identity") {
    if (cfg.contains("phi")) fail(w + ": phi is only valid for flow 'rotated'");
    const VelocityInput vin = parse_velocity(cfg, w, g, nu);
    has_vel = vin.present;
    if (has_vel) vel = vin.vel;
    est = fk_curve(F0, has_vel ? &vel : nullptr, nu, T, s, fc);
  } else if (flow == "rotated") {
    if (cfg.contains("velocity"))
      fail(w + ": the rotated flow derives its velocity from phi");
    const ScalarField phi = parse_scalar_data(cfg, w, "phi", g);
    vel = velocity_of_stream(phi);
    has_vel = true;
    est = fk_rot2d(F0, phi, nu, T, s, fc);
    if (get_bool_or(cfg, w, "complex_check", false)) {
      FkConfig cc = fc;
      cc.n_paths = get_int_or(cfg, w, "complex_paths",
                              std::min(fc.n_paths, 200));
      const FkComplexReport rep = fk_complex_check(F0, phi, nu, T, s, cc);
      Json cj;
      cj["n_paths"] = cc.n_paths;
      cj["max_state_gap"] = rep.max_state_gap;
      cj["max_estimate_gap"] = rep.max_estimate_gap;
      cj["tolerance"] = rep.tolerance;
      cj["pass"] = rep.pass;
      ko.result["complex_check"] = cj;
      ko.pass = ko.pass && rep.pass;
    }
  } else {
    fail(w + ".flow: expected 'identity' or 'rotated'");
  }
  if (has_vel && !vel.constant_in_time())
    fail(w + ": the PDE cross-check needs a velocity constant in time");

  VectorField ref;
  if (s > 0.0) {
    const SolverConfig sc{nu, pde_dt, Scheme::IFRK4, true, false};
    const TimeDependentVelocity veff =
        has_vel ? vel : zero_velocity(g);
    ref = transform_inverse(solve_F(F0h, veff, s, sc).states.back());
  } else {
    ref = transform_inverse(F0h);
  }

  const FkComparison cmp = compare_to_reference(est, ref);
  const double bound = std::max(3.0 * cmp.se_h, rel * cmp.ref_h);
  ko.pass = ko.pass && cmp.gap_h <= bound;

  export_estimate(out, "estimate", est, fc.seed);
  write_vaf1(join(out, "reference.vaf1"), ref);
  write_comparison_csv(join(out, "comparison.csv"), cmp);

  ko.result["gap_h"] = cmp.gap_h;
  ko.result["se_h"] = cmp.se_h;
  ko.result["ref_h"] = cmp.ref_h;
  ko.result["bound"] = bound;
  ko.result["n_flagged"] = est.n_flagged;
  ko.result["moment_beta1"] = est.moment_beta1;
  ko.result["pass"] = ko.pass;
  return ko;
}

KindOutput run_fk_surface(const Json& cfg, const std::string& out) {
  const std::string w = "fk-surface config";
  check_keys(cfg, w, {"grid", "nu", "T", "s", "g0", "n_paths", "dt", "seed"},
             common({"velocity", "crn"}));
  const Grid g = parse_grid(cfg, w, 3);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double s = get_num(cfg, w, "s");
  const FkConfig fc = parse_fk_cfg(cfg, w);

  const SpectralVectorField G0h = parse_vector_data(cfg, w, "g0", g, nu);
  const VectorField g0 = transform_inverse(G0h);
  const VectorField f0 = transform_inverse(curl3(G0h));
  const VelocityInput vin = parse_velocity(cfg, w, g, nu);
  const TimeDependentVelocity* vptr = vin.present ? &vin.vel : nullptr;

  const FkEstimate surf = fk_surface(f0, vptr, nu, T, s, fc);
  const FkEstimate curve = fk_curve(g0, vptr, nu, T, s, fc);
  const VectorField curled =
      transform_inverse(curl3(transform_forward(curve.field)));

  const FkComparison cmp = compare_to_reference(surf, curled);
  const double se_curled = curled_se_h_bound(curve);
  const double bound = 3.0 * std::hypot(se_h_norm(surf), se_curled);

  export_estimate(out, "surface", surf, fc.seed);
  export_estimate(out, "curve", curve, fc.seed);
  write_vaf1(join(out, "curled_curve.vaf1"), curled);
  write_comparison_csv(join(out, "comparison.csv"), cmp);

  KindOutput ko;
  ko.result["kind"] = "fk-surface";
  ko.result["gap_h"] = cmp.gap_h;
  ko.result["se_surface_h"] = se_h_norm(surf);
  ko.result["se_curled_bound"] = se_curled;
  ko.result["bound"] = bound;
  ko.result["ref_h"] = cmp.ref_h;
  ko.result["n_flagged"] = surf.n_flagged + curve.n_flagged;
  ko.pass = cmp.gap_h <= bound;
  ko.result["pass"] = ko.pass;
  return ko;
}

KindOutput run_martingale(const Json& cfg, const std::string& out) {
  const std::string w = "martingale config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "n_paths", "seed", "f0",
                      "contour"},
             common({"s", "flow", "velocity", "phi", "pde_dt", "checkpoints",
                     "bias_allowance", "n_saves"}));
  const Grid g = parse_grid(cfg, w, 2);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double s = get_num_or(cfg, w, "s", T);
  const double pde_dt = get_num_or(cfg, w, "pde_dt", 1e-3);
  const int checkpoints = get_int_or(cfg, w, "checkpoints", 5);
  const double bias = get_num_or(cfg, w, "bias_allowance", 1.0);
  const int n_saves = get_int_or(cfg, w, "n_saves", 20);
  const std::string flow = get_str_or(cfg, w, "flow", "identity");
  if (n_saves < 2) fail(w + ".n_saves: needs at least 2 snapshots");

  const Json& cj = member(cfg, w, "contour");
  check_keys(cj, w + ".contour", {"radius"}, {"center", "points"});
  const double radius = get_num(cj, w + ".contour", "radius");
  const int m = get_int_or(cj, w + ".contour", "points", 256);
  std::array<double, 2> center{0.5 * g.box(0), 0.5 * g.box(1)};
  if (cj.contains("center")) {
    const Json& ce = cj.at("center");
    if (!ce.is_array() || ce.size() != 2 || !ce[0].is_number() ||
        !ce[1].is_number())
      fail(w + ".contour.center: expected an array of 2 numbers");
    center = {ce[0].get<double>(), ce[1].get<double>()};
  }
  const Contour gamma = Contour::circle(center, radius, m);

  const SpectralVectorField F0h = parse_vector_data(cfg, w, "f0", g, nu);

  FlowConfig fcfg;
  fcfg.nu = nu;
  fcfg.dt = get_num(cfg, w, "dt");
  fcfg.n_paths = get_int(cfg, w, "n_paths");
  fcfg.seed = get_u64(cfg, w, "seed");

  TimeDependentVelocity vel;
  bool has_vel = false;
  if (flow == "identity") {
    if (cfg.contains("phi")) fail(w + ": phi is only valid for flow 'rotated'");
    const VelocityInput vin = parse_velocity(cfg, w, g, nu);
    has_vel = vin.present;
    if (has_vel) vel = vin.vel;
  } else if (flow == "rotated") {
    if (cfg.contains("velocity"))
      fail(w + ": the rotated flow derives its velocity from phi");
    const ScalarField phi = parse_scalar_data(cfg, w, "phi", g);
    vel = velocity_of_stream(phi);
    has_vel = true;
    fcfg.rotation = brownian_rotation(phi, nu);
  } else {
    fail(w + ".flow: expected 'identity' or 'rotated'");
  }

  const TimeDependentVelocity veff = has_vel ? vel : zero_velocity(g);
  std::vector<double> saves;
  for (int i = 0; i <= n_saves; ++i) saves.push_back(T * i / n_saves);
  const SolverConfig sc{nu, pde_dt, Scheme::IFRK4, true, false};
  const Trajectory traj = solve_F(F0h, veff, T, sc, {}, saves);

  const TimeDependentVelocity* drift =
      (flow == "identity" && has_vel) ? &vel : nullptr;
  const MartingaleResult r =
      martingale_test(gamma, traj, drift, T, s, fcfg, checkpoints, bias);

  KindOutput ko;
  ko.result["kind"] = "martingale";
  ko.result["flow"] = flow;
  ko.result["start_value"] = r.start_value;
  Json rows = Json::array();
  std::vector<double> ts, means, ses;
  CsvTable t;
  t.header = {"t", "mean_delta", "se", "bound", "pass"};
  for (const auto& cp : r.checkpoints) {
    Json e;
    e["t"] = cp.t;
    e["mean_delta"] = cp.mean_delta;
    e["se"] = cp.se;
    e["bound"] = cp.bound;
    e["pass"] = cp.pass;
    rows.push_back(e);
    t.rows.push_back(
        {cp.t, cp.mean_delta, cp.se, cp.bound, cp.pass ? 1.0 : 0.0});
    ts.push_back(cp.t);
    means.push_back(r.start_value + cp.mean_delta);
    ses.push_back(cp.se);
  }
  ko.result["checkpoints"] = rows;
  ko.pass = r.pass;
  ko.result["pass"] = ko.pass;
  write_csv(join(out, "checkpoints.csv"), t);
  write_plot(join(out, "martingale"),
             {"transported loop integral", "t", "E[M(t)]", false, false},
             {{"E[M(t)]", ts, means, ses},
              {"start", {ts.front(), ts.back()},
               {r.start_value, r.start_value}, {}}});
  return ko;
}

KindOutput run_one_point_law(const Json& cfg, const std::string& out) {
  const std::string w = "one-point-law config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "n_paths", "seed", "phi"},
             common({"x0"}));
  const Grid g = parse_grid(cfg, w, 2);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const ScalarField phi = parse_scalar_data(cfg, w, "phi", g);

  FlowConfig fcfg;
  fcfg.nu = nu;
  fcfg.dt = get_num(cfg, w, "dt");
  fcfg.n_paths = get_int(cfg, w, "n_paths");
  fcfg.seed = get_u64(cfg, w, "seed");
  fcfg.rotation = brownian_rotation(phi, nu);

  std::array<double, 2> x0{0.5 * g.box(0), 0.5 * g.box(1)};
  if (cfg.contains("x0")) {
    const Json& xj = cfg.at("x0");
    if (!xj.is_array() || xj.size() != 2 || !xj[0].is_number() ||
        !xj[1].is_number())
      fail(w + ".x0: expected an array of 2 numbers");
    x0 = {xj[0].get<double>(), xj[1].get<double>()};
  }

  const OnePointLawResult r = one_point_law_test(x0.data(), 2, nullptr, fcfg, T);

  KindOutput ko;
  ko.result["kind"] = "one-point-law";
  ko.result["n_paths"] = r.n_paths;
  ko.result["expected_var"] = r.expected_var;
  Json mean = Json::array(), mean_se = Json::array(), cov = Json::array(),
       cov_se = Json::array(), kurt = Json::array();
  CsvTable t;
  t.header = {"i", "j", "cov", "se", "target"};
  for (int i = 0; i < 2; ++i) {
    mean.push_back(r.mean[i]);
    mean_se.push_back(r.mean_se[i]);
    kurt.push_back(r.kurtosis[i]);
    Json row = Json::array(), row_se = Json::array();
    for (int j = 0; j < 2; ++j) {
      row.push_back(r.cov[i][j]);
      row_se.push_back(r.cov_se[i][j]);
      t.rows.push_back({double(i), double(j), r.cov[i][j], r.cov_se[i][j],
                        i == j ? r.expected_var : 0.0});
    }
    cov.push_back(row);
    cov_se.push_back(row_se);
  }
  ko.result["mean"] = mean;
  ko.result["mean_se"] = mean_se;
  ko.result["cov"] = cov;
  ko.result["cov_se"] = cov_se;
  ko.result["kurtosis"] = kurt;
  ko.result["kurtosis_se"] = r.kurtosis_se;
  ko.pass = r.pass;
  ko.result["pass"] = ko.pass;
  write_csv(join(out, "covariance.csv"), t);
  return ko;
}

KindOutput run_so3_check(const Json& cfg, const std::string& out) {
  const std::string w = "so3-check config";
  check_keys(cfg, w, {"seed"},
             common({"exp_trials", "bch_pairs", "correction_fields",
                     "correction_points"}));
  const So3Battery b = run_so3_battery(
      get_u64(cfg, w, "seed"), get_int_or(cfg, w, "exp_trials", 100),
      get_int_or(cfg, w, "bch_pairs", 1000),
      get_int_or(cfg, w, "correction_fields", 10),
      get_int_or(cfg, w, "correction_points", 10));

  KindOutput ko;
  ko.result["kind"] = "so3-check";
  ko.result["exp_gap"] = b.exp_gap;
  ko.result["bch_gap"] = b.bch_gap;
  ko.result["correction_gap"] = b.correction_gap;
  ko.result["branch_gap"] = b.branch_gap;
  ko.result["tolerances"] = Json{{"exp", 1e-12},
                                 {"bch", 1e-8},
                                 {"correction", 1e-6},
                                 {"branch", 1e-9}};
  ko.pass = b.pass;
  ko.result["pass"] = ko.pass;

  CsvTable t;
  t.header = {"exp_gap", "bch_gap", "correction_gap", "branch_gap"};
  t.rows.push_back({b.exp_gap, b.bch_gap, b.correction_gap, b.branch_gap});
  write_csv(join(out, "so3.csv"), t);
  return ko;
}

KindOutput run_scaling(const Json& cfg, const std::string& out) {
  const std::string w = "scaling config";
  check_keys(cfg, w, {"grid", "nu", "t", "dt", "velocity", "f0", "lambda"},
             common({"tolerance"}));
  const Grid g = parse_grid(cfg, w, 0);
  const double nu = get_num(cfg, w, "nu");
  const double t = get_num(cfg, w, "t");
  const double dt = get_num(cfg, w, "dt");
  const double lambda = get_num(cfg, w, "lambda");
  const double tol = get_num_or(cfg, w, "tolerance", 1e-12);

  const Json& r = member(cfg, w, "velocity");
  const AnalyticPtr u =
      make_analytic(r, w + ".velocity", g.dim(), nu, g.box_lengths(), {});
  const SpectralVectorField F0 = parse_vector_data(cfg, w, "f0", g, nu);

  const SolverConfig sc{nu, dt, Scheme::IFRK4, true, false};
  const ScalingCheck c = scaling_checks(F0, u, lambda, t, sc);

  KindOutput ko;
  ko.result["kind"] = "scaling";
  ko.result["lambda"] = lambda;
  ko.result["roundtrip"] = c.roundtrip;
  ko.result["intertwine"] = c.intertwine;
  ko.result["tolerance"] = tol;
  ko.pass = c.roundtrip <= tol && c.intertwine <= tol;
  ko.result["pass"] = ko.pass;

  CsvTable tb;
  tb.header = {"lambda", "roundtrip", "intertwine"};
  tb.rows.push_back({lambda, c.roundtrip, c.intertwine});
  write_csv(join(out, "scaling.csv"), tb);
  return ko;
}

KindOutput run_solve(const Json& cfg, const std::string& out) {
  const std::string w = "solve config";
  check_keys(cfg, w, {"grid", "nu", "T", "dt", "f0"},
             common({"velocity", "collect_energy", "write_field"}));
  const Grid g = parse_grid(cfg, w, 0);
  const double nu = get_num(cfg, w, "nu");
  const double T = get_num(cfg, w, "T");
  const double dt = get_num(cfg, w, "dt");
  const bool energy = get_bool_or(cfg, w, "collect_energy", false);
  const bool write_field = get_bool_or(cfg, w, "write_field", true);

  const SpectralVectorField F0 = parse_vector_data(cfg, w, "f0", g, nu);
  const VelocityInput vin = parse_velocity(cfg, w, g, nu);
  const TimeDependentVelocity v = vin.present ? vin.vel : zero_velocity(g);

  const SolverConfig sc{nu, dt, Scheme::IFRK4, true, energy};
  const Trajectory traj = solve_F(F0, v, T, sc);
  const SpectralVectorField& final_state = traj.states.back();

  if (write_field)
    write_vaf1(join(out, "field.vaf1"), transform_inverse(final_state));
  if (energy) {
    CsvTable t;
    t.header = {"t", "energy", "dissipation", "production"};
    for (size_t i = 0; i < traj.e_times.size(); ++i)
      t.rows.push_back({traj.e_times[i], traj.energy[i], traj.dissipation[i],
                        traj.production[i]});
    write_csv(join(out, "energy.csv"), t);
    write_plot(join(out, "energy"),
               {"energy budget", "t", "value", false, false},
               {{"|F|_H^2", traj.e_times, traj.energy, {}},
                {"dissipation", traj.e_times, traj.dissipation, {}},
                {"production", traj.e_times, traj.production, {}}});
  }

  KindOutput ko;
  ko.result["kind"] = "solve";
  ko.result["initial_norm_h"] = norm_H(F0);
  ko.result["final_norm_h"] = norm_H(final_state);
  ko.result["final_relative_divergence"] = relative_divergence(final_state);
  ko.result["pass"] = true;
  return ko;
}

using Runner = KindOutput (*)(const Json&, const std::string&);

Runner find_runner(const std::string& kind) {
  if (kind == "duality") return run_duality;
  if (kind == "duality-relation") return run_duality_relation;
  if (kind == "serrin") return run_serrin;
  if (kind == "fk2d")
    return [](const Json& c, const std::string& o) { return run_fk_pde(c, o, 2); };
  if (kind == "fk3d")
    return [](const Json& c, const std::string& o) { return run_fk_pde(c, o, 3); };
  if (kind == "fk-surface") return run_fk_surface;
  if (kind == "martingale") return run_martingale;
  if (kind == "one-point-law") return run_one_point_law;
  if (kind == "so3-check") return run_so3_check;
  if (kind == "scaling") return run_scaling;
  if (kind == "solve") return run_solve;
  fail("config.kind: unknown experiment kind '" + kind + "'");
}

}  // namespace

int run_experiment(const std::string& config_path, const RunOverrides& ov) {
  Json cfg = load_json_file(config_path);
  if (!cfg.is_object())
    fail(config_path + ": the top level must be a JSON object");
  const std::string kind = get_str(cfg, "config", "kind");

  if (ov.has_seed) cfg["seed"] = ov.seed;
  if (ov.threads > 0) cfg["threads"] = ov.threads;
  std::string out = ov.out_dir;
  if (out.empty() && cfg.contains("out")) out = get_str(cfg, "config", "out");
  if (out.empty()) {
    const char* env = std::getenv("VECADVECT_OUT");
    if (env != nullptr && env[0] != '\0') out = env;
  }
  if (out.empty()) out = ".";
  cfg["out"] = out;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail("cannot create output directory: " + out);

  const auto t0 = std::chrono::steady_clock::now();
  const KindOutput ko = find_runner(kind)(cfg, out);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  write_json_file(join(out, "result.json"), ko.result);

  Json manifest;
  manifest["tool"] = "vecadvect";
  manifest["version"] = kVersion;
  manifest["config_path"] = config_path;
  manifest["config"] = cfg;
  manifest["wall_time_seconds"] = wall;
  write_json_file(join(out, "manifest.json"), manifest);

  return ko.pass ? 0 : 4;
}

}  // namespace vecadvect

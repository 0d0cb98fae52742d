#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <optional>
#include <vector>

#include "holoray/core.hpp"
#include "holoray/grid.hpp"
#include "holoray/parallel.hpp"
#include "holoray/surface.hpp"

namespace holoray {

// Point of SM in angle form: v = e^{-lambda}(cos theta, sin theta), so the
// unit-speed constraint holds exactly at all times.
struct PhasePoint {
  double x1 = 0.0;
  double x2 = 0.0;
  double theta = 0.0;
};

enum class RayStatus { exited, trapped, capped };

struct GeodesicRay {
  PhasePoint start;
  std::vector<PhasePoint> samples;  // uniform step h, last entry at exit if exited
  double step = 0.0;
  double exit_time = 0.0;  // meaningful iff status == exited
  std::optional<double> clairaut;
  RayStatus status = RayStatus::capped;
};

namespace detail {

struct FlowDeriv {
  double dx1, dx2, dtheta;
};

inline FlowDeriv geodesic_rhs(const SurfaceModel& model, const PhasePoint& p) {
  double el = std::exp(-model.lambda(p.x1, p.x2));
  auto g = model.grad_lambda(p.x1, p.x2);
  double c = std::cos(p.theta), s = std::sin(p.theta);
  return {el * c, el * s, el * (-g[0] * s + g[1] * c)};
}

}  // namespace detail

/// One classical RK4 step of the geodesic equations in (x1, x2, theta) form.
inline PhasePoint flow_step(const SurfaceModel& model, const PhasePoint& p, double h) {
  using detail::geodesic_rhs;
  auto k1 = geodesic_rhs(model, p);
  PhasePoint p2{p.x1 + 0.5 * h * k1.dx1, p.x2 + 0.5 * h * k1.dx2,
                p.theta + 0.5 * h * k1.dtheta};
  auto k2 = geodesic_rhs(model, p2);
  PhasePoint p3{p.x1 + 0.5 * h * k2.dx1, p.x2 + 0.5 * h * k2.dx2,
                p.theta + 0.5 * h * k2.dtheta};
  auto k3 = geodesic_rhs(model, p3);
  PhasePoint p4{p.x1 + h * k3.dx1, p.x2 + h * k3.dx2, p.theta + h * k3.dtheta};
  auto k4 = geodesic_rhs(model, p4);
  return {p.x1 + h / 6.0 * (k1.dx1 + 2 * k2.dx1 + 2 * k3.dx1 + k4.dx1),
          p.x2 + h / 6.0 * (k1.dx2 + 2 * k2.dx2 + 2 * k3.dx2 + k4.dx2),
          p.theta + h / 6.0 * (k1.dtheta + 2 * k2.dtheta + 2 * k3.dtheta + k4.dtheta)};
}

/// Clairaut first integral c = cos(theta) cosh(v) of the catenoid.
inline double clairaut_constant(const SurfaceModel& model, const PhasePoint& p) {
  if (!model.is_catenoid())
    throw UnsupportedModelError("clairaut_constant: catenoid only");
  return std::cos(p.theta) * std::cosh(p.x2);
}

inline bool base_inside(const SurfaceModel& model, const PhasePoint& p) {
  if (model.closed()) return true;
  return p.x2 >= model.lo(1) && p.x2 <= model.hi(1);
}

inline constexpr double kDefaultExitTol = 1e-10;
inline constexpr int kExitBisectIters = 12 + 22;  // down to ~1e-10 of a step

// Refine the boundary crossing between an inside point p and the outside point
// one step of size h later. Returns the crossing point and time offset from p.
inline std::pair<PhasePoint, double> refine_exit(const SurfaceModel& model,
                                                 const PhasePoint& p, double h) {
  double a = 0.0, b = h;
  PhasePoint pb = flow_step(model, p, b);
  for (int it = 0; it < kExitBisectIters; ++it) {
    double m = 0.5 * (a + b);
    PhasePoint pm = flow_step(model, p, m);
    if (base_inside(model, pm)) {
      a = m;
    } else {
      b = m;
      pb = pm;
    }
    double lo = std::abs(pb.x2 - model.lo(1));
    double hi = std::abs(pb.x2 - model.hi(1));
    if (std::min(lo, hi) < kDefaultExitTol) break;
  }
  // snap the transverse coordinate onto the boundary
  PhasePoint exit = pb;
  double mid = 0.5 * (model.lo(1) + model.hi(1));
  exit.x2 = (exit.x2 < mid) ? model.lo(1) : model.hi(1);
  return {exit, b};
}

/// Integrate the geodesic from p0 until the base point leaves M or t_max.
inline GeodesicRay integrate_ray(const SurfaceModel& model, const PhasePoint& p0,
                                 double h, double t_max, bool keep_samples = true) {
  if (h <= 0.0) throw ConfigError("integrate_ray: h must be positive");
  if (t_max <= 0.0) throw ConfigError("integrate_ray: t_max must be positive");

  GeodesicRay ray;
  ray.start = p0;
  ray.step = h;
  if (model.is_catenoid()) ray.clairaut = clairaut_constant(model, p0);
  if (keep_samples) ray.samples.push_back(p0);

  PhasePoint p = p0;
  double t = 0.0;
  long nmax = static_cast<long>(std::ceil(t_max / h));
  for (long n = 0; n < nmax; ++n) {
    PhasePoint q = flow_step(model, p, h);
    if (!base_inside(model, q)) {
      auto [exit, dt] = refine_exit(model, p, h);
      ray.exit_time = t + dt;
      ray.status = RayStatus::exited;
      if (keep_samples) ray.samples.push_back(exit);
      return ray;
    }
    p = q;
    t += h;
    if (keep_samples) ray.samples.push_back(p);
  }
  ray.status = RayStatus::capped;
  return ray;
}

/// Forward escape time only; +inf when capped at t_max.
inline double escape_time(const SurfaceModel& model, const PhasePoint& p0,
                          double h, double t_max) {
  PhasePoint p = p0;
  double t = 0.0;
  long nmax = static_cast<long>(std::ceil(t_max / h));
  for (long n = 0; n < nmax; ++n) {
    PhasePoint q = flow_step(model, p, h);
    if (!base_inside(model, q)) {
      auto [exit, dt] = refine_exit(model, p, h);
      (void)exit;
      return t + dt;
    }
    p = q;
    t += h;
  }
  return std::numeric_limits<double>::infinity();
}

struct ScatterResult {
  bool trapped = false;
  PhasePoint exit;      // valid iff !trapped
  double transit_time = 0.0;
};

/// Scattering relation: first exit point/direction of the ray entering at
/// `entry` in the inflow boundary.
inline ScatterResult scattering_relation(const SurfaceModel& model,
                                         const PhasePoint& entry, double h,
                                         double t_max) {
  if (model.closed())
    throw DomainError("scattering_relation: closed model has no boundary");
  if (!base_inside(model, entry) ||
      !(std::abs(entry.x2 - model.lo(1)) < 1e-9 ||
        std::abs(entry.x2 - model.hi(1)) < 1e-9) ||
      inward_component(model, entry.x2, entry.theta) <= 0.0)
    throw DomainError("scattering_relation: entry not in the inflow boundary");
  GeodesicRay ray = integrate_ray(model, entry, h, t_max, /*keep_samples=*/false);
  ScatterResult r;
  if (ray.status != RayStatus::exited) {
    r.trapped = true;
    return r;
  }
  // re-run last step bookkeeping: integrate again keeping only the endpoint
  PhasePoint p = entry;
  long steps = static_cast<long>(ray.exit_time / ray.step);
  for (long n = 0; n < steps; ++n) p = flow_step(model, p, h);
  auto [exit, dt] = refine_exit(model, p, h);
  (void)dt;
  r.exit = exit;
  r.transit_time = ray.exit_time;
  return r;
}

/// Per-node (escape time, Liouville weight) pairs sorted by escape time;
/// the discrete survival function of the flow on the grid.
inline std::vector<std::pair<double, double>> escape_profile(
    const SurfaceModel& model, const SMGrid& grid, double h = 1e-2,
    double t_max = 25.0) {
  if (model.closed())
    throw UnsupportedModelError("escape_profile: constant on closed models");
  std::vector<std::pair<double, double>> prof(grid.num_nodes());
  parallel_for(grid.num_nodes(), [&](size_t idx) {
    int k = static_cast<int>(idx % grid.ntheta());
    int j = static_cast<int>((idx / grid.ntheta()) % grid.n2());
    int i = static_cast<int>(idx / (static_cast<size_t>(grid.ntheta()) * grid.n2()));
    PhasePoint p{grid.x1(i), grid.x2(j), grid.theta(k)};
    double esc = base_inside(model, p) ? escape_time(model, p, h, t_max + h) : 0.0;
    prof[idx] = {esc, grid.liouville_weight(i, j, k)};
  });
  std::sort(prof.begin(), prof.end());
  return prof;
}

/// Liouville-weighted volume of starting nodes that stay in SM up to each
/// requested time. Monotone nonincreasing in t.
inline std::vector<std::pair<double, double>> volume_decay(
    const SurfaceModel& model, const SMGrid& grid,
    const std::vector<double>& times, double h = 1e-2) {
  if (model.closed())
    throw UnsupportedModelError("volume_decay: constant on closed models");
  double t_max = 0.0;
  for (double t : times) t_max = std::max(t_max, t);
  auto prof = escape_profile(model, grid, h, t_max);
  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  for (double t : times) {
    // first node with escape time >= t; suffix weight sum is V(t)
    auto it = std::lower_bound(prof.begin(), prof.end(),
                               std::make_pair(t, -1.0));
    double v = 0.0;
    for (auto q = it; q != prof.end(); ++q) v += q->second;
    out.emplace_back(t, v);
  }
  return out;
}

struct EscapeRateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least-squares line fit of log V(t) against t, evaluated at the jump times
/// of the discrete survival function inside [t0, t1] (the staircase between
/// jumps carries no information at fixed grid resolution).
inline EscapeRateFit escape_rate_fit(
    const std::vector<std::pair<double, double>>& profile, double t0,
    double t1) {
  double total = 0.0;
  for (const auto& [e, w] : profile) total += w;
  std::vector<double> xs, ys;
  double v = total;
  for (size_t q = 0; q < profile.size();) {
    size_t r = q;
    double drop = 0.0;
    while (r < profile.size() && profile[r].first - profile[q].first < 1e-9)
      drop += profile[r++].second;
    if (profile[q].first >= t0 && profile[q].first <= t1 && v > 0) {
      xs.push_back(profile[q].first);
      ys.push_back(std::log(v));
    }
    v -= drop;
    q = r;
  }
  EscapeRateFit fit;
  fit.points = static_cast<int>(xs.size());
  if (fit.points < 3) return fit;
  size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t q = 0; q < n; ++q) {
    sx += xs[q];
    sy += ys[q];
    sxx += xs[q] * xs[q];
    sxy += xs[q] * ys[q];
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double sse = 0, sst = 0, yb = sy / n;
  for (size_t q = 0; q < n; ++q) {
    double f = fit.slope * xs[q] + fit.intercept;
    sse += (ys[q] - f) * (ys[q] - f);
    sst += (ys[q] - yb) * (ys[q] - yb);
  }
  fit.r2 = sst > 0 ? 1.0 - sse / sst : 0.0;
  return fit;
}

}  // namespace holoray

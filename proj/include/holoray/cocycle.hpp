#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/flow.hpp"
#include "holoray/grid.hpp"
#include "holoray/parallel.hpp"
#include "holoray/surface.hpp"

namespace holoray {

/// Thrown when a cocycle is requested past the exit time of its ray.
class PartialTrajectoryError : public DomainError {
 public:
  PartialTrajectoryError(const std::string& what, double exit_time)
      : DomainError(what), exit_time_(exit_time) {}
  double exit_time() const { return exit_time_; }

 private:
  double exit_time_;
};

/// Polar-factor reprojection onto U(n) (Newton-Schulz, cubically convergent
/// near the unitary group).
inline Matrix unitary_project(const Matrix& m, int iters = 3) {
  Matrix x = m;
  Matrix id = Matrix::Identity(m.rows(), m.cols());
  for (int it = 0; it < iters; ++it)
    x = 0.5 * x * (3.0 * id - (x.adjoint() * x).eval());
  return x;
}

namespace detail {

/// Cubic (4-point Lagrange) stencil of a base-grid axis at coordinate x: four
/// node indices (wrapped on periodic axes, shifted inward at the strip edges)
/// and interpolation weights. Exact for cubic polynomials everywhere.
inline void base_stencil(const SMGrid& grid, int axis, double x, int* idx,
                         double* w) {
  const SurfaceModel& model = grid.model();
  int npts = (axis == 0) ? grid.n1() : grid.n2();
  double d = (axis == 0) ? grid.d1() : grid.d2();
  double s = (x - model.lo(axis)) / d;
  int base = static_cast<int>(std::floor(s));
  int i0 = base - 1;
  if (!model.periodic(axis)) i0 = std::max(0, std::min(npts - 4, i0));
  for (int q = 0; q < 4; ++q) {
    double wq = 1.0;
    for (int r = 0; r < 4; ++r)
      if (r != q) wq *= (s - (i0 + r)) / static_cast<double>(q - r);
    w[q] = wq;
    int j = i0 + q;
    if (model.periodic(axis)) {
      j %= npts;
      if (j < 0) j += npts;
    }
    idx[q] = j;
  }
}

}  // namespace detail

/// Evaluates a phase-space field at off-grid points: bicubic (Catmull-Rom) in
/// the base coordinates, exact Fourier sum in theta. Fields of finite vertical
/// degree are evaluated without aliasing.
class FieldSampler {
 public:
  FieldSampler(const SMGrid& grid, const FiberField& f, double drop_tol = 1e-13)
      : grid_(&grid), n_(f.n) {
    FourierRep rep = theta_transform(grid, f);
    double scale = 0.0;
    for (const auto& c : rep.modes)
      for (const auto& v : c.data) scale = std::max(scale, std::abs(v));
    for (size_t s = 0; s < rep.modes.size(); ++s) {
      double mx = 0.0;
      for (const auto& v : rep.modes[s].data) mx = std::max(mx, std::abs(v));
      if (mx > drop_tol * std::max(1.0, scale))
        modes_.emplace_back(rep.min_mode + static_cast<int>(s),
                            std::move(rep.modes[s]));
    }
  }

  int rank() const { return n_; }

  Vector operator()(double x1, double x2, double theta) const {
    // stencil weights along each base axis
    int i0[4], j0[4];
    double wi[4], wj[4];
    detail::base_stencil(*grid_, 0, x1, i0, wi);
    detail::base_stencil(*grid_, 1, x2, j0, wj);
    Vector out = Vector::Zero(n_);
    for (const auto& [m, c] : modes_) {
      Vector acc = Vector::Zero(n_);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          acc += (wi[a] * wj[b]) * c.vec(i0[a], j0[b]);
      out += std::polar(1.0, m * theta) * acc;
    }
    return out;
  }

 private:
  const SMGrid* grid_;
  int n_;
  std::vector<std::pair<int, ModeField>> modes_;
};

namespace detail {

// Joint state for the flow + cocycle + line-integral ODE system.
struct TransportState {
  PhasePoint p;
  Matrix c;   // cocycle C(t)
  Vector w;   // accumulated integral (optional)
};

struct TransportDeriv {
  FlowDeriv dp;
  Matrix dc;
  Vector dw;
};

inline TransportDeriv transport_rhs(const SurfaceModel& model,
                                    const ConnectionPair& pair,
                                    const TransportState& s, double t,
                                    const FieldSampler* f, double damping) {
  TransportDeriv d;
  d.dp = geodesic_rhs(model, s.p);
  Matrix att = pair.eval(model, s.p.x1, s.p.x2, s.p.theta) +
               pair.Phi(s.p.x1, s.p.x2);
  d.dc = (-att * s.c).eval();
  if (f) {
    d.dw = std::exp(-damping * t) * (s.c.adjoint() * (*f)(s.p.x1, s.p.x2, s.p.theta));
  } else {
    d.dw = Vector::Zero(0);
  }
  return d;
}

inline TransportState transport_step(const SurfaceModel& model,
                                     const ConnectionPair& pair,
                                     const TransportState& s, double t, double h,
                                     const FieldSampler* f, double damping) {
  auto adv = [&](const TransportState& base, const TransportDeriv& k, double a) {
    TransportState r;
    r.p = {base.p.x1 + a * k.dp.dx1, base.p.x2 + a * k.dp.dx2,
           base.p.theta + a * k.dp.dtheta};
    r.c = base.c + a * k.dc;
    if (f) r.w = base.w + a * k.dw;
    return r;
  };
  auto k1 = transport_rhs(model, pair, s, t, f, damping);
  auto k2 = transport_rhs(model, pair, adv(s, k1, 0.5 * h), t + 0.5 * h, f, damping);
  auto k3 = transport_rhs(model, pair, adv(s, k2, 0.5 * h), t + 0.5 * h, f, damping);
  auto k4 = transport_rhs(model, pair, adv(s, k3, h), t + h, f, damping);
  TransportState out;
  out.p = {s.p.x1 + h / 6.0 * (k1.dp.dx1 + 2 * k2.dp.dx1 + 2 * k3.dp.dx1 + k4.dp.dx1),
           s.p.x2 + h / 6.0 * (k1.dp.dx2 + 2 * k2.dp.dx2 + 2 * k3.dp.dx2 + k4.dp.dx2),
           s.p.theta + h / 6.0 * (k1.dp.dtheta + 2 * k2.dp.dtheta +
                                  2 * k3.dp.dtheta + k4.dp.dtheta)};
  out.c = s.c + h / 6.0 * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc);
  if (f) out.w = s.w + h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  return out;
}

struct RayIntegration {
  bool trapped = false;
  double exit_time = 0.0;
  PhasePoint exit;
  Matrix holonomy;  // C(exit_time)
  Vector integral;  // meaningful iff a sampler was given
};

// Integrate the cocycle (and optionally the attenuated line integral) along
// the ray from p0 until exit or t_cap.
inline RayIntegration integrate_transport(const SurfaceModel& model,
                                          const ConnectionPair& pair,
                                          const PhasePoint& p0, double h,
                                          double t_cap,
                                          const FieldSampler* f = nullptr,
                                          double damping = 0.0) {
  if (h <= 0.0) throw ConfigError("integrate_transport: h must be positive");
  TransportState s;
  s.p = p0;
  s.c = Matrix::Identity(pair.rank(), pair.rank());
  if (f) s.w = Vector::Zero(pair.rank());

  RayIntegration out;
  double t = 0.0;
  long nmax = static_cast<long>(std::ceil(t_cap / h));
  for (long step = 0; step < nmax; ++step) {
    double hs = std::min(h, t_cap - t);
    if (hs <= 0) break;
    PhasePoint q = flow_step(model, s.p, hs);
    if (!base_inside(model, q)) {
      auto [exitp, dt] = refine_exit(model, s.p, hs);
      TransportState e = transport_step(model, pair, s, t, dt, f, damping);
      out.exit_time = t + dt;
      out.exit = exitp;
      out.holonomy = unitary_project(e.c);
      if (f) out.integral = e.w;
      return out;
    }
    s = transport_step(model, pair, s, t, hs, f, damping);
    s.c = unitary_project(s.c);
    t += hs;
  }
  out.trapped = !model.closed();
  out.exit_time = t;
  out.exit = s.p;
  out.holonomy = s.c;
  if (f) out.integral = s.w;
  return out;
}

}  // namespace detail

/// Parallel-transport cocycle C(p0, t): solution of
/// dC/dt = -(A(phi_t) + Phi(pi phi_t)) C, C(0) = Id, values in U(n).
inline Matrix transport_cocycle(const SurfaceModel& model,
                                const ConnectionPair& pair, const PhasePoint& p0,
                                double t, double h) {
  if (t < 0.0) throw ConfigError("transport_cocycle: t must be nonnegative");
  auto res = detail::integrate_transport(model, pair, p0, h, t);
  if (res.exit_time < t - 1e-12 && !res.trapped)
    throw PartialTrajectoryError("transport_cocycle: ray exits before t",
                                 res.exit_time);
  return res.holonomy;
}

struct ScatteringRecord {
  PhasePoint entry;
  bool trapped = false;
  PhasePoint exit;                  // valid iff !trapped
  std::optional<Matrix> holonomy;   // absent for trapped rays
  double transit_time = 0.0;
};

/// Full-transit transport along the ray entering at `entry` in the inflow
/// boundary; the holonomy realizes the parallel-transport map of the pair.
inline ScatteringRecord parallel_transport_data(const SurfaceModel& model,
                                                const ConnectionPair& pair,
                                                const PhasePoint& entry,
                                                double h, double t_max) {
  if (model.closed())
    throw DomainError("parallel_transport_data: closed model has no boundary");
  ScatteringRecord rec;
  rec.entry = entry;
  auto res = detail::integrate_transport(model, pair, entry, h, t_max);
  if (res.trapped) {
    rec.trapped = true;
    return rec;
  }
  rec.exit = res.exit;
  rec.holonomy = res.holonomy;
  rec.transit_time = res.exit_time;
  return rec;
}

/// Attenuated ray transform of f at one inflow-boundary entry:
/// u(0) = Int_0^{exit} C(s)^{-1} f(phi_s) ds, integrated jointly with the
/// cocycle at 4th order.
inline Vector attenuated_transform(const SMGrid& grid, const ConnectionPair& pair,
                                   const FieldSampler& f, const PhasePoint& entry,
                                   double h, double t_max = 50.0) {
  const SurfaceModel& model = grid.model();
  if (f.rank() != pair.rank())
    throw ValidationError("attenuated_transform: field/pair rank mismatch");
  auto res = detail::integrate_transport(model, pair, entry, h, t_max, &f);
  if (res.trapped)
    throw DomainError("attenuated_transform: trapped entry");
  return res.integral;
}

inline Vector attenuated_transform(const SMGrid& grid, const ConnectionPair& pair,
                                   const FiberField& f, const PhasePoint& entry,
                                   double h, double t_max = 50.0) {
  FieldSampler sampler(grid, f);
  return attenuated_transform(grid, pair, sampler, entry, h, t_max);
}

struct TransportSolution {
  FiberField u;
  std::vector<unsigned char> trapped;  // per node; trapped nodes carry u = 0
};

/// Solution of (TX + Phi) u = -f with u = 0 on the outflow boundary, computed
/// per node by the attenuated line integral from the node to its exit.
/// `damping` > 0 gives the damped (resolvent) variant e^{-damping t} under the
/// integral; on closed models the integral runs to t_max.
inline TransportSolution transport_solve(const SMGrid& grid,
                                         const ConnectionPair& pair,
                                         const FiberField& f, double h,
                                         double t_max = 50.0,
                                         double damping = 0.0) {
  const SurfaceModel& model = grid.model();
  if (f.n != pair.rank())
    throw ValidationError("transport_solve: field/pair rank mismatch");
  FieldSampler sampler(grid, f);
  TransportSolution sol;
  sol.u = FiberField(grid, f.n);
  sol.trapped.assign(grid.num_nodes(), 0);
  parallel_for(grid.num_nodes(), [&](size_t idx) {
    int k = static_cast<int>(idx % grid.ntheta());
    int j = static_cast<int>((idx / grid.ntheta()) % grid.n2());
    int i = static_cast<int>(idx / (static_cast<size_t>(grid.ntheta()) * grid.n2()));
    PhasePoint p{grid.x1(i), grid.x2(j), grid.theta(k)};
    // outflow boundary nodes already satisfy u = 0
    if (grid.is_base_boundary(j) &&
        inward_component(model, p.x2, p.theta) <= 0.0)
      return;
    auto res = detail::integrate_transport(model, pair, p, h, t_max, &sampler,
                                           damping);
    if (res.trapped) {
      sol.trapped[idx] = 1;
      return;
    }
    for (int c = 0; c < f.n; ++c) sol.u.at(i, j, k, c) = res.integral[c];
  });
  return sol;
}

/// Damped transport integral u = Int_0^{l+} e^{-lambda t} C(t)^{-1} f(phi_t) dt
/// per node; requires lambda > 0.
inline TransportSolution resolvent_apply(const SMGrid& grid,
                                         const ConnectionPair& pair,
                                         const FiberField& f, double lambda,
                                         double h, double t_max = 50.0) {
  if (lambda <= 0.0)
    throw ConfigError("resolvent_apply: damping must be positive");
  // truncation error of the capped integral is e^{-lambda t_cap}
  double t_cap = grid.model().closed()
                     ? std::min(t_max, 30.0 / lambda)
                     : t_max;
  return transport_solve(grid, pair, f, h, t_cap, lambda);
}

/// One ScatteringRecord per non-tangential inflow-boundary grid node.
inline std::vector<ScatteringRecord> scattering_data(const SMGrid& grid,
                                                     const ConnectionPair& pair,
                                                     double h, double t_max) {
  const SurfaceModel& model = grid.model();
  if (model.closed())
    throw DomainError("scattering_data: closed model has no boundary");
  const auto& entries = grid.boundary_minus();
  std::vector<ScatteringRecord> out(entries.size());
  parallel_for(entries.size(), [&](size_t idx) {
    const NodeIndex& nd = entries[idx];
    PhasePoint entry{grid.x1(nd.i), grid.x2(nd.j), grid.theta(nd.k)};
    out[idx] = parallel_transport_data(model, pair, entry, h, t_max);
  });
  return out;
}

/// Sup and L2 (boundary-measure weighted) distances between the holonomies of
/// two scattering-data sets over shared non-trapped entries.
struct ScatteringDistance {
  double sup = 0.0;
  double l2 = 0.0;
  size_t compared = 0;
};

inline ScatteringDistance scattering_distance(const SMGrid& grid,
                                              const std::vector<ScatteringRecord>& a,
                                              const std::vector<ScatteringRecord>& b) {
  if (a.size() != b.size())
    throw ValidationError("scattering_distance: mismatched record sets");
  ScatteringDistance d;
  double wsum = 0.0;
  for (size_t s = 0; s < a.size(); ++s) {
    if (a[s].trapped || b[s].trapped) continue;
    double diff = (*a[s].holonomy - *b[s].holonomy).norm();
    double w = boundary_measure_weight(grid.model(), a[s].entry.x1,
                                       a[s].entry.x2, a[s].entry.theta);
    d.sup = std::max(d.sup, diff);
    d.l2 += w * diff * diff;
    wsum += w;
    ++d.compared;
  }
  if (wsum > 0) d.l2 = std::sqrt(d.l2 / wsum);
  return d;
}

}  // namespace holoray

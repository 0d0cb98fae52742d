#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/grid.hpp"

namespace holoray {

namespace detail {

// Dirichlet window on the bounded axis: cos^4 of the scaled coordinate,
// vanishing to 4th order at the strip edges; identically 1 on closed models.
inline double dirichlet_window(const SurfaceModel& model, double x2) {
  if (model.periodic(1)) return 1.0;
  double c = 0.5 * (model.lo(1) + model.hi(1));
  double rho = 2.0 * (x2 - c) / model.extent(1);  // in [-1, 1]
  double w = std::cos(0.5 * kPi * rho);
  return w * w * w * w;
}

// Smooth random base function: complex trigonometric polynomial with decaying
// random coefficients (smooth in both axes regardless of periodicity).
inline std::function<complexd(double, double)> random_base_function(
    CounterRng& rng, int max_deg) {
  struct Term {
    int p, q;
    complexd a;
  };
  std::vector<Term> terms;
  for (int p = -max_deg; p <= max_deg; ++p)
    for (int q = -max_deg; q <= max_deg; ++q) {
      double decay = 1.0 / (1.0 + p * p + q * q);
      terms.push_back({p, q, decay * rng.gaussian()});
    }
  return [terms](double x1, double x2) {
    complexd s(0.0);
    for (const auto& t : terms)
      s += t.a * std::polar(1.0, t.p * x1 + t.q * x2);
    return s;
  };
}

}  // namespace detail

/// Random coefficient field for one vertical mode; Dirichlet-windowed on
/// boundary models when requested.
inline ModeField random_mode_field(const SMGrid& grid, int rank, CounterRng& rng,
                                   bool dirichlet, int max_deg = 2) {
  ModeField c(grid, rank);
  const SurfaceModel& model = grid.model();
  for (int comp = 0; comp < rank; ++comp) {
    auto f = detail::random_base_function(rng, max_deg);
    for (int i = 0; i < grid.n1(); ++i)
      for (int j = 0; j < grid.n2(); ++j) {
        double w = dirichlet ? detail::dirichlet_window(model, grid.x2(j)) : 1.0;
        c.at(i, j, comp) = w * f(grid.x1(i), grid.x2(j));
      }
  }
  return c;
}

/// Random smooth field of vertical degree <= max_mode (all modes populated).
inline FiberField random_field(const SMGrid& grid, int rank, CounterRng& rng,
                               bool dirichlet, int max_mode = 2,
                               int max_deg = 2) {
  if (2 * (max_mode + 2) > grid.ntheta())
    throw ConfigError("random_field: vertical degree too high for N_theta");
  FiberField u(grid, rank);
  for (int m = -max_mode; m <= max_mode; ++m) {
    ModeField c = random_mode_field(grid, rank, rng, dirichlet, max_deg);
    double decay = 1.0 / (1.0 + m * m);
    c *= complexd(decay);
    u += field_from_mode(grid, c, m);
  }
  return u;
}

/// Random pure Omega_m field (modes +m and -m only).
inline FiberField random_omega_m_field(const SMGrid& grid, int rank, int m,
                                       CounterRng& rng, bool dirichlet,
                                       int max_deg = 2) {
  if (2 * (m + 2) > grid.ntheta())
    throw ConfigError("random_omega_m_field: mode too high for N_theta");
  FiberField u = field_from_mode(
      grid, random_mode_field(grid, rank, rng, dirichlet, max_deg), m);
  if (m != 0)
    u += field_from_mode(
        grid, random_mode_field(grid, rank, rng, dirichlet, max_deg), -m);
  return u;
}

/// Degree-0 Gaussian bump coefficient (periodic distance along periodic axes),
/// windowed to vanish at the strip boundary.
inline ModeField gaussian_bump_mode0(const SMGrid& grid, int rank, double c1,
                                     double c2, double sigma,
                                     double amplitude = 1.0) {
  ModeField c(grid, rank);
  const SurfaceModel& model = grid.model();
  auto axis_dist = [&](int axis, double x, double ctr) {
    double d = x - ctr;
    if (model.periodic(axis)) {
      double l = model.extent(axis);
      d = std::remainder(d, l);
    }
    return d;
  };
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      double dx = axis_dist(0, grid.x1(i), c1);
      double dy = axis_dist(1, grid.x2(j), c2);
      double v = amplitude * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) *
                 detail::dirichlet_window(model, grid.x2(j));
      for (int comp = 0; comp < rank; ++comp) c.at(i, j, comp) = v;
    }
  return c;
}

}  // namespace holoray

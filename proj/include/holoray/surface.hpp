#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "holoray/core.hpp"

namespace holoray {

// Surface in isothermal coordinates, metric g = e^{2 lambda} (dx1^2 + dx2^2).
// Everything (curvature, measures, geodesic equations) derives from lambda.
class SurfaceModel {
 public:
  using Scalar2 = std::array<double, 2>;

  SurfaceModel(std::string name,
               std::function<double(double, double)> conformal_log,
               std::function<Scalar2(double, double)> grad_log,
               std::function<double(double, double)> laplacian_log,
               Scalar2 lo, Scalar2 hi, std::array<bool, 2> periodic)
      : name_(std::move(name)),
        lambda_(std::move(conformal_log)),
        grad_lambda_(std::move(grad_log)),
        lap_lambda_(std::move(laplacian_log)),
        lo_(lo),
        hi_(hi),
        periodic_(periodic) {}

  const std::string& name() const { return name_; }
  double lambda(double x1, double x2) const { return lambda_(x1, x2); }
  Scalar2 grad_lambda(double x1, double x2) const { return grad_lambda_(x1, x2); }
  double laplacian_lambda(double x1, double x2) const { return lap_lambda_(x1, x2); }

  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double extent(int axis) const { return hi_[axis] - lo_[axis]; }
  bool periodic(int axis) const { return periodic_[axis]; }
  bool closed() const { return periodic_[0] && periodic_[1]; }

  bool in_domain(double x1, double x2) const {
    bool ok1 = periodic_[0] || (x1 >= lo_[0] && x1 <= hi_[0]);
    bool ok2 = periodic_[1] || (x2 >= lo_[1] && x2 <= hi_[1]);
    return ok1 && ok2;
  }

  /// Conformal factor e^{lambda}.
  double conf(double x1, double x2) const { return std::exp(lambda_(x1, x2)); }

  /// Gaussian curvature K = -e^{-2 lambda} (Laplacian of lambda), analytic.
  double gaussian_curvature(double x1, double x2) const {
    if (!in_domain(x1, x2))
      throw DomainError("gaussian_curvature: point outside domain");
    return -std::exp(-2.0 * lambda_(x1, x2)) * lap_lambda_(x1, x2);
  }

  /// Riemannian area of the coordinate rectangle, by tensor Gauss-Legendre
  /// quadrature of e^{2 lambda}.
  double area(int order = 64) const;

  bool is_catenoid() const { return name_ == "catenoid"; }

 private:
  std::string name_;
  std::function<double(double, double)> lambda_;
  std::function<Scalar2(double, double)> grad_lambda_;
  std::function<double(double, double)> lap_lambda_;
  Scalar2 lo_, hi_;
  std::array<bool, 2> periodic_;
};

// Boundary density |<v, nu>_g| times the arc-length element factor e^{lambda}
// (per unit chart coordinate along the boundary). Vanishes exactly at
// tangential angles.
inline double boundary_measure_weight(const SurfaceModel& model, double x1,
                                      double x2, double theta) {
  if (model.closed()) throw DomainError("boundary_measure_weight: closed model");
  // boundary is a non-periodic axis endpoint; both models here bound axis 2
  const double tol = 1e-12;
  bool at_lo = !model.periodic(1) && std::abs(x2 - model.lo(1)) < tol;
  bool at_hi = !model.periodic(1) && std::abs(x2 - model.hi(1)) < tol;
  if (!at_lo && !at_hi)
    throw DomainError("boundary_measure_weight: interior point");
  // unit inner normal is +/- e^{-lambda} d/dx2; <v,nu> = +/- sin(theta)
  return std::abs(std::sin(theta)) * model.conf(x1, x2);
}

/// Signed inner product <v, nu>_g with nu the inner normal, for a boundary point.
inline double inward_component(const SurfaceModel& model, double x2, double theta) {
  const double mid = 0.5 * (model.lo(1) + model.hi(1));
  return (x2 < mid) ? std::sin(theta) : -std::sin(theta);
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));  // Tricomi initial guess
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace detail

inline double SurfaceModel::area(int order) const {
  std::vector<double> gx, gw;
  detail::gauss_legendre(order, gx, gw);
  double c1 = 0.5 * (lo_[0] + hi_[0]), r1 = 0.5 * extent(0);
  double c2 = 0.5 * (lo_[1] + hi_[1]), r2 = 0.5 * extent(1);
  double sum = 0.0;
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j)
      sum += gw[i] * gw[j] *
             std::exp(2.0 * lambda_(c1 + r1 * gx[i], c2 + r2 * gx[j]));
  return sum * r1 * r2;
}

/// Catenoid strip: lambda = log cosh(v) on [0,2pi) x [-1,1], periodic in u.
inline SurfaceModel make_catenoid() {
  return SurfaceModel(
      "catenoid",
      [](double, double v) { return std::log(std::cosh(v)); },
      [](double, double v) -> SurfaceModel::Scalar2 {
        return {0.0, std::tanh(v)};
      },
      [](double, double v) {
        double s = 1.0 / std::cosh(v);
        return s * s;
      },
      {0.0, -1.0}, {kTwoPi, 1.0}, {true, false});
}

/// Flat torus: lambda = 0 on [0,2pi)^2, periodic in both axes.
inline SurfaceModel make_flat_torus() {
  return SurfaceModel(
      "flat-torus", [](double, double) { return 0.0; },
      [](double, double) -> SurfaceModel::Scalar2 { return {0.0, 0.0}; },
      [](double, double) { return 0.0; }, {0.0, 0.0}, {kTwoPi, kTwoPi},
      {true, true});
}

inline SurfaceModel make_model(const std::string& name) {
  if (name == "catenoid") return make_catenoid();
  if (name == "flat-torus") return make_flat_torus();
  throw ConfigError("unknown model: " + name);
}

}  // namespace holoray

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/surface.hpp"

namespace holoray {

namespace detail {

// Window in the bounded coordinate, identically 1 on closed models. Used to
// keep preset data smooth up to the boundary of the catenoid strip.
inline double bounded_window(const SurfaceModel& model, double x2) {
  if (model.periodic(1)) return 1.0;
  double c = 0.5 * (model.lo(1) + model.hi(1));
  double rho = 2.0 * (x2 - c) / model.extent(1);  // in [-1, 1]
  double w = 1.0 - rho * rho;
  return w * w;
}

inline double bounded_window_d(const SurfaceModel& model, double x2) {
  if (model.periodic(1)) return 0.0;
  double c = 0.5 * (model.lo(1) + model.hi(1));
  double s = 2.0 / model.extent(1);
  double rho = s * (x2 - c);
  return 2.0 * (1.0 - rho * rho) * (-2.0 * rho) * s;
}

inline Matrix zero_fn(int n) { return Matrix::Zero(n, n); }

}  // namespace detail

struct PairParams {
  double phi0 = 0.5;    // scalar-higgs amplitude
  double alpha = 0.4;   // u1 amplitudes
  double beta = 0.3;    // su2 amplitude
};

/// Named connection/Higgs presets shared by the CLI and the test suites.
inline ConnectionPair make_pair(const std::string& name, const SurfaceModel& model,
                                const PairParams& params = {}) {
  const complexd iu(0.0, 1.0);
  if (name == "trivial") {
    auto z = [](double, double) { return Matrix::Zero(1, 1); };
    ConnectionPair p(1, z, z, z, "trivial");
    p.set_derivatives(z, z, z, z);
    return p;
  }
  if (name == "scalar-higgs") {
    double phi0 = params.phi0;
    auto z = [](double, double) { return Matrix::Zero(1, 1); };
    auto phi = [phi0, iu](double, double) {
      Matrix m(1, 1);
      m(0, 0) = iu * phi0;
      return m;
    };
    ConnectionPair p(1, z, z, phi, "scalar-higgs");
    p.set_derivatives(z, z, z, z);
    return p;
  }
  if (name == "u1-oscillatory") {
    double a = params.alpha;
    auto a1 = [a, iu](double, double x2) {
      Matrix m(1, 1);
      m(0, 0) = iu * a * std::cos(x2);
      return m;
    };
    auto a2 = [a, iu](double x1, double) {
      Matrix m(1, 1);
      m(0, 0) = iu * a * std::sin(x1);
      return m;
    };
    auto z = [](double, double) { return Matrix::Zero(1, 1); };
    ConnectionPair p(1, a1, a2, z, "u1-oscillatory");
    auto d2a1 = [a, iu](double, double x2) {
      Matrix m(1, 1);
      m(0, 0) = -iu * a * std::sin(x2);
      return m;
    };
    auto d1a2 = [a, iu](double x1, double) {
      Matrix m(1, 1);
      m(0, 0) = iu * a * std::cos(x1);
      return m;
    };
    p.set_derivatives(z, d2a1, d1a2, z);
    return p;
  }
  if (name == "u1-bump") {
    // curvature concentrated where the window is active; nonzero integral of
    // d1 A2 does not arise (periodic in x1), but the local curvature is large
    double a = params.alpha;
    auto w = [&model](double x2) { return detail::bounded_window(model, x2); };
    auto a2 = [a, iu, w](double x1, double x2) {
      Matrix m(1, 1);
      m(0, 0) = iu * a * std::cos(x1) * w(x2);
      return m;
    };
    auto z = [](double, double) { return Matrix::Zero(1, 1); };
    ConnectionPair p(1, z, a2, z, "u1-bump");
    return p;
  }
  if (name == "su2-bump") {
    double b = params.beta;
    auto w = [&model](double x2) { return detail::bounded_window(model, x2); };
    auto bump = [w](double x1, double x2) { return std::cos(x1) * w(x2); };
    auto a1 = [b, iu, bump](double x1, double x2) {
      Matrix m(2, 2);
      m << 0, 1, 1, 0;  // sigma_x
      return (iu * b * bump(x1, x2) * m).eval();
    };
    auto a2 = [b, iu, bump](double x1, double x2) {
      Matrix m(2, 2);
      m << 0, complexd(0, -1), complexd(0, 1), 0;  // sigma_y
      return (iu * b * bump(x1, x2) * m).eval();
    };
    auto phi = [b, iu, bump](double x1, double x2) {
      Matrix m(2, 2);
      m << 1, 0, 0, -1;  // sigma_z
      return (iu * b * bump(x1, x2) * m).eval();
    };
    return ConnectionPair(2, a1, a2, phi, "su2-bump");
  }
  throw ConfigError("unknown pair preset: " + name);
}

/// Unitary gauge maps equal to Id on the boundary of the catenoid strip.
inline GaugeMap make_gauge(const std::string& name, const SurfaceModel& model,
                           double amplitude = 0.7) {
  const complexd iu(0.0, 1.0);
  if (name == "u1-phase") {
    auto s = [&model, amplitude](double x1, double x2) {
      return amplitude * std::cos(x1) * detail::bounded_window(model, x2);
    };
    auto ds1 = [&model, amplitude](double x1, double x2) {
      return -amplitude * std::sin(x1) * detail::bounded_window(model, x2);
    };
    auto ds2 = [&model, amplitude](double x1, double x2) {
      return amplitude * std::cos(x1) * detail::bounded_window_d(model, x2);
    };
    GaugeMap g;
    g.n = 1;
    g.name = "u1-phase";
    g.r = [s, iu](double x1, double x2) {
      Matrix m(1, 1);
      m(0, 0) = std::exp(iu * s(x1, x2));
      return m;
    };
    g.dr1 = [s, ds1, iu](double x1, double x2) {
      Matrix m(1, 1);
      m(0, 0) = iu * ds1(x1, x2) * std::exp(iu * s(x1, x2));
      return m;
    };
    g.dr2 = [s, ds2, iu](double x1, double x2) {
      Matrix m(1, 1);
      m(0, 0) = iu * ds2(x1, x2) * std::exp(iu * s(x1, x2));
      return m;
    };
    return g;
  }
  if (name == "su2-rotation") {
    // r = exp(psi J) with constant J = i sigma_y; J commutes with r
    auto psi = [&model, amplitude](double x1, double x2) {
      return amplitude * std::sin(x1) * detail::bounded_window(model, x2);
    };
    auto dpsi1 = [&model, amplitude](double x1, double x2) {
      return amplitude * std::cos(x1) * detail::bounded_window(model, x2);
    };
    auto dpsi2 = [&model, amplitude](double x1, double x2) {
      return amplitude * std::sin(x1) * detail::bounded_window_d(model, x2);
    };
    auto rot = [](double p) {
      Matrix m(2, 2);
      m << std::cos(p), std::sin(p), -std::sin(p), std::cos(p);
      return m;
    };
    Matrix j(2, 2);
    j << 0, 1, -1, 0;
    GaugeMap g;
    g.n = 2;
    g.name = "su2-rotation";
    g.r = [psi, rot](double x1, double x2) { return rot(psi(x1, x2)); };
    g.dr1 = [psi, dpsi1, rot, j](double x1, double x2) {
      return (dpsi1(x1, x2) * j * rot(psi(x1, x2))).eval();
    };
    g.dr2 = [psi, dpsi2, rot, j](double x1, double x2) {
      return (dpsi2(x1, x2) * j * rot(psi(x1, x2))).eval();
    };
    return g;
  }
  throw ConfigError("unknown gauge preset: " + name);
}

inline std::vector<std::string> model_preset_names() {
  return {"catenoid", "flat-torus"};
}
inline std::vector<std::string> pair_preset_names() {
  return {"scalar-higgs", "su2-bump", "trivial", "u1-bump", "u1-oscillatory"};
}
inline std::vector<std::string> gauge_preset_names() {
  return {"su2-rotation", "u1-phase"};
}

}  // namespace holoray

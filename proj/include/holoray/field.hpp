#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/grid.hpp"

namespace holoray {

// C^n-valued grid function on SM, sampled at the nodes of an SMGrid.
struct FiberField {
  int n = 1;
  int n1 = 0, n2 = 0, ntheta = 0;
  std::vector<complexd> data;  // layout ((i*n2 + j)*ntheta + k)*n + c

  FiberField() = default;
  FiberField(const SMGrid& grid, int rank)
      : n(rank), n1(grid.n1()), n2(grid.n2()), ntheta(grid.ntheta()),
        data(static_cast<size_t>(n1) * n2 * ntheta * rank, complexd(0.0)) {}

  size_t offset(int i, int j, int k) const {
    return ((static_cast<size_t>(i) * n2 + j) * ntheta + k) * n;
  }
  complexd& at(int i, int j, int k, int c) { return data[offset(i, j, k) + c]; }
  const complexd& at(int i, int j, int k, int c) const {
    return data[offset(i, j, k) + c];
  }
  Eigen::Map<Vector> vec(int i, int j, int k) {
    return Eigen::Map<Vector>(data.data() + offset(i, j, k), n);
  }
  Eigen::Map<const Vector> vec(int i, int j, int k) const {
    return Eigen::Map<const Vector>(data.data() + offset(i, j, k), n);
  }

  FiberField& operator+=(const FiberField& o) {
    for (size_t t = 0; t < data.size(); ++t) data[t] += o.data[t];
    return *this;
  }
  FiberField& operator-=(const FiberField& o) {
    for (size_t t = 0; t < data.size(); ++t) data[t] -= o.data[t];
    return *this;
  }
  FiberField& operator*=(complexd s) {
    for (auto& v : data) v *= s;
    return *this;
  }
};

inline FiberField operator+(FiberField a, const FiberField& b) { return a += b; }
inline FiberField operator-(FiberField a, const FiberField& b) { return a -= b; }
inline FiberField operator*(complexd s, FiberField a) { return a *= s; }

// C^n-valued function on the base grid; a single fiberwise Fourier coefficient.
struct ModeField {
  int n = 1;
  int n1 = 0, n2 = 0;
  std::vector<complexd> data;  // layout (i*n2 + j)*n + c

  ModeField() = default;
  ModeField(const SMGrid& grid, int rank)
      : n(rank), n1(grid.n1()), n2(grid.n2()),
        data(static_cast<size_t>(n1) * n2 * rank, complexd(0.0)) {}

  size_t offset(int i, int j) const {
    return (static_cast<size_t>(i) * n2 + j) * n;
  }
  complexd& at(int i, int j, int c) { return data[offset(i, j) + c]; }
  const complexd& at(int i, int j, int c) const { return data[offset(i, j) + c]; }
  Eigen::Map<Vector> vec(int i, int j) {
    return Eigen::Map<Vector>(data.data() + offset(i, j), n);
  }
  Eigen::Map<const Vector> vec(int i, int j) const {
    return Eigen::Map<const Vector>(data.data() + offset(i, j), n);
  }

  ModeField& operator+=(const ModeField& o) {
    for (size_t t = 0; t < data.size(); ++t) data[t] += o.data[t];
    return *this;
  }
  ModeField& operator*=(complexd s) {
    for (auto& v : data) v *= s;
    return *this;
  }
};

/// L^2(SM) inner product with Liouville weights; conjugate-linear in `a`.
inline complexd inner(const SMGrid& grid, const FiberField& a, const FiberField& b) {
  complexd s(0.0);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      double w = grid.liouville_weight(i, j, 0);
      complexd cell(0.0);
      for (int k = 0; k < grid.ntheta(); ++k)
        cell += a.vec(i, j, k).dot(b.vec(i, j, k));
      s += w * cell;
    }
  return s;
}

inline double norm(const SMGrid& grid, const FiberField& a) {
  return std::sqrt(std::real(inner(grid, a, a)));
}

/// L^2(M) inner product of coefficient fields with base dV_g weights.
inline complexd inner_base(const SMGrid& grid, const ModeField& a, const ModeField& b) {
  complexd s(0.0);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j)
      s += grid.base_weight(i, j) * a.vec(i, j).dot(b.vec(i, j));
  return s;
}

inline double norm_base(const SMGrid& grid, const ModeField& a) {
  return std::sqrt(std::real(inner_base(grid, a, a)));
}

/// Exact DFT projection onto the vertical mode e^{im theta}.
inline ModeField project_mode(const SMGrid& grid, const FiberField& u, int m) {
  ModeField c(grid, u.n);
  int nth = grid.ntheta();
  std::vector<complexd> ph(nth);
  for (int k = 0; k < nth; ++k)
    ph[k] = std::polar(1.0 / nth, -m * grid.theta(k));
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j)
      for (int k = 0; k < nth; ++k)
        c.vec(i, j) += ph[k] * u.vec(i, j, k);
  return c;
}

/// Field c(x) e^{im theta} from a coefficient field.
inline FiberField field_from_mode(const SMGrid& grid, const ModeField& c, int m) {
  FiberField u(grid, c.n);
  for (int k = 0; k < grid.ntheta(); ++k) {
    complexd ph = std::polar(1.0, m * grid.theta(k));
    for (int i = 0; i < grid.n1(); ++i)
      for (int j = 0; j < grid.n2(); ++j)
        u.vec(i, j, k) = ph * c.vec(i, j);
  }
  return u;
}

/// All vertical Fourier coefficients, modes m = -N/2 .. N/2-1.
struct FourierRep {
  int min_mode = 0;
  std::vector<ModeField> modes;
  const ModeField& mode(int m) const { return modes[m - min_mode]; }
};

inline FourierRep theta_transform(const SMGrid& grid, const FiberField& u) {
  FourierRep rep;
  rep.min_mode = -grid.ntheta() / 2;
  rep.modes.reserve(grid.ntheta());
  for (int m = rep.min_mode; m < grid.ntheta() / 2; ++m)
    rep.modes.push_back(project_mode(grid, u, m));
  return rep;
}

inline FiberField theta_synthesize(const SMGrid& grid, const FourierRep& rep) {
  FiberField u(grid, rep.modes.front().n);
  for (size_t s = 0; s < rep.modes.size(); ++s) {
    int m = rep.min_mode + static_cast<int>(s);
    u += field_from_mode(grid, rep.modes[s], m);
  }
  return u;
}

/// Liouville-weighted L^2 mass per vertical degree: entries (m, ||u_m||) with
/// the Omega_m pairing of the +/-m modes, m = 0 .. N/2 - 1.
inline std::vector<std::pair<int, double>> degree_profile(const SMGrid& grid,
                                                          const FiberField& u) {
  std::vector<std::pair<int, double>> out;
  for (int m = 0; m < grid.ntheta() / 2; ++m) {
    ModeField cp = project_mode(grid, u, m);
    double mass = kTwoPi * std::real(inner_base(grid, cp, cp));
    if (m > 0) {
      ModeField cm = project_mode(grid, u, -m);
      mass += kTwoPi * std::real(inner_base(grid, cm, cm));
    }
    out.emplace_back(m, std::sqrt(mass));
  }
  return out;
}

/// Largest m with mode mass above `tol` times the field norm; -1 for u = 0.
inline int numerical_degree(const SMGrid& grid, const FiberField& u,
                            double tol = 1e-10) {
  auto prof = degree_profile(grid, u);
  double total = 0.0;
  for (auto& [m, v] : prof) total += v * v;
  total = std::sqrt(total);
  int deg = -1;
  for (auto& [m, v] : prof)
    if (v > tol * (total > 0 ? total : 1.0)) deg = m;
  return deg;
}

}  // namespace holoray

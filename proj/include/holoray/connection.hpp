#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "holoray/core.hpp"
#include "holoray/surface.hpp"

namespace holoray {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

using MatrixFn = std::function<Matrix(double, double)>;

/// Is M skew-Hermitian up to tol?
inline bool is_skew_hermitian(const Matrix& m, double tol = 1e-10) {
  return (m + m.adjoint()).norm() <= tol * (1.0 + m.norm());
}

// Unitary connection 1-form A = A1 dx1 + A2 dx2 and skew-Hermitian Higgs field
// on the trivial bundle M x C^n. Derivatives of the components are analytic
// when supplied and 4th-order central differences otherwise.
class ConnectionPair {
 public:
  ConnectionPair(int n, MatrixFn a1, MatrixFn a2, MatrixFn phi,
                 std::string name = "")
      : n_(n), a1_(std::move(a1)), a2_(std::move(a2)), phi_(std::move(phi)),
        name_(std::move(name)) {}

  int rank() const { return n_; }
  const std::string& name() const { return name_; }

  Matrix A1(double x1, double x2) const { return a1_(x1, x2); }
  Matrix A2(double x1, double x2) const { return a2_(x1, x2); }
  Matrix Phi(double x1, double x2) const { return phi_(x1, x2); }

  /// Optional analytic derivatives dA[j][i] = d A_{j+1} / d x_{i+1}.
  void set_derivatives(MatrixFn d1a1, MatrixFn d2a1, MatrixFn d1a2, MatrixFn d2a2) {
    d_[0][0] = std::move(d1a1);
    d_[0][1] = std::move(d2a1);
    d_[1][0] = std::move(d1a2);
    d_[1][1] = std::move(d2a2);
  }

  /// Finite-difference step used by the derivative fallback.
  void set_fd_step(double h) { fd_step_ = h; }

  /// d A_{comp} / d x_{axis}  (comp, axis in {0,1}).
  Matrix dA(int comp, int axis, double x1, double x2) const {
    if (d_[comp][axis]) return d_[comp][axis](x1, x2);
    const MatrixFn& f = (comp == 0) ? a1_ : a2_;
    double h = fd_step_;
    auto at = [&](double s) {
      return (axis == 0) ? f(x1 + s, x2) : f(x1, x2 + s);
    };
    return (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
  }

  /// Connection 1-form contracted with the unit vector of angle theta,
  /// A(x, v) = A1 v^1 + A2 v^2 with v = e^{-lambda}(cos, sin).
  Matrix eval(const SurfaceModel& model, double x1, double x2, double theta) const {
    double el = std::exp(-model.lambda(x1, x2));
    return el * (std::cos(theta) * a1_(x1, x2) + std::sin(theta) * a2_(x1, x2));
  }

  bool is_trivial_hint() const { return name_ == "trivial"; }

 private:
  int n_;
  MatrixFn a1_, a2_, phi_;
  std::string name_;
  MatrixFn d_[2][2];
  double fd_step_ = 1e-4 * kTwoPi;
};

/// i star f^E = i e^{-2 lambda} (d1 A2 - d2 A1 + [A1, A2]); Hermitian, so it
/// has real eigenvalues.
inline Matrix curvature_star(const ConnectionPair& pair, const SurfaceModel& model,
                             double x1, double x2) {
  Matrix a1 = pair.A1(x1, x2);
  Matrix a2 = pair.A2(x1, x2);
  Matrix f = pair.dA(1, 0, x1, x2) - pair.dA(0, 1, x1, x2) + a1 * a2 - a2 * a1;
  complexd iunit(0.0, 1.0);
  return iunit * std::exp(-2.0 * model.lambda(x1, x2)) * f;
}

/// Sorted (ascending) real eigenvalues of i star f^E at a point.
inline std::vector<double> curvature_star_eigenvalues(const ConnectionPair& pair,
                                                      const SurfaceModel& model,
                                                      double x1, double x2) {
  Matrix m = curvature_star(pair, model, x1, x2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  std::vector<double> ev(m.rows());
  for (int i = 0; i < m.rows(); ++i) ev[i] = es.eigenvalues()[i];
  return ev;
}

// Smooth unitary gauge r: M -> U(n) together with its chart derivatives.
struct GaugeMap {
  int n = 1;
  MatrixFn r;
  MatrixFn dr1, dr2;
  std::string name;
};

/// Gauge action (A, Phi) -> (r^-1 dr + r^-1 A r, r^-1 Phi r). Validates
/// unitarity of r and consistency of dr at a few sample points.
inline ConnectionPair gauge_transform(const ConnectionPair& pair,
                                      const SurfaceModel& model,
                                      const GaugeMap& gauge) {
  if (gauge.n != pair.rank())
    throw ValidationError("gauge_transform: rank mismatch");
  // spot-check r in U(n) and dr ~ finite differences of r
  const int ns = 5;
  double h = 1e-6;
  for (int a = 0; a < ns; ++a)
    for (int b = 0; b < ns; ++b) {
      double x1 = model.lo(0) + (a + 0.37) / ns * model.extent(0);
      double x2 = model.lo(1) + (b + 0.49) / ns * model.extent(1);
      Matrix r = gauge.r(x1, x2);
      if ((r.adjoint() * r - Matrix::Identity(r.rows(), r.cols())).norm() > 1e-8)
        throw ValidationError("gauge_transform: r not unitary at sample point");
      Matrix fd1 = (gauge.r(x1 + h, x2) - gauge.r(x1 - h, x2)) / (2 * h);
      Matrix fd2 = (gauge.r(x1, x2 + h) - gauge.r(x1, x2 - h)) / (2 * h);
      if ((fd1 - gauge.dr1(x1, x2)).norm() > 1e-6 * (1.0 + fd1.norm()) ||
          (fd2 - gauge.dr2(x1, x2)).norm() > 1e-6 * (1.0 + fd2.norm()))
        throw ValidationError("gauge_transform: dr inconsistent with r");
    }
  auto r = gauge.r;
  auto dr1 = gauge.dr1;
  auto dr2 = gauge.dr2;
  auto a1 = [pair, r, dr1](double x1, double x2) {
    Matrix rm = r(x1, x2);
    return (rm.adjoint() * (dr1(x1, x2) + pair.A1(x1, x2) * rm)).eval();
  };
  auto a2 = [pair, r, dr2](double x1, double x2) {
    Matrix rm = r(x1, x2);
    return (rm.adjoint() * (dr2(x1, x2) + pair.A2(x1, x2) * rm)).eval();
  };
  auto phi = [pair, r](double x1, double x2) {
    Matrix rm = r(x1, x2);
    return (rm.adjoint() * pair.Phi(x1, x2) * rm).eval();
  };
  return ConnectionPair(pair.rank(), a1, a2, phi,
                        pair.name() + "+" + gauge.name);
}

}  // namespace holoray

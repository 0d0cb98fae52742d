#pragma once

#include <cmath>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/grid.hpp"
#include "holoray/surface.hpp"

namespace holoray {

namespace detail {

// One-dimensional differentiation along a strided line: spectral (circulant
// cotangent kernel) on periodic axes, 4th-order finite differences with
// one-sided closures on the bounded axis.
class Diff1D {
 public:
  static Diff1D periodic(int npts, double period) {
    Diff1D d;
    d.periodic_ = true;
    d.n_ = npts;
    d.kern_.assign(npts, 0.0);
    double scale = kTwoPi / period;
    for (int q = 1; q < npts; ++q) {
      double sgn = (q % 2 == 0) ? 1.0 : -1.0;
      d.kern_[q] = scale * 0.5 * sgn / std::tan(q * kPi / npts);
    }
    return d;
  }

  static Diff1D bounded(int npts, double h) {
    if (npts < 5)
      throw ConfigError("Diff1D: bounded axis needs at least 5 points");
    Diff1D d;
    d.periodic_ = false;
    d.n_ = npts;
    d.h_ = h;
    return d;
  }

  void apply(const complexd* in, complexd* out, size_t stride) const {
    if (periodic_) {
      for (int j = 0; j < n_; ++j) {
        complexd s(0.0);
        for (int q = 1; q < n_; ++q)
          s += kern_[q] * in[static_cast<size_t>((j - q + n_) % n_) * stride];
        out[static_cast<size_t>(j) * stride] = s;
      }
      return;
    }
    auto v = [&](int j) { return in[static_cast<size_t>(j) * stride]; };
    double r = 1.0 / (12.0 * h_);
    int n = n_;
    out[0] = r * (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4));
    out[stride] = r * (-3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4));
    for (int j = 2; j < n - 2; ++j)
      out[static_cast<size_t>(j) * stride] =
          r * (v(j - 2) - 8.0 * v(j - 1) + 8.0 * v(j + 1) - v(j + 2));
    out[static_cast<size_t>(n - 2) * stride] =
        r * (-v(n - 5) + 6.0 * v(n - 4) - 18.0 * v(n - 3) + 10.0 * v(n - 2) +
             3.0 * v(n - 1));
    out[static_cast<size_t>(n - 1) * stride] =
        r * (3.0 * v(n - 5) - 16.0 * v(n - 4) + 36.0 * v(n - 3) -
             48.0 * v(n - 2) + 25.0 * v(n - 1));
  }

 private:
  bool periodic_ = true;
  int n_ = 0;
  double h_ = 0.0;
  std::vector<double> kern_;
};

inline Diff1D axis_diff(const SMGrid& grid, int axis) {
  const SurfaceModel& model = grid.model();
  if (axis == 2) return Diff1D::periodic(grid.ntheta(), kTwoPi);
  int npts = (axis == 0) ? grid.n1() : grid.n2();
  double d = (axis == 0) ? grid.d1() : grid.d2();
  if (model.periodic(axis)) return Diff1D::periodic(npts, npts * d);
  return Diff1D::bounded(npts, d);
}

}  // namespace detail

/// Partial derivative of a phase-space field along axis 0 (x1), 1 (x2) or
/// 2 (theta).
inline FiberField diff_axis(const SMGrid& grid, const FiberField& u, int axis) {
  FiberField out(grid, u.n);
  detail::Diff1D d = detail::axis_diff(grid, axis);
  int n1 = grid.n1(), n2 = grid.n2(), nth = grid.ntheta(), n = u.n;
  size_t s1 = static_cast<size_t>(n2) * nth * n;
  size_t s2 = static_cast<size_t>(nth) * n;
  size_t sth = n;
  if (axis == 0) {
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < nth; ++k)
        for (int c = 0; c < n; ++c) {
          size_t off = (static_cast<size_t>(j) * nth + k) * n + c;
          d.apply(u.data.data() + off, out.data.data() + off, s1);
        }
  } else if (axis == 1) {
    for (int i = 0; i < n1; ++i)
      for (int k = 0; k < nth; ++k)
        for (int c = 0; c < n; ++c) {
          size_t off = (static_cast<size_t>(i) * n2 * nth + k) * n + c;
          d.apply(u.data.data() + off, out.data.data() + off, s2);
        }
  } else {
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        for (int c = 0; c < n; ++c) {
          size_t off = (static_cast<size_t>(i) * n2 + j) * nth * n + c;
          d.apply(u.data.data() + off, out.data.data() + off, sth);
        }
  }
  return out;
}

/// Partial derivative of a base coefficient field along axis 0 or 1.
inline ModeField diff_base(const SMGrid& grid, const ModeField& c, int axis) {
  ModeField out(grid, c.n);
  detail::Diff1D d = detail::axis_diff(grid, axis);
  int n1 = grid.n1(), n2 = grid.n2(), n = c.n;
  if (axis == 0) {
    size_t stride = static_cast<size_t>(n2) * n;
    for (int j = 0; j < n2; ++j)
      for (int cc = 0; cc < n; ++cc) {
        size_t off = static_cast<size_t>(j) * n + cc;
        d.apply(c.data.data() + off, out.data.data() + off, stride);
      }
  } else {
    size_t stride = n;
    for (int i = 0; i < n1; ++i)
      for (int cc = 0; cc < n; ++cc) {
        size_t off = static_cast<size_t>(i) * n2 * n + cc;
        d.apply(c.data.data() + off, out.data.data() + off, stride);
      }
  }
  return out;
}

/// Vertical derivative V = d/dtheta (spectral).
inline FiberField apply_V(const SMGrid& grid, const FiberField& u) {
  return diff_axis(grid, u, 2);
}

namespace detail {

// X and X_perp share all three partial derivatives; compute both cheaply.
inline void frame_apply(const SMGrid& grid, const FiberField& u,
                        FiberField* xu, FiberField* xpu) {
  const SurfaceModel& model = grid.model();
  FiberField d1 = diff_axis(grid, u, 0);
  FiberField d2 = diff_axis(grid, u, 1);
  FiberField dth = diff_axis(grid, u, 2);
  int n1 = grid.n1(), n2 = grid.n2(), nth = grid.ntheta();
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      double el = std::exp(-model.lambda(grid.x1(i), grid.x2(j)));
      auto g = model.grad_lambda(grid.x1(i), grid.x2(j));
      for (int k = 0; k < nth; ++k) {
        double ct = std::cos(grid.theta(k)), st = std::sin(grid.theta(k));
        for (size_t t = u.offset(i, j, k); t < u.offset(i, j, k) + u.n; ++t) {
          if (xu)
            xu->data[t] = el * (ct * d1.data[t] + st * d2.data[t] +
                                (-g[0] * st + g[1] * ct) * dth.data[t]);
          if (xpu)
            xpu->data[t] = el * (st * d1.data[t] - ct * d2.data[t] +
                                 (g[0] * ct + g[1] * st) * dth.data[t]);
        }
      }
    }
}

}  // namespace detail

/// Geodesic vector field X in the frame {X, X_perp, V}.
inline FiberField apply_X(const SMGrid& grid, const FiberField& u) {
  FiberField out(grid, u.n);
  detail::frame_apply(grid, u, &out, nullptr);
  return out;
}

/// Horizontal-normal field X_perp = [X, V].
inline FiberField apply_Xperp(const SMGrid& grid, const FiberField& u) {
  FiberField out(grid, u.n);
  detail::frame_apply(grid, u, nullptr, &out);
  return out;
}

enum class TwistOp { X, Xperp, V };

/// Connection-twisted frame operators on C^n-valued fields:
/// TX = X + A(x,v), TXperp = X_perp - (VA), TV = V.
inline FiberField apply_twisted(const SMGrid& grid, const ConnectionPair& pair,
                                const FiberField& u, TwistOp which) {
  if (u.n != pair.rank())
    throw ValidationError("apply_twisted: field/pair rank mismatch");
  if (which == TwistOp::V) return apply_V(grid, u);

  FiberField out(grid, u.n);
  detail::frame_apply(grid, u, which == TwistOp::X ? &out : nullptr,
                      which == TwistOp::Xperp ? &out : nullptr);
  const SurfaceModel& model = grid.model();
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      double x1 = grid.x1(i), x2 = grid.x2(j);
      double el = std::exp(-model.lambda(x1, x2));
      Matrix a1 = pair.A1(x1, x2), a2 = pair.A2(x1, x2);
      for (int k = 0; k < grid.ntheta(); ++k) {
        double ct = std::cos(grid.theta(k)), st = std::sin(grid.theta(k));
        // A(x,v) = e^{-l}(ct A1 + st A2); VA = e^{-l}(-st A1 + ct A2)
        Matrix m = (which == TwistOp::X) ? (el * (ct * a1 + st * a2)).eval()
                                         : (-el * (-st * a1 + ct * a2)).eval();
        out.vec(i, j, k) += m * u.vec(i, j, k);
      }
    }
  return out;
}

/// Pointwise Higgs-field action u -> Phi u.
inline FiberField apply_higgs(const SMGrid& grid, const ConnectionPair& pair,
                              const FiberField& u) {
  if (u.n != pair.rank())
    throw ValidationError("apply_higgs: field/pair rank mismatch");
  FiberField out(grid, u.n);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      Matrix phi = pair.Phi(grid.x1(i), grid.x2(j));
      for (int k = 0; k < grid.ntheta(); ++k)
        out.vec(i, j, k) = phi * u.vec(i, j, k);
    }
  return out;
}

/// Raising/lowering operator on a single vertical-mode coefficient field:
/// eta_sign (and mu_sign = eta_sign + A_sign when `pair` is given) maps the
/// degree-m coefficient onto the degree-(m+sign) coefficient. Closed form in
/// isothermal coordinates:
///   eta_s c = (1/2) e^{-lambda} [ (d1 - s i d2) c - s m ((d1 - s i d2) lambda) c ]
///   A_s c   = (1/2) e^{-lambda} (A1 - s i A2) c
inline ModeField eta_mu_mode(const SMGrid& grid, const ModeField& c, int m,
                             int sign, const ConnectionPair* pair = nullptr) {
  if (sign != 1 && sign != -1) throw ConfigError("eta_mu_mode: sign must be +-1");
  if (pair && c.n != pair->rank())
    throw ValidationError("eta_mu_mode: field/pair rank mismatch");
  const SurfaceModel& model = grid.model();
  const complexd iu(0.0, 1.0);
  double s = static_cast<double>(sign);
  ModeField d1 = diff_base(grid, c, 0);
  ModeField d2 = diff_base(grid, c, 1);
  ModeField out(grid, c.n);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      double x1 = grid.x1(i), x2 = grid.x2(j);
      double el = std::exp(-model.lambda(x1, x2));
      auto g = model.grad_lambda(x1, x2);
      complexd dlam = g[0] - s * iu * g[1];  // (d1 - s i d2) lambda
      Vector v = 0.5 * el *
                 (d1.vec(i, j) - s * iu * d2.vec(i, j).eval() -
                  (s * m) * dlam * c.vec(i, j))
                     .eval();
      if (pair) {
        Matrix a = pair->A1(x1, x2) - s * iu * pair->A2(x1, x2);
        v += 0.5 * el * (a * c.vec(i, j));
      }
      out.vec(i, j) = v;
    }
  return out;
}

/// Grid-route eta/mu on a full phase-space field. The input must be a pure
/// degree-m field; the output is the pure degree-(m+sign) result of
/// (1/2)(X + sign * i X_perp) (twisted when `pair` is given). Validates input
/// purity and output mode leakage.
inline FiberField eta_mu(const SMGrid& grid, const FiberField& u, int m,
                         int sign, const ConnectionPair* pair = nullptr,
                         double purity_tol = 1e-8) {
  if (sign != 1 && sign != -1) throw ConfigError("eta_mu: sign must be +-1");
  double nu = norm(grid, u);
  ModeField cm = project_mode(grid, u, m);
  FiberField pure = field_from_mode(grid, cm, m);
  if (nu > 0 && norm(grid, u - pure) > purity_tol * nu)
    throw ValidationError("eta_mu: input has modes other than the stated one");

  const complexd iu(0.0, 1.0);
  FiberField xu = pair ? apply_twisted(grid, *pair, pure, TwistOp::X)
                       : apply_X(grid, pure);
  FiberField xpu = pair ? apply_twisted(grid, *pair, pure, TwistOp::Xperp)
                        : apply_Xperp(grid, pure);
  FiberField w = complexd(0.5) * xu + (0.5 * static_cast<double>(sign) * iu) * xpu;
  ModeField cw = project_mode(grid, w, m + sign);
  FiberField res = field_from_mode(grid, cw, m + sign);
  double nw = norm(grid, w);
  if (nw > 0 && norm(grid, w - res) > purity_tol * std::max(1.0, nu))
    throw ValidationError("eta_mu: unexpected leakage outside the target mode");
  return res;
}

}  // namespace holoray

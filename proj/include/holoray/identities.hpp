#pragma once

#include <cmath>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/grid.hpp"
#include "holoray/operators.hpp"

namespace holoray {

namespace detail {

inline double sq(double x) { return x * x; }

inline FiberField mul_curvature_K(const SMGrid& grid, const FiberField& u) {
  FiberField out = u;
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      double k = grid.model().gaussian_curvature(grid.x1(i), grid.x2(j));
      for (int kk = 0; kk < grid.ntheta(); ++kk)
        out.vec(i, j, kk) *= k;
    }
  return out;
}

// star f^E u = -i (i star f^E) u, applied pointwise.
inline FiberField mul_curvature_star(const SMGrid& grid, const ConnectionPair& pair,
                                     const FiberField& u) {
  const complexd iu(0.0, 1.0);
  FiberField out(grid, u.n);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      Matrix s = curvature_star(pair, grid.model(), grid.x1(i), grid.x2(j));
      for (int kk = 0; kk < grid.ntheta(); ++kk)
        out.vec(i, j, kk) = -iu * (s * u.vec(i, j, kk));
    }
  return out;
}

inline void require_boundary_vanishing(const SMGrid& grid, const FiberField& u,
                                       double tol, const char* where) {
  if (grid.model().closed()) return;
  double sup = 0.0;
  for (int j : {0, grid.n2() - 1})
    for (int i = 0; i < grid.n1(); ++i)
      for (int k = 0; k < grid.ntheta(); ++k)
        for (int c = 0; c < u.n; ++c)
          sup = std::max(sup, std::abs(u.at(i, j, k, c)));
  if (sup >= tol)
    throw ValidationError(std::string(where) + ": field does not vanish on the boundary");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pestov energy identity (2D, connection-twisted):
//   ||V TX u||^2 = ||TX V u||^2 - (K V u, V u) - (star f^E u, V u) + ||TX u||^2
// for u vanishing on the boundary of SM.
// ---------------------------------------------------------------------------

struct PestovRecord {
  double lhs = 0.0;        // ||V TX u||^2
  double term_txv = 0.0;   // ||TX V u||^2
  complexd term_curv;      // (K V u, V u)
  complexd term_fe;        // (star f^E u, V u)
  double term_tx = 0.0;    // ||TX u||^2
  complexd residual;       // lhs - (term_txv - term_curv - term_fe + term_tx)
  double relative = 0.0;
};

inline PestovRecord pestov_residual(const SMGrid& grid, const ConnectionPair& pair,
                                    const FiberField& u,
                                    double boundary_tol = 1e-10) {
  detail::require_boundary_vanishing(grid, u, boundary_tol, "pestov_residual");
  PestovRecord rec;
  FiberField vu = apply_V(grid, u);
  FiberField txu = apply_twisted(grid, pair, u, TwistOp::X);
  FiberField vtxu = apply_V(grid, txu);
  FiberField txvu = apply_twisted(grid, pair, vu, TwistOp::X);

  rec.lhs = detail::sq(norm(grid, vtxu));
  rec.term_txv = detail::sq(norm(grid, txvu));
  rec.term_curv = inner(grid, detail::mul_curvature_K(grid, vu), vu);
  rec.term_fe = inner(grid, detail::mul_curvature_star(grid, pair, u), vu);
  rec.term_tx = detail::sq(norm(grid, txu));
  rec.residual = complexd(rec.lhs) -
                 (complexd(rec.term_txv) - rec.term_curv - rec.term_fe +
                  complexd(rec.term_tx));
  double scale = std::max({rec.lhs, rec.term_txv, rec.term_tx, 1e-300});
  rec.relative = std::abs(rec.residual) / scale;
  return rec;
}

// ---------------------------------------------------------------------------
// Degree-wise (Omega_m) Pestov identity with d = 2 constants:
//   (2m-1)||TXminus u||^2 + ||TXperp u||^2 - (K V u, V u) - (star f^E u, V u)
//     = (2m+1)||TXplus u||^2
// with TXplus / TXminus the degree raising / lowering parts of TX acting on
// the pure Omega_m field u.
// ---------------------------------------------------------------------------

struct OmegaPestovRecord {
  int m = 0;
  double term_xminus = 0.0;
  double term_xperp = 0.0;
  complexd term_curv;
  complexd term_fe;
  double term_xplus = 0.0;
  complexd residual;  // lhs - rhs
  double relative = 0.0;
};

/// muplus (sign=+1) / muminus (sign=-1) = (TX + sign * i TXperp)/2 on any field.
inline FiberField apply_xpm(const SMGrid& grid, const ConnectionPair& pair,
                            const FiberField& u, int sign) {
  const complexd iu(0.0, 1.0);
  FiberField xu = apply_twisted(grid, pair, u, TwistOp::X);
  FiberField xpu = apply_twisted(grid, pair, u, TwistOp::Xperp);
  return complexd(0.5) * xu + (0.5 * static_cast<double>(sign) * iu) * xpu;
}

/// Degree raising (sign=+1) / lowering (sign=-1) part of TX on Omega_m:
/// the Omega_{m+sign} component of TX u, i.e. muplus on the +m mode and
/// muminus on the -m mode for raising (and vice versa for lowering).
inline FiberField apply_omega_pm(const SMGrid& grid, const ConnectionPair& pair,
                                 const FiberField& u, int m, int sign) {
  if (sign != 1 && sign != -1)
    throw ConfigError("apply_omega_pm: sign must be +-1");
  FiberField xu = apply_twisted(grid, pair, u, TwistOp::X);
  int mt = m + sign;
  FiberField out = field_from_mode(grid, project_mode(grid, xu, mt), mt);
  if (mt != 0)
    out += field_from_mode(grid, project_mode(grid, xu, -mt), -mt);
  return out;
}

inline OmegaPestovRecord pestov_residual_omega_m(const SMGrid& grid,
                                                 const ConnectionPair& pair,
                                                 const FiberField& u, int m,
                                                 double purity_tol = 1e-8,
                                                 double boundary_tol = 1e-10) {
  if (m < 0) throw ConfigError("pestov_residual_omega_m: m must be >= 0");
  detail::require_boundary_vanishing(grid, u, boundary_tol,
                                     "pestov_residual_omega_m");
  // purity: only the +-m modes may carry mass
  FiberField pure = field_from_mode(grid, project_mode(grid, u, m), m);
  if (m != 0)
    pure += field_from_mode(grid, project_mode(grid, u, -m), -m);
  double nu = norm(grid, u);
  if (nu > 0 && norm(grid, u - pure) > purity_tol * nu)
    throw ValidationError("pestov_residual_omega_m: field is not pure Omega_m");

  OmegaPestovRecord rec;
  rec.m = m;
  FiberField vu = apply_V(grid, u);
  rec.term_xminus = detail::sq(norm(grid, apply_omega_pm(grid, pair, u, m, -1)));
  rec.term_xperp =
      detail::sq(norm(grid, apply_twisted(grid, pair, u, TwistOp::Xperp)));
  rec.term_curv = inner(grid, detail::mul_curvature_K(grid, vu), vu);
  rec.term_fe = inner(grid, detail::mul_curvature_star(grid, pair, u), vu);
  rec.term_xplus = detail::sq(norm(grid, apply_omega_pm(grid, pair, u, m, +1)));
  complexd lhs = complexd((2.0 * m - 1.0) * rec.term_xminus + rec.term_xperp) -
                 rec.term_curv - rec.term_fe;
  complexd rhs = complexd((2.0 * m + 1.0) * rec.term_xplus);
  rec.residual = lhs - rhs;
  double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  rec.relative = std::abs(rec.residual) / scale;
  return rec;
}

// ---------------------------------------------------------------------------
// Beurling contraction: ||TXminus u||^2 + c_m ||u||^2 <= d_m ||TXplus u||^2
// for u in Omega_m on a surface with curvature <= -kappa, provided
// m^2 >= 4 ||F^E||_inf^2 / kappa^2.
// ---------------------------------------------------------------------------

struct BeurlingRecord {
  int m = 0;
  double c_m = 0.0, d_m = 0.0;
  double lhs = 0.0;   // ||TXminus u||^2 + c_m ||u||^2
  double rhs = 0.0;   // d_m ||TXplus u||^2
  double margin = 0.0;  // rhs - lhs
  double fe_inf = 0.0;  // sup operator norm of i star f^E
  double kappa = 0.0;
  bool curvature_ok = false;   // K <= -kappa on the grid
  bool hypothesis_ok = false;  // m^2 >= 4 fe_inf^2 / kappa^2
};

/// Sup over base nodes of the spectral norm of i star f^E.
inline double curvature_star_sup_norm(const SMGrid& grid,
                                      const ConnectionPair& pair) {
  double sup = 0.0;
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      auto ev = curvature_star_eigenvalues(pair, grid.model(), grid.x1(i),
                                           grid.x2(j));
      for (double l : ev) sup = std::max(sup, std::abs(l));
    }
  return sup;
}

inline BeurlingRecord beurling_check(const SMGrid& grid,
                                     const ConnectionPair& pair,
                                     const FiberField& u, int m, double kappa) {
  if (m < 1) throw ConfigError("beurling_check: m must be >= 1");
  BeurlingRecord rec;
  rec.m = m;
  rec.kappa = kappa;
  rec.c_m = kappa * m / 4.0;
  rec.d_m = (m >= 2) ? 1.0 : 2.0;  // d = 2 constants

  double kmax = -1e300;
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j)
      kmax = std::max(kmax, grid.model().gaussian_curvature(grid.x1(i),
                                                            grid.x2(j)));
  rec.curvature_ok = kmax <= -kappa + 1e-12;
  rec.fe_inf = curvature_star_sup_norm(grid, pair);
  rec.hypothesis_ok =
      rec.curvature_ok &&
      static_cast<double>(m) * m >= 4.0 * rec.fe_inf * rec.fe_inf / (kappa * kappa);

  double xm = norm(grid, apply_omega_pm(grid, pair, u, m, -1));
  double xp = norm(grid, apply_omega_pm(grid, pair, u, m, +1));
  double nu = norm(grid, u);
  rec.lhs = xm * xm + rec.c_m * nu * nu;
  rec.rhs = rec.d_m * xp * xp;
  rec.margin = rec.rhs - rec.lhs;
  return rec;
}

// ---------------------------------------------------------------------------
// Structure equations and commutators.
// ---------------------------------------------------------------------------

struct StructureResiduals {
  double xv = 0.0;      // ||([X,V] - Xperp) u|| / ||u||
  double xxperp = 0.0;  // ||([X,Xperp] + K V) u|| / ||u||
};

inline StructureResiduals structure_residuals(const SMGrid& grid,
                                              const FiberField& u) {
  StructureResiduals r;
  if (norm(grid, u) == 0.0) return r;
  FiberField xvu = apply_X(grid, apply_V(grid, u));
  FiberField vxu = apply_V(grid, apply_X(grid, u));
  FiberField xpu = apply_Xperp(grid, u);
  double s1 = std::max({norm(grid, xvu), norm(grid, vxu), norm(grid, xpu)});
  r.xv = norm(grid, xvu - vxu - xpu) / s1;
  FiberField xxpu = apply_X(grid, xpu);
  FiberField xpxu = apply_Xperp(grid, apply_X(grid, u));
  FiberField kvu = detail::mul_curvature_K(grid, apply_V(grid, u));
  double s2 = std::max({norm(grid, xxpu), norm(grid, xpxu), norm(grid, kvu)});
  r.xxperp = norm(grid, xxpu - xpxu + kvu) / s2;
  return r;
}

/// Relative residual of the twisted frame relation [TX, V] = TXperp.
inline double twisted_commutator_residual(const SMGrid& grid,
                                          const ConnectionPair& pair,
                                          const FiberField& u) {
  if (norm(grid, u) == 0.0) return 0.0;
  FiberField a = apply_twisted(grid, pair, apply_V(grid, u), TwistOp::X);
  FiberField b = apply_V(grid, apply_twisted(grid, pair, u, TwistOp::X));
  FiberField c = apply_twisted(grid, pair, u, TwistOp::Xperp);
  double s = std::max({norm(grid, a), norm(grid, b), norm(grid, c)});
  return norm(grid, a - b - c) / s;
}

/// Relative residual of [muplus, muminus] u = (i/2)(K V u + star f^E u).
inline double mu_commutator_residual(const SMGrid& grid,
                                     const ConnectionPair& pair,
                                     const FiberField& u) {
  const complexd iu(0.0, 1.0);
  FiberField lhs = apply_xpm(grid, pair, apply_xpm(grid, pair, u, -1), +1) -
                   apply_xpm(grid, pair, apply_xpm(grid, pair, u, +1), -1);
  FiberField rhs = (0.5 * iu) * (detail::mul_curvature_K(grid, apply_V(grid, u)) +
                                 detail::mul_curvature_star(grid, pair, u));
  double scale = std::max({norm(grid, lhs), norm(grid, rhs), norm(grid, u)});
  if (scale == 0.0) return 0.0;
  return norm(grid, lhs - rhs) / scale;
}

/// Adjointness defect |<muplus u, w> + <u, muminus w>| / (||u|| ||w||) for
/// compactly supported u, w.
inline double mu_adjointness_residual(const SMGrid& grid,
                                      const ConnectionPair& pair,
                                      const FiberField& u, const FiberField& w) {
  complexd a = inner(grid, apply_xpm(grid, pair, u, +1), w);
  complexd b = inner(grid, u, apply_xpm(grid, pair, w, -1));
  double scale = std::max(norm(grid, u) * norm(grid, w), 1e-300);
  return std::abs(a + b) / scale;
}

}  // namespace holoray

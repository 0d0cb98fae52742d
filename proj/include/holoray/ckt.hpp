#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/grid.hpp"
#include "holoray/operators.hpp"
#include "holoray/parallel.hpp"

namespace holoray {

namespace detail {

// Dense matrix of the map c -> mu_sign c on degree-m coefficient fields,
// normalized by sqrt base weights on both sides so that singular values are
// taken with respect to the weighted L^2(M) norms. Dirichlet eliminates the
// columns of boundary base nodes.
inline Matrix assemble_mu_block(const SMGrid& grid, const ConnectionPair& pair,
                                int m, int sign, bool dirichlet) {
  int n = pair.rank();
  int n1 = grid.n1(), n2 = grid.n2();
  size_t nbase = grid.num_base_nodes();
  std::vector<size_t> cols;  // input dofs kept
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      if (dirichlet && grid.is_base_boundary(j)) continue;
      for (int c = 0; c < n; ++c)
        cols.push_back(grid.base_index(i, j) * n + c);
    }
  Matrix mat(nbase * n, cols.size());
  parallel_for(cols.size(), [&](size_t col) {
    ModeField e(grid, n);
    e.data[cols[col]] = 1.0;
    ModeField out = eta_mu_mode(grid, e, m, sign, &pair);
    for (size_t r = 0; r < nbase * static_cast<size_t>(n); ++r)
      mat(r, col) = out.data[r];
  });
  // symmetric sqrt-weight scaling
  for (size_t r = 0; r < nbase * static_cast<size_t>(n); ++r) {
    double w = std::sqrt(grid.base_weight(static_cast<int>(r / n / n2),
                                          static_cast<int>((r / n) % n2)));
    mat.row(r) *= w;
  }
  for (size_t col = 0; col < cols.size(); ++col) {
    size_t r = cols[col];
    double w = std::sqrt(grid.base_weight(static_cast<int>(r / n / n2),
                                          static_cast<int>((r / n) % n2)));
    mat.col(col) /= w;
  }
  return mat;
}

inline std::vector<double> smallest_singular_values(const Matrix& mat, int k) {
  Matrix normal = mat.adjoint() * mat;
  Eigen::SelfAdjointEigenSolver<Matrix> es(normal);
  std::vector<double> sv;
  int total = static_cast<int>(es.eigenvalues().size());
  for (int q = 0; q < std::min(k, total); ++q)
    sv.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[q])));
  return sv;
}

}  // namespace detail

/// Smallest k singular values of the discretized raising operator on Omega_m,
/// i.e. of (u_m, u_{-m}) -> mu_plus u_m + mu_minus u_{-m} acting block-wise on
/// base coefficient grids. Dirichlet removes boundary-node unknowns.
inline std::vector<double> ckt_kernel_scan(const SMGrid& grid,
                                           const ConnectionPair& pair, int m,
                                           bool boundary_dirichlet, int k = 4) {
  if (m < 1) throw ConfigError("ckt_kernel_scan: m must be >= 1");
  if (grid.ntheta() < 2 * (m + 2))
    throw ConfigError("ckt_kernel_scan: N_theta too small to resolve the mode");
  if (boundary_dirichlet && grid.model().closed())
    throw ConfigError("ckt_kernel_scan: Dirichlet requires a boundary model");
  Matrix bp = detail::assemble_mu_block(grid, pair, m, +1, boundary_dirichlet);
  Matrix bm = detail::assemble_mu_block(grid, pair, -m, -1, boundary_dirichlet);
  std::vector<double> sv = detail::smallest_singular_values(bp, k);
  std::vector<double> sv2 = detail::smallest_singular_values(bm, k);
  sv.insert(sv.end(), sv2.begin(), sv2.end());
  std::sort(sv.begin(), sv.end());
  sv.resize(std::min<size_t>(sv.size(), k));
  return sv;
}

/// Eigenvalue-integral conditions for triviality of the twisted-CKT kernel on
/// a closed surface; verdicts for the lambda_1 condition (raising kernel on
/// Lambda_m), the lambda_n condition (lowering kernel on Lambda_{-m}) and the
/// combined Omega_m condition.
struct CKTConditionRecord {
  int m = 0;
  double lambda1_integral = 0.0;
  double lambdan_integral = 0.0;
  double threshold = 0.0;  // 2 pi m chi(M)
  bool raising_trivial = false;   // lambda1 integral > threshold
  bool lowering_trivial = false;  // lambdan integral < -threshold
  bool omega_m_trivial = false;   // both, m >= 1
};

inline CKTConditionRecord ckt_condition_check(const SMGrid& grid,
                                              const ConnectionPair& pair,
                                              int m) {
  const SurfaceModel& model = grid.model();
  if (!model.closed())
    throw UnsupportedModelError("ckt_condition_check: closed models only");
  CKTConditionRecord rec;
  rec.m = m;
  // closed models here are tori: chi = 0
  rec.threshold = 0.0;
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j) {
      auto ev = curvature_star_eigenvalues(pair, model, grid.x1(i), grid.x2(j));
      double w = grid.base_weight(i, j);
      rec.lambda1_integral += w * ev.front();
      rec.lambdan_integral += w * ev.back();
    }
  rec.raising_trivial = rec.lambda1_integral > rec.threshold;
  rec.lowering_trivial = rec.lambdan_integral < -rec.threshold;
  rec.omega_m_trivial = m >= 1 && rec.raising_trivial && rec.lowering_trivial;
  return rec;
}

}  // namespace holoray

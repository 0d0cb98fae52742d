#pragma once

#include <cmath>
#include <vector>

#include "holoray/core.hpp"
#include "holoray/surface.hpp"

namespace holoray {

/// Node index triple on the sphere-bundle grid.
struct NodeIndex {
  int i, j, k;
};

// Uniform node-centered grid on SM. Periodic axes omit the duplicate endpoint;
// the bounded axis includes both endpoints (endpoint nodes carry half weight in
// the Liouville quadrature). theta is always periodic.
class SMGrid {
 public:
  SMGrid(const SurfaceModel& model, int n1, int n2, int ntheta)
      : model_(&model), n1_(n1), n2_(n2), ntheta_(ntheta) {
    if (n1 < 4 || n2 < 4 || ntheta < 4)
      throw ConfigError("SMGrid: counts must be >= 4");
    if (ntheta % 2 != 0) throw ConfigError("SMGrid: N_theta must be even");

    d1_ = model.periodic(0) ? model.extent(0) / n1 : model.extent(0) / (n1 - 1);
    d2_ = model.periodic(1) ? model.extent(1) / n2 : model.extent(1) / (n2 - 1);
    dth_ = kTwoPi / ntheta;

    x1_.resize(n1);
    for (int i = 0; i < n1; ++i) x1_[i] = model.lo(0) + i * d1_;
    x2_.resize(n2);
    for (int j = 0; j < n2; ++j) x2_[j] = model.lo(1) + j * d2_;
    th_.resize(ntheta);
    for (int k = 0; k < ntheta; ++k) th_[k] = k * dth_;

    base_weight_.resize(static_cast<size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        double w = std::exp(2.0 * model.lambda(x1_[i], x2_[j])) * d1_ * d2_;
        if (!model.periodic(1) && (j == 0 || j == n2 - 1)) w *= 0.5;
        base_weight_[base_index(i, j)] = w;
      }

    if (!model.closed()) build_boundary_sets();
  }

  const SurfaceModel& model() const { return *model_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int ntheta() const { return ntheta_; }
  double d1() const { return d1_; }
  double d2() const { return d2_; }
  double dtheta() const { return dth_; }
  double x1(int i) const { return x1_[i]; }
  double x2(int j) const { return x2_[j]; }
  double theta(int k) const { return th_[k]; }

  size_t base_index(int i, int j) const {
    return static_cast<size_t>(i) * n2_ + j;
  }
  size_t node_index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * n2_ + j) * ntheta_ + k;
  }
  size_t num_base_nodes() const { return static_cast<size_t>(n1_) * n2_; }
  size_t num_nodes() const { return num_base_nodes() * ntheta_; }

  /// dV_g weight of a base node (chart cell times e^{2 lambda}).
  double base_weight(int i, int j) const { return base_weight_[base_index(i, j)]; }

  /// Liouville weight dV_g dtheta of a phase node.
  double liouville_weight(int i, int j, int k) const {
    (void)k;
    return base_weight_[base_index(i, j)] * dth_;
  }

  double total_liouville_weight() const {
    double s = 0.0;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) s += base_weight_[base_index(i, j)];
    return s * kTwoPi;
  }

  /// Inflow boundary nodes (geodesics entering M), tangential margin excluded.
  const std::vector<NodeIndex>& boundary_minus() const { return bd_minus_; }
  /// Outflow boundary nodes.
  const std::vector<NodeIndex>& boundary_plus() const { return bd_plus_; }

  bool is_base_boundary(int j) const {
    return !model_->periodic(1) && (j == 0 || j == n2_ - 1);
  }

 private:
  void build_boundary_sets() {
    // exclude angles within one theta cell of tangential, where dmu_nu -> 0
    for (int j : {0, n2_ - 1}) {
      for (int i = 0; i < n1_; ++i)
        for (int k = 0; k < ntheta_; ++k) {
          double inward = inward_component(*model_, x2_[j], th_[k]);
          double margin = std::sin(dth_) - 1e-14;
          if (std::abs(inward) <= margin) continue;  // tangential band
          if (inward > 0.0)
            bd_minus_.push_back({i, j, k});
          else
            bd_plus_.push_back({i, j, k});
        }
    }
  }

  const SurfaceModel* model_;
  int n1_, n2_, ntheta_;
  double d1_, d2_, dth_;
  std::vector<double> x1_, x2_, th_;
  std::vector<double> base_weight_;
  std::vector<NodeIndex> bd_minus_, bd_plus_;
};

}  // namespace holoray

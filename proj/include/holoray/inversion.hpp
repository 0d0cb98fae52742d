#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "holoray/cocycle.hpp"
#include "holoray/connection.hpp"
#include "holoray/core.hpp"
#include "holoray/field.hpp"
#include "holoray/flow.hpp"
#include "holoray/grid.hpp"
#include "holoray/parallel.hpp"
#include "holoray/testfields.hpp"

namespace holoray {

// Finite-degree unknown: stack of vertical-mode coefficients m = -deg .. +deg.
struct CoefficientField {
  int n = 1;
  int degree = 0;
  std::vector<ModeField> modes;

  CoefficientField() = default;
  CoefficientField(const SMGrid& grid, int rank, int deg)
      : n(rank), degree(deg) {
    for (int m = -deg; m <= deg; ++m) modes.emplace_back(grid, rank);
  }
  ModeField& mode(int m) { return modes[m + degree]; }
  const ModeField& mode(int m) const { return modes[m + degree]; }

  CoefficientField& operator+=(const CoefficientField& o) {
    for (size_t s = 0; s < modes.size(); ++s) modes[s] += o.modes[s];
    return *this;
  }
  CoefficientField& operator*=(complexd a) {
    for (auto& m : modes) m *= a;
    return *this;
  }
};

inline FiberField coefficient_to_field(const SMGrid& grid,
                                       const CoefficientField& f) {
  FiberField u(grid, f.n);
  for (int m = -f.degree; m <= f.degree; ++m)
    u += field_from_mode(grid, f.mode(m), m);
  return u;
}

inline CoefficientField field_to_coefficient(const SMGrid& grid,
                                             const FiberField& u, int degree) {
  CoefficientField f(grid, u.n, degree);
  for (int m = -degree; m <= degree; ++m)
    f.mode(m) = project_mode(grid, u, m);
  return f;
}

/// L^2(SM) inner product of finite-degree fields via their coefficients.
inline complexd inner_coeff(const SMGrid& grid, const CoefficientField& a,
                            const CoefficientField& b) {
  complexd s(0.0);
  for (size_t q = 0; q < a.modes.size(); ++q)
    s += inner_base(grid, a.modes[q], b.modes[q]);
  return kTwoPi * s;
}

inline double norm_coeff(const SMGrid& grid, const CoefficientField& a) {
  return std::sqrt(std::real(inner_coeff(grid, a, a)));
}

// Inflow-boundary sample set of a strip model: nu x ntheta angles per side,
// tangential band excluded, with boundary-measure quadrature weights.
struct BoundaryEntry {
  double x1 = 0.0, x2 = 0.0, theta = 0.0;
  double weight = 0.0;
};

struct BoundaryGrid {
  int nu = 0, ntheta = 0;
  std::vector<BoundaryEntry> entries;

  BoundaryGrid() = default;
  BoundaryGrid(const SurfaceModel& model, int nu_, int ntheta_)
      : nu(nu_), ntheta(ntheta_) {
    if (model.closed())
      throw DomainError("BoundaryGrid: closed model has no boundary");
    if (nu < 2 || ntheta < 4) throw ConfigError("BoundaryGrid: grid too small");
    double du = model.extent(0) / nu;
    double dth = kTwoPi / ntheta;
    double margin = std::sin(dth) - 1e-14;
    for (double x2 : {model.lo(1), model.hi(1)})
      for (int i = 0; i < nu; ++i)
        for (int k = 0; k < ntheta; ++k) {
          double x1 = model.lo(0) + i * du;
          double th = k * dth;
          if (inward_component(model, x2, th) <= margin) continue;
          BoundaryEntry e;
          e.x1 = x1;
          e.x2 = x2;
          e.theta = th;
          e.weight = boundary_measure_weight(model, x1, x2, th) * du * dth;
          entries.push_back(e);
        }
  }
};

struct BoundaryDataSet {
  std::vector<BoundaryEntry> entries;  // non-trapped inflow samples
  std::vector<Vector> values;          // C^n per entry

  BoundaryDataSet& operator+=(const BoundaryDataSet& o) {
    for (size_t s = 0; s < values.size(); ++s) values[s] += o.values[s];
    return *this;
  }
  BoundaryDataSet& operator*=(complexd a) {
    for (auto& v : values) v *= a;
    return *this;
  }
};

/// dmu_nu-weighted boundary inner product; conjugate-linear in `a`.
inline complexd inner_boundary(const BoundaryDataSet& a, const BoundaryDataSet& b) {
  if (a.values.size() != b.values.size())
    throw ValidationError("inner_boundary: mismatched data sets");
  complexd s(0.0);
  for (size_t q = 0; q < a.values.size(); ++q)
    s += a.entries[q].weight * a.values[q].dot(b.values[q]);
  return s;
}

inline double norm_boundary(const BoundaryDataSet& a) {
  return std::sqrt(std::real(inner_boundary(a, a)));
}

// Matrix-free attenuated ray transform between coefficient fields and
// boundary data. Rays, cocycle factors and trapezoid quadrature weights are
// traced once and cached; forward and adjoint reuse the identical samples and
// interpolation stencils, so the adjoint is the exact discrete transpose of
// the forward map in the weighted inner products above.
class RayTransformOperator {
 public:
  RayTransformOperator(const SMGrid& grid, const ConnectionPair& pair,
                       const BoundaryGrid& bgrid, int degree, double h,
                       double t_max = 50.0, double near_trapped_tol = 1e-3)
      : grid_(&grid), pair_(&pair), degree_(degree), h_(h) {
    const SurfaceModel& model = grid.model();
    std::vector<std::vector<Sample>> rays(bgrid.entries.size());
    std::vector<unsigned char> keep(bgrid.entries.size(), 0);
    parallel_for(bgrid.entries.size(), [&](size_t e) {
      const BoundaryEntry& be = bgrid.entries[e];
      PhasePoint p0{be.x1, be.x2, be.theta};
      if (model.is_catenoid() &&
          std::abs(std::abs(clairaut_constant(model, p0)) - 1.0) <
              near_trapped_tol)
        return;  // near-trapped flag: excluded from the data set
      rays[e] = trace_ray(model, pair, p0, h, t_max, keep[e]);
    });
    for (size_t e = 0; e < bgrid.entries.size(); ++e)
      if (keep[e]) {
        entries_.push_back(bgrid.entries[e]);
        samples_.push_back(std::move(rays[e]));
      }
  }

  const std::vector<BoundaryEntry>& entries() const { return entries_; }
  int degree() const { return degree_; }

  BoundaryDataSet forward(const CoefficientField& f) const {
    if (f.n != pair_->rank() || f.degree != degree_)
      throw ValidationError("forward: coefficient field shape mismatch");
    BoundaryDataSet out;
    out.entries = entries_;
    out.values.assign(entries_.size(), Vector::Zero(f.n));
    parallel_for(entries_.size(), [&](size_t e) {
      Vector acc = Vector::Zero(f.n);
      for (const Sample& s : samples_[e])
        acc += s.q * (s.cstar * sample_field(f, s));
      out.values[e] = acc;
    });
    return out;
  }

  CoefficientField adjoint(const BoundaryDataSet& d) const {
    if (d.values.size() != entries_.size())
      throw ValidationError("adjoint: data set does not match this operator");
    int n = pair_->rank();
    // fixed-size entry blocks accumulated in index order: deterministic for
    // any worker count
    const size_t block = 64;
    size_t nblocks = (entries_.size() + block - 1) / block;
    std::vector<CoefficientField> partial(
        nblocks, CoefficientField(*grid_, n, degree_));
    parallel_for(nblocks, [&](size_t b) {
      CoefficientField& acc = partial[b];
      size_t lo = b * block, hi = std::min(entries_.size(), lo + block);
      for (size_t e = lo; e < hi; ++e) {
        double we = entries_[e].weight;
        for (const Sample& s : samples_[e]) {
          Vector v = (we * s.q) * (s.cstar.adjoint() * d.values[e]);
          int i0[4], j0[4];
          double wi[4], wj[4];
          detail::base_stencil(*grid_, 0, s.x1, i0, wi);
          detail::base_stencil(*grid_, 1, s.x2, j0, wj);
          for (int m = -degree_; m <= degree_; ++m) {
            complexd ph = std::polar(1.0, -m * s.theta);
            ModeField& cm = acc.mode(m);
            for (int a = 0; a < 4; ++a)
              for (int bb = 0; bb < 4; ++bb)
                cm.vec(i0[a], j0[bb]) += (ph * (wi[a] * wj[bb])) * v;
          }
        }
      }
    });
    CoefficientField out(*grid_, n, degree_);
    for (const auto& p : partial) out += p;
    // divide by the weights of the coefficient-space inner product
    for (int m = -degree_; m <= degree_; ++m) {
      ModeField& cm = out.mode(m);
      for (int i = 0; i < grid_->n1(); ++i)
        for (int j = 0; j < grid_->n2(); ++j)
          cm.vec(i, j) /= kTwoPi * grid_->base_weight(i, j);
    }
    return out;
  }

 private:
  struct Sample {
    double x1, x2, theta;
    double q;      // quadrature weight along the ray
    Matrix cstar;  // C(t)^{-1} = C(t)^*
  };

  static std::vector<Sample> trace_ray(const SurfaceModel& model,
                                       const ConnectionPair& pair,
                                       const PhasePoint& p0, double h,
                                       double t_max, unsigned char& exited) {
    std::vector<Sample> samples;
    detail::TransportState s;
    s.p = p0;
    s.c = Matrix::Identity(pair.rank(), pair.rank());
    double t = 0.0;
    long nmax = static_cast<long>(std::ceil(t_max / h));
    auto push = [&](const detail::TransportState& st, double q) {
      samples.push_back({st.p.x1, st.p.x2, st.p.theta, q, st.c.adjoint()});
    };
    for (long step = 0; step < nmax; ++step) {
      PhasePoint next = flow_step(model, s.p, h);
      if (!base_inside(model, next)) {
        auto [exitp, dt] = refine_exit(model, s.p, h);
        bool first = samples.empty();
        push(s, first ? 0.5 * dt : 0.5 * (h + dt));
        detail::TransportState e =
            detail::transport_step(model, pair, s, t, dt, nullptr, 0.0);
        e.p = exitp;
        e.c = unitary_project(e.c);
        push(e, 0.5 * dt);
        if (!first) samples.front().q = 0.5 * h;  // trapezoid end weight
        exited = 1;
        return samples;
      }
      push(s, h);
      s = detail::transport_step(model, pair, s, t, h, nullptr, 0.0);
      s.c = unitary_project(s.c);
      t += h;
    }
    exited = 0;  // trapped or capped: excluded
    return samples;
  }

  Vector sample_field(const CoefficientField& f, const Sample& s) const {
    int i0[4], j0[4];
    double wi[4], wj[4];
    detail::base_stencil(*grid_, 0, s.x1, i0, wi);
    detail::base_stencil(*grid_, 1, s.x2, j0, wj);
    Vector out = Vector::Zero(f.n);
    for (int m = -degree_; m <= degree_; ++m) {
      const ModeField& cm = f.mode(m);
      Vector acc = Vector::Zero(f.n);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          acc += (wi[a] * wj[b]) * cm.vec(i0[a], j0[b]);
      out += std::polar(1.0, m * s.theta) * acc;
    }
    return out;
  }

  const SMGrid* grid_;
  const ConnectionPair* pair_;
  int degree_;
  double h_;
  std::vector<BoundaryEntry> entries_;
  std::vector<std::vector<Sample>> samples_;
};

struct ReconstructionResult {
  CoefficientField f;
  std::vector<double> residuals;  // normal-equation residual norms per iteration
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
};

/// Tikhonov-regularized CGLS for the least-squares problem
/// min ||forward f - data||^2 + reg ||f||^2, using the factored recurrences
/// (numerically stabler than CG on the explicit normal equations).
inline ReconstructionResult reconstruct(const SMGrid& grid,
                                        const RayTransformOperator& op,
                                        const BoundaryDataSet& data, double reg,
                                        int max_iter = 500, double tol = 1e-6) {
  if (reg < 0) throw ConfigError("reconstruct: reg must be >= 0");
  ReconstructionResult res;
  CoefficientField b = op.adjoint(data);
  double bnorm = norm_coeff(grid, b);
  res.f = CoefficientField(grid, b.n, b.degree);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  BoundaryDataSet r = data;  // data-space residual, x = 0
  CoefficientField s = b;    // normal-equation residual adjoint(r) - reg x
  CoefficientField p = s;
  double gamma = std::real(inner_coeff(grid, s, s));
  // least-squares objective ||r||^2 + reg ||x||^2 is monotone in exact
  // arithmetic; sustained growth signals numerical breakdown
  double phi_min = std::real(inner_boundary(r, r));
  int grow = 0;
  for (int it = 0; it < max_iter; ++it) {
    BoundaryDataSet q = op.forward(p);
    double denom = std::real(inner_boundary(q, q)) +
                   reg * std::real(inner_coeff(grid, p, p));
    if (denom <= 0) break;
    double alpha = gamma / denom;
    CoefficientField step = p;
    step *= complexd(alpha);
    res.f += step;
    BoundaryDataSet qstep = q;
    qstep *= complexd(-alpha);
    r += qstep;
    s = op.adjoint(r);
    if (reg > 0) {
      CoefficientField rx = res.f;
      rx *= complexd(-reg);
      s += rx;
    }
    double gamma_new = std::real(inner_coeff(grid, s, s));
    res.residuals.push_back(std::sqrt(gamma_new));
    res.iterations = it + 1;
    if (std::sqrt(gamma_new) < tol * bnorm) {
      res.converged = true;
      break;
    }
    double phi = std::real(inner_boundary(r, r)) +
                 reg * std::real(inner_coeff(grid, res.f, res.f));
    if (!std::isfinite(phi) || !std::isfinite(gamma_new)) {
      res.diverged = true;
      break;
    }
    grow = (phi > phi_min * (1.0 + 1e-10)) ? grow + 1 : 0;
    if (grow >= 30 && phi > 2.0 * phi_min) {
      res.diverged = true;
      break;
    }
    phi_min = std::min(phi_min, phi);
    double beta = gamma_new / gamma;
    CoefficientField pnew = s;
    CoefficientField pb = p;
    pb *= complexd(beta);
    pnew += pb;
    p = pnew;
    gamma = gamma_new;
  }
  return res;
}

struct FiniteDegreeReport {
  int m_source = 0;
  std::vector<std::pair<int, double>> profile;           // degree_profile of u
  std::vector<std::pair<int, double>> tail_mass;         // (m_cut, fraction)
  size_t trapped_nodes = 0;
};

/// Manufactures a random field of exact degree m_source, runs the transport
/// solve and reports how the solution's vertical-mode mass decays.
inline FiniteDegreeReport finite_degree_experiment(const SMGrid& grid,
                                                   const ConnectionPair& pair,
                                                   int m_source, uint64_t seed,
                                                   double h, double t_max = 50.0) {
  CounterRng rng(seed);
  FiberField f = random_omega_m_field(grid, pair.rank(), m_source, rng,
                                      /*dirichlet=*/!grid.model().closed());
  TransportSolution sol = transport_solve(grid, pair, f, h, t_max);
  FiniteDegreeReport rep;
  rep.m_source = m_source;
  rep.profile = degree_profile(grid, sol.u);
  for (auto flag : sol.trapped) rep.trapped_nodes += flag;
  double total = 0.0;
  for (auto& [m, v] : rep.profile) total += v * v;
  for (int m_cut : {m_source - 1, m_source, 2 * m_source}) {
    double tail = 0.0;
    for (auto& [m, v] : rep.profile)
      if (m > m_cut) tail += v * v;
    rep.tail_mass.emplace_back(m_cut, total > 0 ? tail / total : 0.0);
  }
  return rep;
}

struct GaugeRecoveryReport {
  ScatteringDistance distance;
  std::string verdict;  // "indistinguishable" | "distinct" | "inconclusive"
};

/// Compares the scattering data of two pairs over the shared inflow grid.
inline GaugeRecoveryReport gauge_recovery_experiment(const SMGrid& grid,
                                                     const ConnectionPair& pairA,
                                                     const ConnectionPair& pairB,
                                                     double h, double t_max) {
  if (pairA.rank() != pairB.rank())
    throw ValidationError("gauge_recovery_experiment: rank mismatch");
  auto da = scattering_data(grid, pairA, h, t_max);
  auto db = scattering_data(grid, pairB, h, t_max);
  GaugeRecoveryReport rep;
  rep.distance = scattering_distance(grid, da, db);
  if (rep.distance.sup < 1e-6)
    rep.verdict = "indistinguishable";
  else if (rep.distance.sup > 1e-3)
    rep.verdict = "distinct";
  else
    rep.verdict = "inconclusive";
  return rep;
}

}  // namespace holoray

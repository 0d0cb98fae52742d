#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "holoray/cocycle.hpp"
#include "holoray/identities.hpp"
#include "holoray/presets.hpp"
#include "holoray/testfields.hpp"

using namespace holoray;

namespace {
const double kMeridianTransit = 2.3504023872876028;  // 2 sinh 1
// e^{-i phi0 2 sinh 1} with phi0 = 0.5
const complexd kMeridianHolonomy(0.38535742648327137, -0.9227673888116062);
// (e^{i phi0 2 sinh 1} - 1) / (i phi0) with phi0 = 0.5
const complexd kMeridianIntegral(1.8455347776232125, 1.2292851470334574);
}  // namespace

TEST_CASE("preset pairs are skew-Hermitian everywhere sampled") {
  for (std::string mname : {"flat-torus", "catenoid"}) {
    SurfaceModel model = make_model(mname);
    for (const std::string& pname : pair_preset_names()) {
      ConnectionPair pair = holoray::make_pair(pname, model);
      for (double x1 : {0.3, 2.0, 5.1})
        for (double x2 : {model.lo(1) + 0.1, 0.5 * (model.lo(1) + model.hi(1))}) {
          CHECK(is_skew_hermitian(pair.A1(x1, x2)));
          CHECK(is_skew_hermitian(pair.A2(x1, x2)));
          CHECK(is_skew_hermitian(pair.Phi(x1, x2)));
        }
    }
  }
}

TEST_CASE("curvature of the trivial pair vanishes") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair triv = holoray::make_pair("trivial", cat);
  CHECK(curvature_star(triv, cat, 1.0, 0.3).norm() < 1e-14);
}

TEST_CASE("curvature oracle for the oscillatory u1 pair on the torus") {
  // A1 = i a cos x2, A2 = i a sin x1 -> i star f^E = -a (cos x1 + sin x2)
  SurfaceModel torus = make_flat_torus();
  double a = 0.4;
  ConnectionPair pair = holoray::make_pair("u1-oscillatory", torus);
  for (double x1 : {0.0, 1.3, 4.0})
    for (double x2 : {0.7, 2.2}) {
      complexd got = curvature_star(pair, torus, x1, x2)(0, 0);
      CHECK(std::abs(got - complexd(-a * (std::cos(x1) + std::sin(x2)))) < 1e-12);
    }
}

TEST_CASE("finite-difference curvature fallback matches the closed form") {
  // u1-bump has no analytic derivatives: A1 = 0, A2 = i a cos(x1) w(x2), so
  // i star f^E = i e^{-2 lambda} d1 A2 = a e^{-2 lambda} sin(x1) w(x2)
  SurfaceModel cat = make_catenoid();
  double a = 0.4;
  ConnectionPair pair = holoray::make_pair("u1-bump", cat);
  for (double x1 : {0.2, 1.1})
    for (double x2 : {-0.4, 0.35}) {
      complexd got = curvature_star(pair, cat, x1, x2)(0, 0);
      double expect = a * std::exp(-2.0 * cat.lambda(x1, x2)) * std::sin(x1) *
                      holoray::detail::bounded_window(cat, x2);
      CHECK(std::abs(got - complexd(expect)) < 1e-9);
    }
}

TEST_CASE("curvature eigenvalues are sorted and symmetric for su2") {
  SurfaceModel torus = make_flat_torus();
  ConnectionPair pair = holoray::make_pair("su2-bump", torus);
  auto ev = curvature_star_eigenvalues(pair, torus, 0.9, 1.7);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0] <= ev[1]);
  CHECK(ev[0] == doctest::Approx(-ev[1]).epsilon(1e-10));  // traceless algebra
}

TEST_CASE("cocycle of the trivial pair is the identity") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair triv = holoray::make_pair("trivial", cat);
  PhasePoint p{0.4, -0.5, 0.9};
  Matrix c = transport_cocycle(cat, triv, p, 0.8, 1e-3);
  CHECK((c - Matrix::Identity(1, 1)).norm() < 1e-12);
}

TEST_CASE("scalar Higgs cocycle has the exponential closed form") {
  SurfaceModel torus = make_flat_torus();
  ConnectionPair pair = holoray::make_pair("scalar-higgs", torus);
  PhasePoint p{1.0, 2.0, 0.7};
  for (double t : {0.3, 1.5, 4.0}) {
    complexd c = transport_cocycle(torus, pair, p, t, 1e-3)(0, 0);
    CHECK(std::abs(c - std::polar(1.0, -0.5 * t)) < 1e-10);
  }
}

TEST_CASE("meridian holonomy of the scalar Higgs pair") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair pair = holoray::make_pair("scalar-higgs", cat);
  PhasePoint entry{1.2, -1.0, kPi / 2};
  ScatteringRecord rec = parallel_transport_data(cat, pair, entry, 1e-3, 10.0);
  REQUIRE(!rec.trapped);
  CHECK(rec.transit_time == doctest::Approx(kMeridianTransit).epsilon(1e-6));
  CHECK(std::abs((*rec.holonomy)(0, 0) - kMeridianHolonomy) < 1e-8);
}

TEST_CASE("cocycle stays unitary along curved rays") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair pair = holoray::make_pair("su2-bump", cat);
  CounterRng rng(5);
  for (int s = 0; s < 10; ++s) {
    PhasePoint p{rng.uniform(0.0, kTwoPi), rng.uniform(-0.8, 0.8),
                 rng.uniform(0.0, kTwoPi)};
    double t = rng.uniform(0.1, 0.7);
    Matrix c;
    try {
      c = transport_cocycle(cat, pair, p, t, 1e-3);
    } catch (const PartialTrajectoryError&) {
      continue;
    }
    CHECK((c.adjoint() * c - Matrix::Identity(2, 2)).norm() < 1e-8);
  }
}

TEST_CASE("cocycle composition law") {
  SurfaceModel torus = make_flat_torus();
  ConnectionPair pair = holoray::make_pair("su2-bump", torus);
  CounterRng rng(9);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    PhasePoint p{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi),
                 rng.uniform(0.0, kTwoPi)};
    double t = rng.uniform(0.05, 1.5), dt = rng.uniform(0.05, 1.5);
    Matrix whole = transport_cocycle(torus, pair, p, t + dt, 1e-3);
    PhasePoint q = p;
    long nsteps = std::lround(t / 1e-3);
    for (long k = 0; k < nsteps; ++k) q = flow_step(torus, q, t / nsteps);
    Matrix first = transport_cocycle(torus, pair, p, t, 1e-3);
    Matrix second = transport_cocycle(torus, pair, q, dt, 1e-3);
    worst = std::max(worst, (whole - second * first).norm());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("cocycle past the exit time raises a partial-trajectory error") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair pair = holoray::make_pair("trivial", cat);
  PhasePoint entry{0.0, -1.0, kPi / 2};
  try {
    transport_cocycle(cat, pair, entry, 5.0, 1e-3);
    FAIL("expected PartialTrajectoryError");
  } catch (const PartialTrajectoryError& e) {
    CHECK(e.exit_time() == doctest::Approx(kMeridianTransit).epsilon(1e-6));
  }
}

TEST_CASE("transport along the waist never exits") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair pair = holoray::make_pair("trivial", cat);
  // equatorial geodesic at the waist runs forever
  auto res =
      holoray::detail::integrate_transport(cat, pair, {0.0, 0.0, 0.0}, 1e-2, 10.0);
  CHECK(res.trapped);
  SurfaceModel torus = make_flat_torus();
  CHECK_THROWS_AS(
      parallel_transport_data(torus, pair, {0.0, 0.0, 1.0}, 1e-2, 5.0),
      DomainError);
}

TEST_CASE("attenuated transform of zero is zero") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 12, 13, 12);
  ConnectionPair pair = holoray::make_pair("su2-bump", cat);
  FiberField zero(grid, 2);
  Vector v = attenuated_transform(grid, pair, zero, {0.3, -1.0, kPi / 2}, 1e-3);
  CHECK(v.norm() < 1e-14);
}

TEST_CASE("attenuated transform oracle: constant source on the meridian") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 16, 17, 12);
  ConnectionPair pair = holoray::make_pair("scalar-higgs", cat);
  FiberField ones(grid, 1);
  for (auto& v : ones.data) v = 1.0;
  Vector got = attenuated_transform(grid, pair, ones, {2.0, -1.0, kPi / 2}, 1e-3);
  CHECK(std::abs(got[0] - kMeridianIntegral) < 1e-6);
}

TEST_CASE("plain ray transform matches the analytic meridian quadrature") {
  // trivial pair, f = v^2 (mode 0): integral over the meridian is
  // int_{-1}^{1} v^2 cosh v dv = 6 sinh 1 - 4 cosh 1
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 12, 33, 12);
  ConnectionPair pair = holoray::make_pair("trivial", cat);
  FiberField f(grid, 1);
  for (int i = 0; i < grid.n1(); ++i)
    for (int j = 0; j < grid.n2(); ++j)
      for (int k = 0; k < grid.ntheta(); ++k)
        f.at(i, j, k, 0) = grid.x2(j) * grid.x2(j);
  Vector got = attenuated_transform(grid, pair, f, {1.0, -1.0, kPi / 2}, 1e-3);
  double expect = 6.0 * std::sinh(1.0) - 4.0 * std::cosh(1.0);
  CHECK(std::abs(got[0] - expect) < 1e-5);
}

TEST_CASE("attenuated transform is linear") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 12, 13, 12);
  ConnectionPair pair = holoray::make_pair("u1-bump", cat);
  CounterRng rng(13);
  FiberField f = random_field(grid, 1, rng, false);
  FiberField g = random_field(grid, 1, rng, false);
  PhasePoint entry{0.9, -1.0, 0.45 * kPi};
  Vector vf = attenuated_transform(grid, pair, f, entry, 1e-3);
  Vector vg = attenuated_transform(grid, pair, g, entry, 1e-3);
  FiberField comb = f + complexd(2.0) * g;
  Vector vc = attenuated_transform(grid, pair, comb, entry, 1e-3);
  CHECK((vc - (vf + 2.0 * vg)).norm() < 1e-10);
}

TEST_CASE("transport solve of zero source is zero and flags trapped nodes") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 8, 9, 8);
  ConnectionPair pair = holoray::make_pair("trivial", cat);
  FiberField zero(grid, 1);
  TransportSolution sol = transport_solve(grid, pair, zero, 5e-3, 30.0);
  double sup = 0.0;
  for (auto& v : sol.u.data) sup = std::max(sup, std::abs(v));
  CHECK(sup < 1e-14);
  // the waist node moving along the waist never exits
  bool any_trapped = false;
  for (auto t : sol.trapped) any_trapped |= (t != 0);
  CHECK(any_trapped);
}

TEST_CASE("transport solution satisfies the flow semigroup identity") {
  // u(p) = int_0^dt C(s)* f(phi_s p) ds + C(dt)* u(phi_dt p)
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 16, 17, 16);
  ConnectionPair pair = holoray::make_pair("su2-bump", cat);
  CounterRng rng(17);
  FiberField f = random_field(grid, 2, rng, true);
  FieldSampler sampler(grid, f);
  double h = 1e-3, dt = 0.25;
  PhasePoint p{1.3, -0.4, 0.8};
  auto whole = holoray::detail::integrate_transport(cat, pair, p, h, 60.0,
                                                    &sampler);
  REQUIRE(!whole.trapped);
  auto head = holoray::detail::integrate_transport(cat, pair, p, h, dt, &sampler);
  auto tail = holoray::detail::integrate_transport(cat, pair, head.exit, h, 60.0,
                                                   &sampler);
  REQUIRE(!tail.trapped);
  Vector split = head.integral + (head.holonomy.adjoint() * tail.integral);
  CHECK((whole.integral - split).norm() < 1e-7);
}

TEST_CASE("resolvent parameter validation and damping monotonicity") {
  SurfaceModel torus = make_flat_torus();
  SMGrid grid(torus, 8, 8, 8);
  ConnectionPair pair = holoray::make_pair("u1-oscillatory", torus);
  CounterRng rng(19);
  FiberField f = random_field(grid, 1, rng, false);
  CHECK_THROWS_AS(resolvent_apply(grid, pair, f, 0.0, 1e-2), ConfigError);
  CHECK_THROWS_AS(resolvent_apply(grid, pair, f, -1.0, 1e-2), ConfigError);
  double n1 = norm(grid, resolvent_apply(grid, pair, f, 0.5, 1e-2).u);
  double n2 = norm(grid, resolvent_apply(grid, pair, f, 2.0, 1e-2).u);
  CHECK(n1 > 0.0);
  CHECK(n2 < n1);  // stronger damping shrinks the damped integral
}

TEST_CASE("scattering data of the trivial pair is the identity") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 8, 9, 16);
  ConnectionPair triv = holoray::make_pair("trivial", cat);
  auto recs = scattering_data(grid, triv, 2e-3, 40.0);
  REQUIRE(!recs.empty());
  double sup = 0.0;
  size_t transits = 0;
  for (const auto& r : recs) {
    if (r.trapped) continue;
    sup = std::max(sup, ((*r.holonomy) - Matrix::Identity(1, 1)).norm());
    ++transits;
  }
  CHECK(transits > 0);
  CHECK(sup < 1e-10);
  SurfaceModel torus = make_flat_torus();
  SMGrid tgrid(torus, 8, 8, 8);
  CHECK_THROWS_AS(scattering_data(tgrid, triv, 1e-2, 5.0), DomainError);
}

TEST_CASE("scattering data is invariant under boundary-fixing gauges") {
  SurfaceModel cat = make_catenoid();
  SMGrid grid(cat, 12, 9, 16);
  ConnectionPair pair = holoray::make_pair("u1-bump", cat);
  GaugeMap gauge = make_gauge("u1-phase", cat);
  ConnectionPair moved = gauge_transform(pair, cat, gauge);
  auto a = scattering_data(grid, pair, 2e-3, 40.0);
  auto b = scattering_data(grid, moved, 2e-3, 40.0);
  ScatteringDistance d = scattering_distance(grid, a, b);
  CHECK(d.compared > 0);
  CHECK(d.sup < 1e-6);
}

TEST_CASE("gauge transform validates its input") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair pair = holoray::make_pair("u1-bump", cat);
  GaugeMap bad = make_gauge("u1-phase", cat);
  bad.r = [](double, double) {
    Matrix m(1, 1);
    m(0, 0) = 2.0;  // not unitary
    return m;
  };
  CHECK_THROWS_AS(gauge_transform(pair, cat, bad), ValidationError);
  GaugeMap skew = make_gauge("u1-phase", cat);
  skew.dr1 = [](double, double) {
    Matrix m(1, 1);
    m(0, 0) = complexd(5.0, 5.0);  // inconsistent derivative
    return m;
  };
  CHECK_THROWS_AS(gauge_transform(pair, cat, skew), ValidationError);
  GaugeMap wrong_rank = make_gauge("su2-rotation", cat);
  CHECK_THROWS_AS(gauge_transform(pair, cat, wrong_rank), ValidationError);
}

TEST_CASE("pure gauges are flat and gauges preserve the curvature spectrum") {
  SurfaceModel cat = make_catenoid();
  ConnectionPair triv = holoray::make_pair("trivial", cat);
  GaugeMap gauge = make_gauge("u1-phase", cat);
  ConnectionPair pure = gauge_transform(triv, cat, gauge);
  CHECK(curvature_star(pure, cat, 1.0, 0.2).norm() < 1e-7);

  ConnectionPair su2 = holoray::make_pair("su2-bump", cat);
  GaugeMap rot = make_gauge("su2-rotation", cat);
  ConnectionPair moved = gauge_transform(su2, cat, rot);
  for (double x1 : {0.4, 2.8})
    for (double x2 : {-0.3, 0.5}) {
      auto ev1 = curvature_star_eigenvalues(su2, cat, x1, x2);
      auto ev2 = curvature_star_eigenvalues(moved, cat, x1, x2);
      for (size_t s = 0; s < ev1.size(); ++s)
        CHECK(ev1[s] == doctest::Approx(ev2[s]).epsilon(1e-6));
    }
}

TEST_CASE("unitary projection restores near-unitary matrices") {
  Matrix m(2, 2);
  m << complexd(0.999, 0.01), complexd(0.02, 0.0), complexd(-0.02, 0.01),
      complexd(0.998, -0.01);
  Matrix p = unitary_project(m);
  CHECK((p.adjoint() * p - Matrix::Identity(2, 2)).norm() < 1e-9);
}

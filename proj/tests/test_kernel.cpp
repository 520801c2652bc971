#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/grid.hpp"
#include "rwre/kernel.hpp"
#include "rwre/stats.hpp"

using namespace rwre;

namespace {

EnvParams homogeneous(double a) {
  EnvParams p;
  p.model = EnvModel::Homogeneous;
  p.model_params = {{"a", a}};
  return p;
}

// 1d kernel e^{-2at} I_x(2at) wrapped on a circle of length L (images |k|<=3).
double kernel_1d_torus(double a, double t, int64_t x, int L) {
  double p = 0.0;
  for (int k = -3; k <= 3; ++k)
    p += std::exp(-2.0 * a * t) *
         std::cyl_bessel_i(static_cast<double>(std::llabs(x + static_cast<int64_t>(k) * L)),
                           2.0 * a * t);
  return p;
}

std::vector<double> delta_box(const Region& rg, const Pt& x) {
  std::vector<double> init(static_cast<size_t>(rg.n_box), 0.0);
  init[static_cast<size_t>(rg.box_index(x))] = 1.0;
  return init;
}

}  // namespace

TEST_CASE("step ladder values at the default parameters") {
  const RateField f{EnvParams{}};  // kappa 0.25, d 2, delta_t 1
  CHECK(oracle_step(f) == doctest::Approx(1.0 / 64).epsilon(1e-15));
  CHECK(survey_step(f) == doctest::Approx(1.0 / 32).epsilon(1e-15));
  CHECK(coarse_step(f) == doctest::Approx(1.0 / 16).epsilon(1e-15));
}

TEST_CASE("heat kernel value guards the density floor") {
  CHECK(heat_kernel_value(0.5, 2.0) == 0.25);
  CHECK_THROWS_AS(heat_kernel_value(0.5, 1e-13), std::domain_error);
  CHECK_THROWS_AS(heat_kernel_value(0.5, -1.0), std::domain_error);
}

TEST_CASE("homogeneous torus kernel matches the bessel product oracle") {
  const double a = 0.25, t = 4.0;
  const int L = 48;
  const RateField f(homogeneous(a));
  const KernelSlice slice = forward(f, TorusDomain(2, L), SpaceTime{}, t);
  double max_err = 0.0;
  for (int64_t k = 0; k < slice.dom.n; ++k) {
    const Pt x = slice.dom.point(k);
    const double oracle = kernel_1d_torus(a, t, x[0], L) * kernel_1d_torus(a, t, x[1], L);
    max_err = std::max(max_err, std::abs(slice.values[k] - oracle));
  }
  CHECK(max_err < 1e-8);
}

TEST_CASE("forward evolution conserves mass exactly enough") {
  const RateField f{EnvParams{}};
  const KernelSlice slice = forward(f, TorusDomain(2, 32), SpaceTime{}, 6.0);
  CHECK(std::abs(slice.mass() - 1.0) < 1e-10);
  for (double v : slice.values) CHECK(v >= 0.0);
}

TEST_CASE("advancing in stages reproduces the single advance bitwise") {
  const RateField f{EnvParams{}};
  const TorusDomain dom(2, 24);
  TorusEvolver one(f, dom, 0.0);
  TorusEvolver two(f, dom, 0.0);
  const int i1 = one.add_delta(make_pt(1, 0));
  const int i2 = two.add_delta(make_pt(1, 0));
  one.advance_to(5.0, oracle_step(f));
  two.advance_to(2.0, oracle_step(f));
  two.advance_to(5.0, oracle_step(f));
  CHECK(std::memcmp(one.state(i1).data(), two.state(i2).data(),
                    sizeof(double) * one.state(i1).size()) == 0);
}

TEST_CASE("snapshot stops reproduce the plain advance bitwise") {
  const RateField f{EnvParams{}};
  const TorusDomain dom(2, 24);
  TorusEvolver plain(f, dom, 0.0), snap(f, dom, 0.0);
  const int ip = plain.add_delta(make_pt());
  const int is = snap.add_delta(make_pt());
  plain.advance_to(3.0, survey_step(f));
  std::vector<double> seen;
  snap.advance_with_snapshots(3.0, survey_step(f), {0.5, 1.25, 2.0}, [&](double t) {
    seen.push_back(t);
    CHECK(snap.time() == t);
  });
  CHECK(seen == std::vector<double>{0.5, 1.25, 2.0});
  CHECK(std::memcmp(plain.state(ip).data(), snap.state(is).data(),
                    sizeof(double) * plain.state(ip).size()) == 0);
}

TEST_CASE("forward/backward duality on the torus") {
  // sum_x p(0,0; x,t) f(x) must equal the backward solve u(0,0) with
  // terminal data f at t.
  const RateField f{EnvParams{}};
  const TorusDomain dom(2, 20);
  const double T = 4.0;
  TorusEvolver fwd(f, dom, 0.0, TorusEvolver::Mode::Forward);
  const int ip = fwd.add_delta(make_pt());
  fwd.advance_to(T, oracle_step(f));

  std::vector<double> payload(static_cast<size_t>(dom.n));
  for (int64_t k = 0; k < dom.n; ++k) {
    const Pt x = dom.point(k);
    payload[k] = std::cos(0.37 * static_cast<double>(x[0])) +
                 0.25 * static_cast<double>(x[1] % 3);
  }
  TorusEvolver bwd(f, dom, T, TorusEvolver::Mode::Backward);
  const int iu = bwd.add_state(payload);
  bwd.advance_to(0.0, oracle_step(f));

  double pairing = 0.0;
  for (int64_t k = 0; k < dom.n; ++k) pairing += fwd.state(ip)[k] * payload[k];
  CHECK(pairing == doctest::Approx(bwd.state(iu)[dom.index(make_pt())]).epsilon(1e-8));
}

TEST_CASE("backward evolution preserves constants exactly") {
  const RateField f{EnvParams{}};
  const TorusDomain dom(2, 16);
  TorusEvolver ev(f, dom, 5.0, TorusEvolver::Mode::Backward);
  const int id = ev.add_uniform(3.25);
  ev.advance_to(0.0, survey_step(f));
  for (double v : ev.state(id)) CHECK(v == 3.25);
}

TEST_CASE("killed evolution books every unit of mass") {
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 6.0);
  const KilledResult res = killed_forward(f, rg, SpaceTime{}, 8.0);
  CHECK(res.survival > 0.0);
  CHECK(res.survival < 1.0);
  double absorbed = 0.0;
  for (double v : res.absorbed) {
    CHECK(v >= 0.0);
    absorbed += v;
  }
  CHECK(res.survival + absorbed == doctest::Approx(1.0).epsilon(1e-9));
  for (const int64_t k : rg.interior) CHECK(res.values[k] >= 0.0);
}

TEST_CASE("cell flux recording sums to the absorbed mass") {
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 5.0);
  RegionEvolver ev(f, rg, RegionEvolver::Mode::ForwardKilled, 0.0, delta_box(rg, make_pt()));
  ev.enable_cell_flux(0, 5);
  ev.run_to(6.0, oracle_step(f));
  double from_cells = 0.0;
  for (const auto& cell : ev.cell_flux())
    for (double v : cell) from_cells += v;
  double booked = 0.0;
  for (double v : ev.absorbed()) booked += v;
  CHECK(from_cells == doctest::Approx(booked).epsilon(1e-12));
  CHECK(ev.survival() + booked == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("killed forward agrees with the backward caloric pin") {
  // q_R(0,0; y,T) two ways: killed forward evaluated at y, and a backward
  // solve from a terminal delta at y evaluated at the start.
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 5.0);
  const double T = 6.0;
  const Pt y = make_pt(2, -1);
  const KilledResult fwd = killed_forward(f, rg, SpaceTime{}, T);

  RegionEvolver bwd(f, rg, RegionEvolver::Mode::BackwardCaloric, T, delta_box(rg, y));
  bwd.run_to(0.0, oracle_step(f));
  CHECK(fwd.at(y) == doctest::Approx(bwd.values()[rg.box_index(make_pt())]).epsilon(1e-8));
}

TEST_CASE("caloric solver is linear in its data") {
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 4.0);
  const double T = 3.0;
  std::vector<double> fa(static_cast<size_t>(rg.n_box), 0.0);
  std::vector<double> fb(static_cast<size_t>(rg.n_box), 0.0);
  for (const int64_t k : rg.interior) {
    const Pt x = rg.point(k);
    fa[k] = 1.0 + 0.1 * static_cast<double>(x[0]);
    fb[k] = static_cast<double>(x[1] * x[1]);
  }
  const auto zero_lat = [](int64_t, int64_t) { return 0.0; };
  const CaloricSolution ua = solve_caloric(f, rg, 0.0, T, fa, zero_lat, {});
  const CaloricSolution ub = solve_caloric(f, rg, 0.0, T, fb, zero_lat, {});
  std::vector<double> fc(static_cast<size_t>(rg.n_box), 0.0);
  for (size_t k = 0; k < fc.size(); ++k) fc[k] = 2.0 * fa[k] - 0.5 * fb[k];
  const CaloricSolution uc = solve_caloric(f, rg, 0.0, T, fc, zero_lat, {});
  for (const int64_t k : rg.interior)
    CHECK(uc.slices[0][k] ==
          doctest::Approx(2.0 * ua.slices[0][k] - 0.5 * ub.slices[0][k]).epsilon(1e-11));
}

TEST_CASE("lateral data enters through the boundary ring") {
  // Terminal 0, lateral 1 everywhere: u(x,s) = P^{x,s}(walk exits before T),
  // which must lie in (0,1) strictly inside and increase toward the boundary.
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 5.0);
  const double T = 4.0;
  RegionEvolver ev(f, rg, RegionEvolver::Mode::BackwardCaloric, T,
                   std::vector<double>(static_cast<size_t>(rg.n_box), 0.0));
  ev.set_lateral([](int64_t, int64_t) { return 1.0; });
  ev.run_to(0.0, oracle_step(f));
  const double at_center = ev.values()[rg.box_index(make_pt())];
  const double near_edge = ev.values()[rg.box_index(make_pt(4, 0))];
  CHECK(at_center > 0.0);
  CHECK(at_center < 1.0);
  CHECK(near_edge > at_center);
  CHECK(near_edge < 1.0 + 1e-9);
}

TEST_CASE("exit probabilities complement survival") {
  // Same cylinder, forward and backward: P^0(exit before T) from the killed
  // forward mass balance must match the backward lateral-1 solve at the start.
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 4.0);
  const double T = 5.0;
  const KilledResult fwd = killed_forward(f, rg, SpaceTime{}, T);
  double absorbed = 0.0;
  for (double v : fwd.absorbed) absorbed += v;

  RegionEvolver bwd(f, rg, RegionEvolver::Mode::BackwardCaloric, T,
                    std::vector<double>(static_cast<size_t>(rg.n_box), 0.0));
  bwd.set_lateral([](int64_t, int64_t) { return 1.0; });
  bwd.run_to(0.0, oracle_step(f));
  CHECK(absorbed ==
        doctest::Approx(bwd.values()[rg.box_index(make_pt())]).epsilon(1e-8));
}

TEST_CASE("ring integrals accumulate interior boundary-adjacent values") {
  const RateField f{EnvParams{}};
  const Region rg = ball_region(2, make_pt(), 4.0);
  RegionEvolver ev(f, rg, RegionEvolver::Mode::BackwardCaloric, 3.0,
                   std::vector<double>(static_cast<size_t>(rg.n_box), 1.0));
  ev.enable_ring_integrals(0, 2);
  ev.run_to(0.0, oracle_step(f));
  REQUIRE(ev.ring_integrals().size() == 3);
  const auto& ring = ev.ring_sites();
  REQUIRE(!ring.empty());
  // Terminal data 1 with zero lateral: u decays from 1, so each per-cell
  // integral lies in (0, delta_t].
  for (const auto& cell : ev.ring_integrals())
    for (double v : cell) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0 + 1e-6);
    }
}

TEST_CASE("serial and parallel cores agree bitwise") {
  const RateField f{EnvParams{}};
  const TorusDomain dom(2, 28);

  set_exec_policy(Exec::Serial);
  TorusEvolver ts(f, dom, 0.0);
  const int is = ts.add_delta(make_pt());
  ts.advance_to(4.0, survey_step(f));

  set_exec_policy(Exec::Parallel);
  TorusEvolver tp(f, dom, 0.0);
  const int ip = tp.add_delta(make_pt());
  tp.advance_to(4.0, survey_step(f));
  CHECK(std::memcmp(ts.state(is).data(), tp.state(ip).data(),
                    sizeof(double) * ts.state(is).size()) == 0);

  const Region rg = ball_region(2, make_pt(), 5.0);
  set_exec_policy(Exec::Serial);
  RegionEvolver ks(f, rg, RegionEvolver::Mode::ForwardKilled, 0.0, delta_box(rg, make_pt()));
  ks.run_to(4.0, survey_step(f));
  set_exec_policy(Exec::Parallel);
  RegionEvolver kp(f, rg, RegionEvolver::Mode::ForwardKilled, 0.0, delta_box(rg, make_pt()));
  kp.run_to(4.0, survey_step(f));
  CHECK(std::memcmp(ks.values().data(), kp.values().data(),
                    sizeof(double) * ks.values().size()) == 0);
  CHECK(std::memcmp(ks.absorbed().data(), kp.absorbed().data(),
                    sizeof(double) * ks.absorbed().size()) == 0);
  set_exec_policy(Exec::Parallel);
}

TEST_CASE("region geometry: lattice ball counts and ring structure") {
  const Region rg = ball_region(2, make_pt(), 2.0);
  CHECK(rg.interior.size() == 13);  // |B_2 cap Z^2|
  for (const auto& b : rg.boundary) {
    CHECK(!b.edges.empty());
    for (const auto& [k, axis] : b.edges) {
      CHECK(rg.mask[k] == 1.0);
      CHECK(axis >= 0);
      CHECK(axis < 2);
    }
  }
  const Region ann = annulus_region(2, make_pt(), 2.0, 5.0);
  for (const int64_t k : ann.interior) {
    const Pt x = ann.point(k);
    const double n2 = std::sqrt(static_cast<double>(x[0] * x[0] + x[1] * x[1]));
    CHECK(n2 > 2.0);
    CHECK(n2 <= 5.0);
  }
}

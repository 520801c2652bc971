#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rwre/stats.hpp"
#include "rwre/verify.hpp"

namespace rwre {

namespace {

double norm2(const Pt& x, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += static_cast<double>(x[i]) * x[i];
  return std::sqrt(s);
}

// sup/inf of each generator row over probe index sets, folded into the worst
// ratio; rows invisible from the sup set are skipped, a vanishing inf for a
// visible row is a geometry bug (ellipticity forbids it).
double worst_ratio(const std::vector<std::vector<double>>& M,
                   const std::vector<int>& sup, const std::vector<int>& inf) {
  double worst = 0.0;
  for (const auto& row : M) {
    double s = 0.0;
    for (int p : sup) s = std::max(s, row[p]);
    if (s <= 0.0) continue;
    double i = std::numeric_limits<double>::infinity();
    for (int p : inf) i = std::min(i, row[p]);
    if (!(i > 0.0))
      throw std::runtime_error("boundary: zero inf value for a visible generator");
    worst = std::max(worst, s / i);
  }
  return worst;
}

// Laterally-vanishing nonnegative caloric functions on B_R x [0, R^2): the
// cone is spanned by terminal interior deltas alone.  All values inside the
// shrunken cylinder must be uniformly comparable (elliptic-type Harnack).
double eh_constant(const RateField& f, int R, double delta, double& prob_max) {
  const int d = f.dim();
  const double T = static_cast<double>(R) * R;
  const Region rg = ball_region(d, make_pt(), static_cast<double>(R));
  const double rad = (1.0 - delta) * R;
  const double t_hi = (1.0 - delta * delta) * T;
  const int stride = std::max(1, R / 8);
  std::vector<SpaceTime> probes;
  for (double frac : {0.25, 0.5, 0.75})
    for (const Pt& x : lattice_ball(d, rad)) {
      bool keep = true;
      for (int i = 0; i < d; ++i)
        if (x[i] % stride != 0) keep = false;
      if (keep) probes.push_back({x, frac * t_hi});
    }
  const double h = R >= 16 ? coarse_step(f) : survey_step(f);
  std::vector<std::vector<double>> M(rg.interior.size(),
                                     std::vector<double>(probes.size(), 0.0));
  for (size_t p = 0; p < probes.size(); ++p) {
    std::vector<double> init(static_cast<size_t>(rg.n_box), 0.0);
    init[static_cast<size_t>(rg.box_index(probes[p].x))] = 1.0;
    RegionEvolver ev(f, rg, RegionEvolver::Mode::ForwardKilled, probes[p].t,
                     std::move(init));
    ev.run_to(T, h);
    const auto& u = ev.values();
    for (size_t k = 0; k < rg.interior.size(); ++k) {
      M[k][p] = u[static_cast<size_t>(rg.interior[k])];
      prob_max = std::max(prob_max, M[k][p]);
    }
  }
  std::vector<int> all(probes.size());
  for (size_t p = 0; p < probes.size(); ++p) all[p] = static_cast<int>(p);
  return worst_ratio(M, all, all);
}

// Carleson-type estimate at the boundary point 0 of B_R(z), z = R e1: caloric
// functions vanishing on the boundary portion B_2r(0) x [0, 4r^2) have their
// sup over the near-boundary box controlled by the value at the interior
// point z_r = r e1 one time-unit r^2 earlier.
double carleson_constant(const RateField& f, int R, double& prob_max) {
  const int d = f.dim();
  const int r = R / 2;
  const double r2 = static_cast<double>(r) * r;
  Pt z = make_pt();
  z[0] = R;
  const Region rg = ball_region(d, z, static_cast<double>(R));
  const double dt = f.delta_t();
  const double T = 4.0 * r2;
  const int64_t cell_lo = static_cast<int64_t>(std::floor(-r2 / dt + 1e-12));
  const int64_t cell_hi = static_cast<int64_t>(std::llround(T / dt)) - 1;

  const int stride = std::max(1, r / 4);
  std::vector<SpaceTime> probes;
  std::vector<int> sup_idx, inf_idx;
  for (double frac : {0.25, 0.5, 0.75})
    for (const Pt& x : lattice_ball(d, static_cast<double>(r))) {
      bool keep = rg.is_interior(x);
      for (int i = 0; i < d; ++i)
        if (x[i] % stride != 0) keep = false;
      if (keep) {
        sup_idx.push_back(static_cast<int>(probes.size()));
        probes.push_back({x, frac * r2});
      }
    }
  for (const Pt& w : lattice_ball(d, 0.5 * r)) {
    Pt y = w;
    y[0] += r;
    bool keep = rg.is_interior(y);
    for (int i = 0; i < d; ++i)
      if (w[i] % stride != 0) keep = false;
    if (keep) {
      inf_idx.push_back(static_cast<int>(probes.size()));
      probes.push_back({y, -r2});
    }
  }

  // admissible lateral generators: everywhere except the vanishing portion
  std::vector<std::pair<int64_t, size_t>> lat;
  for (int64_t c = cell_lo; c <= cell_hi; ++c)
    for (size_t bi = 0; bi < rg.boundary.size(); ++bi) {
      const bool off_portion = norm2(rg.boundary[bi].x, d) > 2.0 * r + 1e-9;
      const bool before_zero = static_cast<double>(c + 1) * dt <= 1e-12;
      if (off_portion || before_zero) lat.emplace_back(c, bi);
    }

  const double h = R >= 16 ? coarse_step(f) : survey_step(f);
  std::vector<std::vector<double>> M(lat.size() + rg.interior.size(),
                                     std::vector<double>(probes.size(), 0.0));
  for (size_t p = 0; p < probes.size(); ++p) {
    std::vector<double> init(static_cast<size_t>(rg.n_box), 0.0);
    init[static_cast<size_t>(rg.box_index(probes[p].x))] = 1.0;
    RegionEvolver ev(f, rg, RegionEvolver::Mode::ForwardKilled, probes[p].t,
                     std::move(init));
    ev.enable_cell_flux(cell_lo, cell_hi);
    ev.run_to(T, h);
    const auto& flux = ev.cell_flux();
    for (size_t g = 0; g < lat.size(); ++g) {
      M[g][p] = flux[static_cast<size_t>(lat[g].first - cell_lo)][lat[g].second];
      prob_max = std::max(prob_max, M[g][p]);
    }
    const auto& u = ev.values();
    for (size_t k = 0; k < rg.interior.size(); ++k) {
      M[lat.size() + k][p] = u[static_cast<size_t>(rg.interior[k])];
      prob_max = std::max(prob_max, M[lat.size() + k][p]);
    }
  }
  return worst_ratio(M, sup_idx, inf_idx);
}

}  // namespace

// Boundary behavior of caloric functions: an elliptic-type Harnack inequality
// for laterally-vanishing solutions, a Carleson-type estimate at a boundary
// point, and the linear decay rate toward an absorbing sphere.  Constants
// must be finite, at least one, and stable across the two scales.
VerificationReport verify_boundary(const EnvParams& env, const BoundaryOptions& opt) {
  Stopwatch sw;
  if (opt.R_list.size() < 2) throw std::invalid_argument("boundary: need two radii");
  for (size_t i = 0; i + 1 < opt.R_list.size(); ++i)
    if (!(opt.R_list[i] < opt.R_list[i + 1]))
      throw std::invalid_argument("boundary: radii must increase");
  if (opt.R_list.front() < 8 || opt.R_list.front() % 2 != 0)
    throw std::invalid_argument("boundary: R must be even and >= 8");
  if (!(opt.delta > 0.0 && opt.delta <= 0.5))
    throw std::invalid_argument("boundary: delta must lie in (0, 0.5]");

  const RateField f(env);
  const int d = f.dim();

  VerificationReport rep;
  rep.check = "boundary";
  rep.env = env;
  rep.seeds = {env.seed};
  for (size_t k = 0; k < opt.R_list.size(); ++k)
    rep.add_geometry("R" + std::to_string(k), opt.R_list[k]);
  rep.add_geometry("delta", opt.delta);

  double prob_max = 0.0;
  std::vector<double> eh_cs, car_cs;
  for (int R : opt.R_list) {
    const double c_eh = eh_constant(f, R, opt.delta, prob_max);
    eh_cs.push_back(c_eh);
    rep.add_metric("eh_C_R" + std::to_string(R), c_eh);
    const double c_car = carleson_constant(f, R, prob_max);
    car_cs.push_back(c_car);
    rep.add_metric("carleson_C_R" + std::to_string(R), c_car);
  }
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0.0;
  for (size_t k = 0; k + 1 < eh_cs.size(); ++k) {
    for (double r : {eh_cs[k + 1] / eh_cs[k], car_cs[k + 1] / car_cs[k]}) {
      ratio_min = std::min(ratio_min, r);
      ratio_max = std::max(ratio_max, r);
    }
  }
  rep.gate("C_min", std::min(*std::min_element(eh_cs.begin(), eh_cs.end()),
                             *std::min_element(car_cs.begin(), car_cs.end())),
           ">=", 1.0 - 1e-9);
  rep.gate("cross_R_ratio_min", ratio_min, ">=", 0.5);
  rep.gate("cross_R_ratio_max", ratio_max, "<=", 2.0);

  // decay toward an absorbing sphere: hit the inner ball of the annulus
  // B_4R \ B_2R before leaving, probed at distances delta = 1..4 from the
  // outer boundary; the continuum absorption radius sits half a lattice
  // spacing outside the last interior shell.
  {
    const int R = opt.R_list.front();
    const Region ann =
        annulus_region(d, make_pt(), 2.0 * R, 4.0 * R);
    const double T = 2.0 * static_cast<double>(R) * R;
    std::vector<double> init(static_cast<size_t>(ann.n_box), 0.0);
    RegionEvolver ev(f, ann, RegionEvolver::Mode::BackwardCaloric, T, std::move(init));
    ev.set_lateral([&ann, R, d](int64_t bi, int64_t) {
      return norm2(ann.boundary[static_cast<size_t>(bi)].x, d) <= 2.0 * R + 0.5 ? 1.0
                                                                                : 0.0;
    });
    ev.run_to(0.0, survey_step(f));  // probe slice: one full time-unit below the data
    const auto& u = ev.values();
    std::vector<double> log_d, log_u;
    for (int dd = 1; dd <= 4; ++dd) {
      Pt x = make_pt();
      x[0] = 4 * R - dd;
      const double val = u[static_cast<size_t>(ann.box_index(x))];
      rep.add_metric("bh_u_d" + std::to_string(dd), val);
      prob_max = std::max(prob_max, val);
      if (!(val > 0.0)) throw std::runtime_error("boundary: zero hitting probability");
      log_d.push_back(std::log(static_cast<double>(dd) + 0.5));
      log_u.push_back(std::log(val));
    }
    const LineFit fit = fit_line(log_d, log_u);
    rep.add_metric("bh_r2", fit.r2);
    rep.gate("bh_slope", fit.slope, ">=", 0.8);
    rep.gate("bh_slope_hi", fit.slope, "<=", 1.2);
  }

  rep.gate("prob_max", prob_max, "<=", 1.0 + 1e-9);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

}  // namespace rwre

#include "rwre/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "rwre/stats.hpp"

namespace rwre {

double oracle_step(const RateField& f) {
  return std::min(f.delta_t(), f.kappa() / (8.0 * f.dim()));
}

double survey_step(const RateField& f) {
  return std::min(f.delta_t(), f.kappa() / (4.0 * f.dim()));
}

double coarse_step(const RateField& f) {
  return std::min(f.delta_t(), f.kappa() / (2.0 * f.dim()));
}

namespace {

constexpr double kTimeEps = 1e-9;

// Clamp the tiny negative undershoots RK4 can leave at kernel tails; anything
// materially negative signals an integration fault.
void clamp_nonneg(std::vector<double>& v) {
  for (double& x : v) {
    if (x < 0.0) {
      if (x < -1e-9) throw std::runtime_error("kernel: negative mass beyond tolerance");
      x = 0.0;
    }
  }
}

}  // namespace

double KernelSlice::mass() const { return pairwise_sum(values); }

// ================================================================= torus
TorusEvolver::TorusEvolver(const RateField& f, const TorusDomain& dom, double t0, Mode mode)
    : f_(f), dom_(dom), mode_(mode), t_(t0), cached_cell_(INT64_MIN) {
  const int64_t n = dom_.n, L = dom_.L;
  a_.assign(f_.dim(), std::vector<double>(n));
  tot_.assign(n, 0.0);
  k_.assign(n, 0.0);
  tmp_.assign(n, 0.0);
  acc_.assign(n, 0.0);
  // Neighbor line bases for axes >= 1 (axis 0 is in-line).
  const int64_t nlines = n / L;
  for (int axis = 1; axis < f_.dim(); ++axis) {
    line_nbr_[axis].resize(nlines);
    int64_t stride = 1;  // in line units
    for (int j = 1; j < axis; ++j) stride *= L;
    for (int64_t l = 0; l < nlines; ++l) {
      const int64_t c = (l / stride) % L;
      const int64_t dn = (c == 0) ? l + (L - 1) * stride : l - stride;
      const int64_t up = (c == L - 1) ? l - (L - 1) * stride : l + stride;
      line_nbr_[axis][l] = {dn * L, up * L};
    }
  }
}

int TorusEvolver::add_state(std::vector<double> init) {
  if (static_cast<int64_t>(init.size()) != dom_.n)
    throw std::invalid_argument("torus evolver: state size mismatch");
  states_.push_back(std::move(init));
  return static_cast<int>(states_.size()) - 1;
}

int TorusEvolver::add_delta(const Pt& x) {
  std::vector<double> v(dom_.n, 0.0);
  v[dom_.index(x)] = 1.0;
  return add_state(std::move(v));
}

int TorusEvolver::add_uniform(double value) {
  return add_state(std::vector<double>(dom_.n, value));
}

void TorusEvolver::eval_derivative(double t_eval, const std::vector<double>& u,
                                   std::vector<double>& out) {
  refresh_rates(static_cast<int64_t>(std::floor(t_eval / f_.delta_t())));
  out.resize(dom_.n);
  derivative(u, out);
}

void TorusEvolver::refresh_rates(int64_t cell) {
  if (cell == cached_cell_) return;
  cached_cell_ = cell;
  const double t_eval = (static_cast<double>(cell) + 0.5) * f_.delta_t();
  const int d = f_.dim();
  const int64_t n = dom_.n;
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) {
    const Pt x = dom_.point(i);
    double s = 0.0;
    for (int axis = 0; axis < d; ++axis) {
      const double a = f_.rate(x, t_eval, axis);
      a_[axis][i] = a;
      s += a;
    }
    tot_[i] = 2.0 * s;
  }
}

void TorusEvolver::derivative(const std::vector<double>& u, std::vector<double>& k) const {
  const int64_t L = dom_.L, nlines = dom_.n / L;
  const int d = f_.dim();
  const bool fwd = mode_ == Mode::Forward;
  const double* __restrict uu = u.data();
  double* __restrict kk = k.data();
  const double* __restrict tot = tot_.data();
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t l = 0; l < nlines; ++l) {
    const int64_t b = l * L;
    const double* __restrict a0 = a_[0].data();
    if (fwd) {
      kk[b] = a0[b + L - 1] * uu[b + L - 1] + a0[b + 1] * uu[b + 1] - tot[b] * uu[b];
      for (int64_t x = 1; x < L - 1; ++x)
        kk[b + x] = a0[b + x - 1] * uu[b + x - 1] + a0[b + x + 1] * uu[b + x + 1] -
                    tot[b + x] * uu[b + x];
      kk[b + L - 1] =
          a0[b + L - 2] * uu[b + L - 2] + a0[b] * uu[b] - tot[b + L - 1] * uu[b + L - 1];
      for (int axis = 1; axis < d; ++axis) {
        const auto [dn, up] = line_nbr_[axis][l];
        const double* __restrict aA = a_[axis].data();
        for (int64_t x = 0; x < L; ++x)
          kk[b + x] += aA[dn + x] * uu[dn + x] + aA[up + x] * uu[up + x];
      }
    } else {
      kk[b] = a0[b] * (uu[b + L - 1] + uu[b + 1]) - tot[b] * uu[b];
      for (int64_t x = 1; x < L - 1; ++x)
        kk[b + x] =
            a0[b + x] * (uu[b + x - 1] + uu[b + x + 1]) - tot[b + x] * uu[b + x];
      kk[b + L - 1] =
          a0[b + L - 1] * (uu[b + L - 2] + uu[b]) - tot[b + L - 1] * uu[b + L - 1];
      for (int axis = 1; axis < d; ++axis) {
        const auto [dn, up] = line_nbr_[axis][l];
        const double* __restrict aA = a_[axis].data();
        for (int64_t x = 0; x < L; ++x)
          kk[b + x] += aA[b + x] * (uu[dn + x] + uu[up + x]);
      }
    }
  }
}

void TorusEvolver::rk4_step(double h) {
  const int64_t n = dom_.n;
  for (auto& u : states_) {
    double* __restrict uu = u.data();
    double* __restrict kk = k_.data();
    double* __restrict tt = tmp_.data();
    double* __restrict ac = acc_.data();
    derivative(u, k_);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
    for (int64_t i = 0; i < n; ++i) {
      ac[i] = uu[i] + (h / 6.0) * kk[i];
      tt[i] = uu[i] + (h / 2.0) * kk[i];
    }
    derivative(tmp_, k_);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
    for (int64_t i = 0; i < n; ++i) {
      ac[i] += (h / 3.0) * kk[i];
      tt[i] = uu[i] + (h / 2.0) * kk[i];
    }
    derivative(tmp_, k_);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
    for (int64_t i = 0; i < n; ++i) {
      ac[i] += (h / 3.0) * kk[i];
      tt[i] = uu[i] + h * kk[i];
    }
    derivative(tmp_, k_);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
    for (int64_t i = 0; i < n; ++i) uu[i] = ac[i] + (h / 6.0) * kk[i];
  }
}

void TorusEvolver::advance_to(double t, double h_target) {
  if (h_target <= 0.0) h_target = oracle_step(f_);
  const double dt_cell = f_.delta_t();
  const bool fwd = mode_ == Mode::Forward;
  while (std::abs(t - t_) > kTimeEps && (fwd ? t > t_ : t < t_)) {
    int64_t cell;
    double seg_end;
    if (fwd) {
      cell = static_cast<int64_t>(std::floor(t_ / dt_cell + 1e-12));
      seg_end = std::min(t, (static_cast<double>(cell) + 1.0) * dt_cell);
    } else {
      cell = static_cast<int64_t>(std::ceil(t_ / dt_cell - 1e-12)) - 1;
      seg_end = std::max(t, static_cast<double>(cell) * dt_cell);
    }
    refresh_rates(cell);
    const double span = std::abs(seg_end - t_);
    const int64_t steps =
        std::max<int64_t>(1, static_cast<int64_t>(std::ceil(span / h_target - 1e-12)));
    const double h = span / static_cast<double>(steps);
    for (int64_t s = 0; s < steps; ++s) rk4_step(h);
    t_ = seg_end;
  }
}

void TorusEvolver::advance_with_snapshots(double t, double h_target,
                                          const std::vector<double>& snaps,
                                          const std::function<void(double)>& cb) {
  for (double s : snaps) {
    advance_to(s, h_target);
    cb(s);
  }
  advance_to(t, h_target);
}

double TorusEvolver::mass(int id) const { return pairwise_sum(states_[id]); }

KernelSlice forward(const RateField& f, const TorusDomain& dom, const SpaceTime& base,
                    double elapsed, double h_target) {
  TorusEvolver ev(f, dom, base.t);
  ev.add_delta(base.x);
  ev.advance_to(base.t + elapsed, h_target);
  KernelSlice ks;
  ks.dom = dom;
  ks.base = base;
  ks.time = base.t + elapsed;
  ks.values = std::move(ev.state(0));
  clamp_nonneg(ks.values);
  return ks;
}

// ================================================================= regions
RegionEvolver::RegionEvolver(const RateField& f, const Region& rg, Mode mode, double t0,
                             std::vector<double> init)
    : f_(f), rg_(rg), mode_(mode), t_(t0), cached_cell_(INT64_MIN), u_(std::move(init)) {
  if (static_cast<int64_t>(u_.size()) != rg_.n_box)
    throw std::invalid_argument("region evolver: state size mismatch");
  const int64_t n = rg_.n_box;
  for (int axis = 0; axis < f_.dim(); ++axis) a_[axis].assign(n, 0.0);
  tot_.assign(n, 0.0);
  k_.assign(n, 0.0);  // stays zero on the outer frame; only inner sites written
  tmp_.assign(n, 0.0);
  acc_.assign(n, 0.0);
  abs_.assign(rg_.boundary.size(), 0.0);
  kabs_.assign(rg_.boundary.size(), 0.0);
  if (mode_ == Mode::ForwardKilled)
    for (int64_t i = 0; i < n; ++i) u_[i] *= rg_.mask[i];
}

void RegionEvolver::set_lateral(std::function<double(int64_t, int64_t)> lateral) {
  lateral_ = std::move(lateral);
}

void RegionEvolver::enable_cell_flux(int64_t cell_lo, int64_t cell_hi) {
  rec_flux_ = true;
  rec_cell_lo_ = cell_lo;
  rec_cell_hi_ = cell_hi;
  cell_flux_.assign(cell_hi - cell_lo + 1, std::vector<double>(rg_.boundary.size(), 0.0));
  abs_mark_ = abs_;
}

void RegionEvolver::enable_ring_integrals(int64_t cell_lo, int64_t cell_hi) {
  rec_ring_ = true;
  rec_cell_lo_ = cell_lo;
  rec_cell_hi_ = cell_hi;
  // Interior ring: sites adjacent to some boundary site, in fixed order.
  std::vector<char> seen(rg_.n_box, 0);
  for (const auto& b : rg_.boundary)
    for (const auto& [i, axis] : b.edges)
      if (!seen[i]) {
        seen[i] = 1;
        ring_sites_.push_back(i);
      }
  std::sort(ring_sites_.begin(), ring_sites_.end());
  ring_acc_.assign(ring_sites_.size(), 0.0);
  ring_mark_.assign(ring_sites_.size(), 0.0);
  ring_k_.assign(ring_sites_.size(), 0.0);
  ring_int_.assign(cell_hi - cell_lo + 1, std::vector<double>(ring_sites_.size(), 0.0));
}

void RegionEvolver::refresh_rates(int64_t cell) {
  if (cell == cached_cell_) return;
  cached_cell_ = cell;
  const double t_eval = (static_cast<double>(cell) + 0.5) * f_.delta_t();
  const int d = f_.dim();
  const int64_t n = rg_.n_box;
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) {
    const Pt x = rg_.point(i);
    double s = 0.0;
    for (int axis = 0; axis < d; ++axis) {
      const double a = f_.rate(x, t_eval, axis);
      a_[axis][i] = a;
      s += a;
    }
    tot_[i] = 2.0 * s;
  }
  impose_lateral(cell);
}

void RegionEvolver::impose_lateral(int64_t cell) {
  if (mode_ == Mode::BackwardCaloric) {
    for (size_t b = 0; b < rg_.boundary.size(); ++b)
      u_[rg_.boundary[b].box_index] =
          lateral_ ? lateral_(static_cast<int64_t>(b), cell) : 0.0;
  }
}

void RegionEvolver::derivative(const std::vector<double>& u, std::vector<double>& k,
                               std::vector<double>& kabs) const {
  const int d = rg_.d;
  const int64_t s0 = rg_.side[0];
  const double* __restrict uu = u.data();
  double* __restrict kk = k.data();
  const double* __restrict tot = tot_.data();
  const double* __restrict msk = rg_.mask.data();
  // Inner lines only (interior sites are never on the box frame).
  int64_t nlines = 1;
  for (int i = 1; i < d; ++i) nlines *= rg_.side[i];
  const bool fwd = mode_ == Mode::ForwardKilled;
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t l = 0; l < nlines; ++l) {
    // Skip lines on the frame of axes >= 1.
    int64_t rem = l;
    bool frame = false;
    for (int i = 1; i < d; ++i) {
      const int64_t c = rem % rg_.side[i];
      rem /= rg_.side[i];
      if (c == 0 || c == rg_.side[i] - 1) frame = true;
    }
    if (frame) continue;
    const int64_t b = l * s0;
    if (fwd) {
      const double* __restrict a0 = a_[0].data();
      for (int64_t x = 1; x < s0 - 1; ++x) {
        const int64_t i = b + x;
        double v = a0[i - 1] * uu[i - 1] + a0[i + 1] * uu[i + 1] - tot[i] * uu[i];
        for (int axis = 1; axis < d; ++axis) {
          const int64_t s = rg_.stride(axis);
          const double* __restrict aA = a_[axis].data();
          v += aA[i - s] * uu[i - s] + aA[i + s] * uu[i + s];
        }
        kk[i] = v * msk[i];
      }
    } else {
      for (int64_t x = 1; x < s0 - 1; ++x) {
        const int64_t i = b + x;
        double v = a_[0][i] * (uu[i - 1] + uu[i + 1]);
        for (int axis = 1; axis < d; ++axis) {
          const int64_t s = rg_.stride(axis);
          v += a_[axis][i] * (uu[i - s] + uu[i + s]);
        }
        kk[i] = (v - tot[i] * uu[i]) * msk[i];
      }
    }
  }
  if (fwd) {
    // Absorbed-mass derivative: interior-site rate times interior value.
    for (size_t bi = 0; bi < rg_.boundary.size(); ++bi) {
      double v = 0.0;
      for (const auto& [i, axis] : rg_.boundary[bi].edges) v += a_[axis][i] * uu[i];
      kabs[bi] = v;
    }
  }
}

void RegionEvolver::rk4_step(double h) {
  // h is the step in the evolver's own clock (always positive); backward mode
  // integrates the reversed-time variable, which turns L u = 0 into forward
  // diffusion.
  const int64_t n = rg_.n_box;
  const size_t nb = rg_.boundary.size(), nr = ring_sites_.size();
  const bool fwd = mode_ == Mode::ForwardKilled;
  double* __restrict uu = u_.data();
  double* __restrict kk = k_.data();
  double* __restrict tt = tmp_.data();
  double* __restrict ac = acc_.data();
  std::vector<double> abs_acc(nb, 0.0), ring_acc_stage(nr, 0.0);
  auto augment = [&](const std::vector<double>& stage_u, double w) {
    if (fwd)
      for (size_t bi = 0; bi < nb; ++bi) abs_acc[bi] += w * kabs_[bi];
    if (rec_ring_)
      for (size_t r = 0; r < nr; ++r) ring_acc_stage[r] += w * stage_u[ring_sites_[r]];
  };
  derivative(u_, k_, kabs_);
  augment(u_, h / 6.0);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) {
    ac[i] = uu[i] + (h / 6.0) * kk[i];
    tt[i] = uu[i] + (h / 2.0) * kk[i];
  }
  derivative(tmp_, k_, kabs_);
  augment(tmp_, h / 3.0);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) {
    ac[i] += (h / 3.0) * kk[i];
    tt[i] = uu[i] + (h / 2.0) * kk[i];
  }
  derivative(tmp_, k_, kabs_);
  augment(tmp_, h / 3.0);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) {
    ac[i] += (h / 3.0) * kk[i];
    tt[i] = uu[i] + h * kk[i];
  }
  derivative(tmp_, k_, kabs_);
  augment(tmp_, h / 6.0);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n; ++i) uu[i] = ac[i] + (h / 6.0) * kk[i];
  for (size_t bi = 0; bi < nb; ++bi) abs_[bi] += abs_acc[bi];
  if (rec_ring_)
    for (size_t r = 0; r < nr; ++r) ring_acc_[r] += ring_acc_stage[r];
}

void RegionEvolver::record_cell_end(int64_t cell) {
  if (cell < rec_cell_lo_ || cell > rec_cell_hi_) return;
  const int64_t idx = cell - rec_cell_lo_;
  if (rec_flux_) {
    for (size_t b = 0; b < abs_.size(); ++b) {
      cell_flux_[idx][b] += abs_[b] - abs_mark_[b];
      abs_mark_[b] = abs_[b];
    }
  }
  if (rec_ring_) {
    for (size_t r = 0; r < ring_acc_.size(); ++r) {
      ring_int_[idx][r] += ring_acc_[r] - ring_mark_[r];
      ring_mark_[r] = ring_acc_[r];
    }
  }
}

void RegionEvolver::run_to(double t, double h_target) {
  if (h_target <= 0.0) h_target = oracle_step(f_);
  const double dt_cell = f_.delta_t();
  const bool fwd = mode_ == Mode::ForwardKilled;
  while (std::abs(t - t_) > kTimeEps && (fwd ? t > t_ : t < t_)) {
    int64_t cell;
    double seg_end;
    if (fwd) {
      cell = static_cast<int64_t>(std::floor(t_ / dt_cell + 1e-12));
      seg_end = std::min(t, (static_cast<double>(cell) + 1.0) * dt_cell);
    } else {
      cell = static_cast<int64_t>(std::ceil(t_ / dt_cell - 1e-12)) - 1;
      seg_end = std::max(t, static_cast<double>(cell) * dt_cell);
    }
    refresh_rates(cell);
    const double span = std::abs(seg_end - t_);
    const int64_t steps =
        std::max<int64_t>(1, static_cast<int64_t>(std::ceil(span / h_target - 1e-12)));
    const double h = span / static_cast<double>(steps);
    for (int64_t s = 0; s < steps; ++s) rk4_step(h);
    t_ = seg_end;
    if ((rec_flux_ || rec_ring_) &&
        t_ == (fwd ? (static_cast<double>(cell) + 1.0) * dt_cell
                   : static_cast<double>(cell) * dt_cell))
      record_cell_end(cell);
  }
}

void RegionEvolver::run_with_snapshots(double t, double h_target,
                                       const std::vector<double>& times,
                                       const std::function<void(double)>& cb) {
  for (double s : times) {
    run_to(s, h_target);
    cb(s);
  }
  run_to(t, h_target);
}

double RegionEvolver::survival() const { return pairwise_sum(u_); }

KilledResult killed_forward(const RateField& f, const Region& rg, const SpaceTime& base,
                            double elapsed, double h_target) {
  std::vector<double> init(rg.n_box, 0.0);
  const int64_t i0 = rg.box_index(base.x);
  if (i0 < 0 || rg.mask[i0] == 0.0)
    throw std::invalid_argument("killed_forward: base point not interior");
  init[i0] = 1.0;
  RegionEvolver ev(f, rg, RegionEvolver::Mode::ForwardKilled, base.t, std::move(init));
  ev.run_to(base.t + elapsed, h_target);
  KilledResult out;
  out.region = rg;
  out.base = base;
  out.time = base.t + elapsed;
  out.values = ev.values();
  clamp_nonneg(out.values);
  out.absorbed = ev.absorbed();
  out.survival = pairwise_sum(out.values);
  return out;
}

CaloricSolution solve_caloric(const RateField& f, const Region& rg, double t0, double T,
                              std::vector<double> terminal,
                              std::function<double(int64_t, int64_t)> lateral,
                              std::vector<double> times, double h_target) {
  RegionEvolver ev(f, rg, RegionEvolver::Mode::BackwardCaloric, T, std::move(terminal));
  ev.set_lateral(std::move(lateral));
  std::sort(times.begin(), times.end(), std::greater<double>());
  if (times.empty() || std::abs(times.back() - t0) > 1e-12) times.push_back(t0);
  CaloricSolution sol;
  sol.region = rg;
  ev.run_with_snapshots(t0, h_target, times, [&](double s) {
    sol.times.push_back(s);
    sol.slices.push_back(ev.values());
  });
  std::reverse(sol.times.begin(), sol.times.end());
  std::reverse(sol.slices.begin(), sol.slices.end());
  return sol;
}

}  // namespace rwre

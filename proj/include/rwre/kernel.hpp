#pragma once
// Quenched transition kernels by direct integration of the master equation.
//
// Forward (Fokker-Planck) form, for p(y,s) = P^{x,t}(X_{s-t} = y):
//   dp(y)/ds = sum_i [ a_i(y-e_i,s) p(y-e_i) + a_i(y+e_i,s) p(y+e_i) ]
//              - 2 (sum_i a_i(y,s)) p(y),
// backward (generator) form, for caloric u with L u = 0 solved down in time:
//   -du(x)/dt = sum_i a_i(x,t) [ u(x+e_i) + u(x-e_i) - 2 u(x) ].
//
// Rates are piecewise constant on delta_t cells, so the integrator freezes
// the rate arrays per cell and takes fixed classical RK4 steps aligned to
// cell boundaries; the oracle step is h = min(delta_t, kappa/(8d)).
// Killed evolution tracks absorbed mass per boundary site as extra ODE
// components integrated with the same RK4 tableau, which preserves total
// mass (interior + absorbed) to rounding.
//
// Both stepping cores exist in serial and OpenMP forms selected by the
// process-wide Exec policy; outputs are bitwise identical across policies
// and thread counts (site-indexed writes only, no shared reductions).

#include <functional>
#include <stdexcept>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/grid.hpp"
#include "rwre/walker.hpp"

namespace rwre {

// Step ladder. The forward operator's spectrum is bounded by the Gershgorin
// radius 4d/kappa, and classical RK4 is stable on the real axis up to
// |lambda h| ~ 2.785, so:
//   oracle_step: min(delta_t, kappa/(8d))  -- |lambda h| <= 0.5, used wherever
//                results feed tight absolute tolerances;
//   survey_step: min(delta_t, kappa/(4d))  -- |lambda h| <= 1, for percent-
//                level ratio measurements (Harnack constants, profiles);
//   coarse_step: min(delta_t, kappa/(2d))  -- |lambda h| <= 2, for long
//                burn-ins where only the smooth late-time field matters.
double oracle_step(const RateField& f);
double survey_step(const RateField& f);
double coarse_step(const RateField& f);

// Single sources of truth used by every verifier that touches q or p*.
inline double heat_kernel_value(double p, double rho) {
  if (!(rho >= 1e-12)) throw std::domain_error("heat_kernel: rho below 1e-12");
  return p / rho;
}
inline double adjoint_kernel_value(double p_killed, double rho_xt, double rho_ys) {
  return heat_kernel_value(p_killed, rho_ys) * rho_xt;
}

// ---------------------------------------------------------------- torus
struct KernelSlice {
  TorusDomain dom;
  SpaceTime base;     // (x,t) the kernel starts from
  double time = 0.0;  // slice time s (absolute)
  std::vector<double> values;

  double mass() const;
  double at(const Pt& x) const { return values[dom.index(x)]; }
};

class TorusEvolver {
 public:
  // Forward: Fokker-Planck evolution, time moves up, rates gathered at the
  // source site of each jump.  Backward: generator form (rates at the center
  // site), time moves down; advance_to then expects t < time().  Backward
  // solves give u(z,s) = E^{z,s}[f(X at terminal time)] for all z at once.
  enum class Mode { Forward, Backward };

  TorusEvolver(const RateField& f, const TorusDomain& dom, double t0,
               Mode mode = Mode::Forward);

  int add_state(std::vector<double> init);
  int add_delta(const Pt& x);     // unit mass at x
  int add_uniform(double value);  // constant field

  // Applies the frozen-rate forward operator of the cell containing t_eval.
  void eval_derivative(double t_eval, const std::vector<double>& u, std::vector<double>& out);
  std::vector<double>& state(int id) { return states_[id]; }
  const std::vector<double>& state(int id) const { return states_[id]; }
  double time() const { return t_; }
  const TorusDomain& dom() const { return dom_; }

  void advance_to(double t, double h_target);
  // Stops exactly at each requested time (ascending, > time()) and calls cb.
  void advance_with_snapshots(double t, double h_target, const std::vector<double>& snaps,
                              const std::function<void(double)>& cb);

  double mass(int id) const;

 private:
  void refresh_rates(int64_t cell);
  void rk4_step(double h);
  void derivative(const std::vector<double>& u, std::vector<double>& k) const;

  RateField f_;
  TorusDomain dom_;
  Mode mode_;
  double t_;
  int64_t cached_cell_;
  std::vector<std::vector<double>> states_;
  std::vector<std::vector<double>> a_;  // per axis, per site
  std::vector<double> tot_;
  std::vector<std::array<int64_t, 2>> line_nbr_[kMaxDim];  // per axis>=1: line -> ± bases
  std::vector<double> k_, tmp_, acc_;
};

// delta at base evolved for `elapsed`; h_target < 0 means oracle step.
KernelSlice forward(const RateField& f, const TorusDomain& dom, const SpaceTime& base,
                    double elapsed, double h_target = -1.0);

// ---------------------------------------------------------------- regions
struct KilledResult {
  Region region;
  SpaceTime base;
  double time = 0.0;
  std::vector<double> values;    // box array, zero off-interior
  double survival = 0.0;         // sum over interior
  std::vector<double> absorbed;  // per boundary site, time-integrated flux

  double at(const Pt& x) const {
    const int64_t i = region.box_index(x);
    return i < 0 ? 0.0 : values[i];
  }
};

class RegionEvolver {
 public:
  enum class Mode { ForwardKilled, BackwardCaloric };

  // Forward: init is the box array at time t0 (zero off-interior).
  // Backward: init is the terminal slice at time t0 (= T), with boundary
  // entries overwritten from `lateral` each cell; time then moves down.
  RegionEvolver(const RateField& f, const Region& rg, Mode mode, double t0,
                std::vector<double> init);

  // Lateral Dirichlet data, constant on delta_t cells: (boundary idx, cell) -> value.
  void set_lateral(std::function<double(int64_t, int64_t)> lateral);

  // Record absorbed-mass increments binned per delta_t cell (forward mode).
  void enable_cell_flux(int64_t cell_lo, int64_t cell_hi);
  // Record per-cell time-integrals of u over the interior ring adjacent to
  // the boundary (backward mode; used to evaluate boundary-slot functionals).
  void enable_ring_integrals(int64_t cell_lo, int64_t cell_hi);

  void run_to(double t, double h_target);  // forward: t > time(); backward: t < time()
  void run_with_snapshots(double t, double h_target, const std::vector<double>& times,
                          const std::function<void(double)>& cb);

  double time() const { return t_; }
  const Region& region() const { return rg_; }
  const std::vector<double>& values() const { return u_; }
  const std::vector<double>& absorbed() const { return abs_; }
  double survival() const;

  // cell-indexed recordings; index [cell - cell_lo][boundary or ring slot]
  const std::vector<std::vector<double>>& cell_flux() const { return cell_flux_; }
  const std::vector<std::vector<double>>& ring_integrals() const { return ring_int_; }
  const std::vector<int64_t>& ring_sites() const { return ring_sites_; }
  int64_t cell_lo() const { return rec_cell_lo_; }

  double rate_at(int64_t box_idx, int axis) const { return a_[axis][box_idx]; }

 private:
  void refresh_rates(int64_t cell);
  void impose_lateral(int64_t cell);
  void rk4_step(double h_signed);
  void derivative(const std::vector<double>& u, std::vector<double>& k,
                  std::vector<double>& kabs) const;
  void record_cell_end(int64_t cell);

  RateField f_;
  Region rg_;
  Mode mode_;
  double t_;
  int64_t cached_cell_;
  std::vector<double> u_, abs_, abs_mark_;
  std::vector<double> a_[kMaxDim], tot_;
  std::function<double(int64_t, int64_t)> lateral_;
  bool rec_flux_ = false, rec_ring_ = false;
  int64_t rec_cell_lo_ = 0, rec_cell_hi_ = 0;
  std::vector<std::vector<double>> cell_flux_, ring_int_;
  std::vector<int64_t> ring_sites_;       // box indices of the interior ring
  std::vector<double> ring_acc_, ring_mark_;
  std::vector<double> k_, tmp_, acc_, kabs_, ring_k_;
};

// Killed kernel p_R: delta at base, absorbed outside the region.
KilledResult killed_forward(const RateField& f, const Region& rg, const SpaceTime& base,
                            double elapsed, double h_target = -1.0);

struct CaloricSolution {
  Region region;
  std::vector<double> times;                // descending as solved; stored ascending
  std::vector<std::vector<double>> slices;  // box arrays matching `times`
  double at(size_t ti, const Pt& x) const {
    const int64_t i = region.box_index(x);
    return i < 0 ? 0.0 : slices[ti][i];
  }
};

// Solve L u = 0 on region x [t0, T] downward from terminal data (box array at
// T) with lateral Dirichlet data; returns slices at `times` (ascending) plus
// always the slice at t0 (prepended if absent).
CaloricSolution solve_caloric(const RateField& f, const Region& rg, double t0, double T,
                              std::vector<double> terminal,
                              std::function<double(int64_t, int64_t)> lateral,
                              std::vector<double> times, double h_target = -1.0);

}  // namespace rwre

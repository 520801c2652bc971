#pragma once
// Time-dependent invariant density rho of the forward (Fokker-Planck)
// evolution on the torus, normalized to spatial mean one.  rho is obtained by
// burning in the forward equation from the uniform field: the equation
// contracts toward a unique pulled-back trajectory, so after a long enough
// burn-in the slice at the target time is independent of the start to the
// requested accuracy.  The returned field can then be advanced in time, which
// keeps it on the invariant trajectory.

#include <array>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/grid.hpp"
#include "rwre/kernel.hpp"

namespace rwre {

struct BurnInSpec {
  double budget = -1.0;  // burn-in duration; < 0 selects the default 8 L^2
  double h = -1.0;       // integration step; < 0 selects coarse_step()
  // Spatially constant rate fields have the uniform density as an exact
  // stationary state; skip the burn-in entirely for them.
  bool skip_if_homogeneous = true;
};

class DensityField {
 public:
  DensityField(const RateField& f, const TorusDomain& dom, double time,
               std::vector<double> rho);

  const TorusDomain& dom() const { return ev_.dom(); }
  double time() const { return ev_.time(); }
  const std::vector<double>& values() const { return ev_.state(0); }
  double at(const Pt& x) const { return ev_.state(0)[ev_.dom().index(x)]; }

  // Advance the density along the forward equation (mass is conserved, so the
  // mean-one normalization is preserved to rounding).
  void advance_to(double t, double h_target = -1.0);

 private:
  TorusEvolver ev_;
  double h_default_;
};

// Burn in from uniform over [t_target - budget, t_target].
DensityField compute_rho(const RateField& f, const TorusDomain& dom, double t_target,
                         const BurnInSpec& spec = {});

// Density stored on a uniform time grid t0, t0+step, ..., t1.  Off-grid times
// are linearly interpolated (rho is absolutely continuous in t, so linear
// interpolation between slices at step <= delta_t is second-order accurate).
class RhoGrid {
 public:
  RhoGrid(TorusDomain dom, double t0, double step, std::vector<std::vector<double>> slices,
          double burn_in);

  const TorusDomain& dom() const { return dom_; }
  double t0() const { return t0_; }
  double t1() const { return t0_ + step_ * static_cast<double>(slices_.size() - 1); }
  double step() const { return step_; }
  int slices() const { return static_cast<int>(slices_.size()); }
  double slice_time(int j) const { return t0_ + step_ * j; }
  const std::vector<double>& slice(int j) const { return slices_.at(j); }
  std::vector<double>& slice_mutable(int j) { return slices_.at(j); }
  double burn_in() const { return burn_in_; }

  // Linear interpolation between the two bracketing slices.
  double at(const Pt& x, double t) const;
  std::vector<double> interpolated(double t) const;

  // Every factor-th slice of the same trajectory (coarser audit grid).
  RhoGrid subsample(int factor) const;

 private:
  TorusDomain dom_;
  double t0_, step_, burn_in_;
  std::vector<std::vector<double>> slices_;
};

// Burn in from uniform over [t0 - burn-in, t0], then record slices on
// [t0, t1] at the given grid step (default: one rate cell).  The recorded
// stretch is integrated at oracle_step so the stored trajectory tracks the
// exact flow as closely as possible.
RhoGrid compute_rho_grid(const RateField& f, const TorusDomain& dom, double t0, double t1,
                         double grid_step = -1.0, const BurnInSpec& spec = {});

struct RhoAudit {
  double residual = 0.0;  // sup-norm defect of the forward equation
  double audit_time = 0.0;
};

// Checks d(rho)/dt = (forward operator) rho by a centered difference taken
// strictly inside one rate cell (rates are frozen there).  h_fd < 0 selects
// min(1e-3, delta_t / 8).
RhoAudit invariance_residual(const RateField& f, const DensityField& rho,
                             double h_fd = -1.0);

// Grid-based audit: max over interior grid points t_j of
//   | (rho_{j+1} - rho_{j-1}) / (2 step)  -  (forward operator) rho_j |,
// skipping grid points within `exclusion_margin` of a rate-cell boundary
// (the time derivative jumps there).  margin < 0 excludes only the boundary
// instants themselves.
RhoAudit invariance_residual(const RateField& f, const RhoGrid& rho,
                             double exclusion_margin = -1.0);

// Sum of values over the Euclidean lattice ball |y - center|_2 <= radius.
double rho_ball(const TorusDomain& dom, const std::vector<double>& values, const Pt& center,
                double radius);
double rho_ball(const DensityField& rho, const Pt& center, double radius);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;  // standard error of the mean
  int count = 0;
};

// Monte Carlo estimate of E[rho(0,0)^p] over an ensemble of independent
// environments drawn by re-seeding `proto` (seed_i = proto.seed + i).
MomentEstimate rho_moment(const EnvParams& proto, int n_envs, double p, int torus_side,
                          double burn_in);

// Ergodic estimate of the diffusivity matrix diagonal at the field's current
// time: Sigma_ii = 2 <rho a_i> / <rho>, averaged over the torus.
std::array<double, kMaxDim> sigma_diag_estimate(const RateField& f,
                                                const DensityField& rho);

}  // namespace rwre

#pragma once
// Verifiers: one per quantitative statement under test. Each consumes
// kernel/density/walker outputs for a given environment family and produces a
// VerificationReport with measured constants, the thresholds they were held
// to, and a pass flag that is a pure function of both.
//
// Geometry defaults are the desk-scale acceptance settings; tests shrink them
// via the option structs. Every verifier is deterministic given (env params,
// options): Monte Carlo draws come from counter-based streams seeded by
// mc_seed, and all reductions are fixed-order.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rwre/density.hpp"
#include "rwre/env.hpp"
#include "rwre/grid.hpp"
#include "rwre/kernel.hpp"
#include "rwre/report.hpp"
#include "rwre/walker.hpp"

namespace rwre {

// ------------------------------------------------------------------ helpers

// Centered Gaussian density with diagonal covariance t * diag(sigma): the
// continuum kernel the local limit is held against.
double gaussian_density(int d, const std::array<double, kMaxDim>& sigma_diag,
                        const std::array<double, kMaxDim>& x, double t);

// Time integral of the Gaussian density, d >= 3:
// g(x) = Gamma(d/2-1) / (2 pi^{d/2} sqrt(det Sigma) * Q^{(d-2)/2}), with
// Q = x^T Sigma^{-1} x. Matches the numeric quadrature of gaussian_density.
double gaussian_green(int d, const std::array<double, kMaxDim>& sigma_diag,
                      const std::array<double, kMaxDim>& x);
// Independent evaluation by adaptive time-quadrature (oracle for the above).
double gaussian_green_quadrature(int d, const std::array<double, kMaxDim>& sigma_diag,
                                 const std::array<double, kMaxDim>& x);

// Ensemble member i of a family: same parameters, seed = proto.seed + i.
EnvParams ensemble_member(const EnvParams& proto, int i);

// Per-axis diffusivity diag(2 E_Q[a_i]) estimated from the invariant density
// on a torus of side `side`, averaged over `n_slices` times spread across one
// rate cell after burn-in `burn`.
std::array<double, kMaxDim> resolve_sigma(const RateField& f, int side, double burn,
                                          int n_slices = 4);

// Forward kernel q(0,0; x,t) and invariant density evolved in lockstep on one
// torus and sampled at the requested times (delta released at time 0, density
// burned in from -burn_in). Single source of truth for the kernel values
// shared by the local-limit and heat-kernel checks: identical arguments give
// bitwise-identical slices regardless of caller. rho slices are normalized to
// spatial mean one; q slices carry exact unit mass (conserved by the scheme).
struct KernelRhoSnapshots {
  TorusDomain dom;
  std::vector<double> times;
  std::vector<std::vector<double>> q;    // box-indexed kernel slices
  std::vector<std::vector<double>> rho;  // matching density slices
};
KernelRhoSnapshots kernel_rho_snapshots(const RateField& f, int side, double burn_in,
                                        const std::vector<double>& times, double h);

// ---------------------------------------------------- Harnack machinery
// Evaluations u_g(probe) of every extreme ray g of the nonnegative solution
// cone on a killed cylinder, at a finite probe set. Rows are generators
// (lateral (boundary site, time cell) indicators first, then terminal or
// initial site deltas), columns are probes.
struct GeneratorBasis {
  std::vector<std::vector<double>> M;            // [generator][probe]
  std::vector<SpaceTime> probes;
  std::vector<int> sup_probes, inf_probes;       // probe indices per window
  std::vector<std::pair<int, int64_t>> lateral;  // (cell, boundary index)
  std::vector<int64_t> terminal;                 // region box indices
};

struct PhiWindows {
  double ball_radius = 0.0;            // probe sites: |x|_2 <= ball_radius
  int site_stride = 1;                 // probe site lattice stride
  std::vector<double> sup_times, inf_times;
};

// Forward route: cylinder B_cyl x (0, T); generators are lateral indicators
// and terminal interior deltas; u_g(probe) comes from one killed forward
// solve per probe (exit-law duality).
GeneratorBasis phi_forward_basis(const RateField& f, double cyl_radius, double T,
                                 const PhiWindows& w, double h);

// Adjoint route: cylinder B_cyl x (0, T); generators are lateral indicators
// and *initial*-slice deltas; v_g(probe) comes from one backward killed solve
// per probe plus the exact density reweighting (time-reversal identity).
// rho_* carry the invariant density along the cylinder: full slice at time 0,
// boundary-site values at each cell midpoint, and the value at each probe.
struct AdjointRhoTrace {
  std::vector<double> initial;               // rho(x,0), box-indexed
  std::vector<std::vector<double>> lateral;  // [cell][boundary index]
  std::vector<double> at_probes;             // rho at w-probe points
};
AdjointRhoTrace adjoint_rho_trace(const RateField& f, const Region& rg, double T,
                                  const std::vector<SpaceTime>& probes, int torus_side,
                                  double burn_in);
GeneratorBasis phi_adjoint_basis(const RateField& f, double cyl_radius, double T,
                                 const PhiWindows& w, double h, const AdjointRhoTrace& rho);

// max over generators with positive sup of (max over sup probes) /
// (min over inf probes); throws if some generator has positive sup-window
// values but a vanishing inf-window value (geometry bug by ellipticity).
double harnack_constant(const GeneratorBasis& b);
double harnack_constant(const GeneratorBasis& b, const std::vector<int>& sup,
                        const std::vector<int>& inf);
// Same ratio, but returns +infinity instead of throwing.  Swapped-window
// probes use this: a generator supported between the windows is positive on
// the later one and identically zero on the earlier one, so no finite
// constant exists in that orientation.
double harnack_constant_or_infinity(const GeneratorBasis& b, const std::vector<int>& sup,
                                    const std::vector<int>& inf);

// ------------------------------------------------------------------ checks

struct CltOptions {
  int n_envs = 5;
  int64_t paths_per_env = 20000;
  std::vector<double> t_probes = {50.0, 100.0, 200.0};
  int sigma_side = 64;        // torus for the rho-weighted rate average
  double sigma_burn = 500.0;
  uint64_t mc_seed = 2026;
};
VerificationReport verify_clt(const EnvParams& proto, const CltOptions& opt = {});

struct LltOptions {
  double K = 2.0;
  double t0 = 1.0;
  std::vector<int> n_list = {8, 16, 32};
  double tail_tol = 1e-3;  // image-mass target used to size the tori
};
VerificationReport verify_llt(const EnvParams& env, const LltOptions& opt = {});

struct HkeOptions {
  int side = 192;
  std::vector<double> t_probes = {20, 30, 45, 67, 100, 150, 200};
  double burn_in = 600.0;
  double offdiag_factor = 3.0;  // off-diagonal probes sqrt(t) < |x| <= factor * sqrt(t)
  double band_bound = 50.0;
};
VerificationReport verify_hke(const EnvParams& env, const HkeOptions& opt = {});

struct PhiOptions {
  std::vector<int> R_list = {8, 16};
  int n_envs = 10;
  std::array<double, 3> theta = {0.25, 0.5, 0.75};
};
VerificationReport verify_phi(const EnvParams& proto, const PhiOptions& opt = {});

struct AdjointPhiOptions {
  std::vector<int> R_list = {8, 16};
  int n_envs = 10;
  double rho_burn = -1.0;  // < 0: 8 * (torus side)
};
VerificationReport verify_adjoint_phi(const EnvParams& proto, const AdjointPhiOptions& opt = {});

struct HoelderOptions {
  int R = 8;
  double rho_burn = 512.0;
};
VerificationReport verify_hoelder(const EnvParams& env, const HoelderOptions& opt = {});

struct DoublingOptions {
  std::vector<int> r_list = {4, 8, 16, 32};
  double K = 2.0;     // hitting probes |y| <= K sqrt(s)
  int side = 160;     // torus for the density ratios
  double burn_in = 2048.0;
};
VerificationReport verify_doubling(const EnvParams& env, const DoublingOptions& opt = {});

struct RhoErgodicOptions {
  std::vector<double> r_list = {2, 4, 8, 16};
  int n_envs = 5;
  int side = 64;
  double burn_in = 1024.0;
};
VerificationReport verify_rho_ergodic(const EnvParams& proto, const RhoErgodicOptions& opt = {});

struct Green2dOptions {
  std::vector<int> n_list = {8, 16, 32};
  double x_frac = 0.25;    // probe x = floor(n * x_frac) e_1
  double t_factor = 20.0;  // T_max = t_factor * n^2
  double snap_ratio = 1.15;
  double rho_burn = 512.0;
};
VerificationReport verify_green2d(const EnvParams& env, const Green2dOptions& opt = {});

struct Green3dOptions {
  std::vector<int> n_list = {4, 8};
  double x_frac = 0.25;
  double t_factor = 20.0;
  double snap_ratio = 1.15;
};
VerificationReport verify_green3d(const EnvParams& env, const Green3dOptions& opt = {});

struct TailsOptions {
  std::vector<double> t_list = {4, 16, 64};
  int64_t n_paths = 20000;
  uint64_t mc_seed = 2026;
};
VerificationReport verify_tails(const EnvParams& env, const TailsOptions& opt = {});

struct ExitOptions {
  int R = 16;
  int n_envs = 10;
  double beta = 0.625;  // annulus inner fraction for the lower-bound probe
};
VerificationReport verify_exit(const EnvParams& proto, const ExitOptions& opt = {});

struct RepresentationOptions {
  int R = 8;
  int rho_side = 32;
  double rho_burn = 512.0;
  // Quadrature ladder (coarse to fine); traces are integrated at the finest
  // step / 4 and subsampled, so all levels share one trajectory.
  std::vector<double> quad_steps = {1.0 / 256, 1.0 / 512, 1.0 / 1024};
};
VerificationReport verify_representation(const EnvParams& env,
                                         const RepresentationOptions& opt = {});

struct BoundaryOptions {
  std::vector<int> R_list = {8, 16};
  double delta = 0.25;  // interior margin for the elliptic-type Harnack
};
VerificationReport verify_boundary(const EnvParams& env, const BoundaryOptions& opt = {});

// Registry used by the CLI: maps check ids to runners with default options.
std::vector<std::string> check_ids();
bool check_exists(const std::string& id);
VerificationReport run_check(const std::string& id, const EnvParams& env);
// Same, with numeric geometry overrides from a job config (unknown keys are
// rejected; recognized keys depend on the check, e.g. R, side, n_envs, paths,
// burn_in, n_min, n_max, t_max, seed, K, beta, delta).
VerificationReport run_check(const std::string& id, const EnvParams& env,
                             const std::map<std::string, double>& geometry);

}  // namespace rwre

#pragma once
// Exact simulation of the continuous-time walk (X_t, T_t) by Poisson
// thinning: candidate events at uniform rate Lambda = 2d/kappa; a candidate
// at absolute time s moves x -> x +/- e_i with probability a_i(x,s)/Lambda
// each, otherwise the walk stays. No discretization error; acceptance is at
// least kappa^2 per candidate by uniform ellipticity.
//
// Ensembles use one counter-based stream per path index, so results are
// bitwise identical for any thread count and schedule.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/prng.hpp"

namespace rwre {

// ---------------------------------------------------------------- paths
struct SpaceTime {
  Pt x = make_pt();
  double t = 0.0;
};

struct PathSample {
  SpaceTime start;
  double horizon = 0.0;  // elapsed time simulated
  // Accepted jumps only: (absolute time, position after the jump).
  std::vector<std::pair<double, Pt>> events;

  Pt position_at(double t_abs) const;  // start.t <= t_abs <= start.t + horizon
  int64_t jump_count() const { return static_cast<int64_t>(events.size()); }
};

PathSample sample_path(const RateField& f, const SpaceTime& start, double horizon,
                       Philox& rng);

// Endpoint-only fast path (no event storage); same law and same draws as
// sample_path with the same rng state.
Pt sample_endpoint(const RateField& f, const SpaceTime& start, double horizon,
                   Philox& rng);

// First segment start (x_k, t_k) with pred(x_k, t_k) false, scanning segments
// in order (the start counts as a segment). nullopt if the path never leaves.
std::optional<std::pair<double, Pt>> exit_time(
    const PathSample& path, const std::function<bool(const Pt&, double)>& pred);

// ---------------------------------------------------------------- ensembles
struct EmpiricalKernel {
  int64_t n_paths = 0;
  SpaceTime start;
  double elapsed = 0.0;
  std::map<Pt, int64_t> counts;  // endpoint -> multiplicity

  double probability(const Pt& x) const {
    auto it = counts.find(x);
    return it == counts.end() ? 0.0
                              : static_cast<double>(it->second) / static_cast<double>(n_paths);
  }
};

// Path i uses stream (seed, stream_base + i).
EmpiricalKernel empirical_kernel(const RateField& f, const SpaceTime& start, double elapsed,
                                 int64_t n_paths, uint64_t seed, uint64_t stream_base = 0);

std::vector<Pt> sample_endpoints(const RateField& f, const SpaceTime& start, double elapsed,
                                 int64_t n_paths, uint64_t seed, uint64_t stream_base = 0);

// counts[j] = #{paths with sup_{s<=t} |X_s - X_0|_2 > r[j]}.
std::vector<int64_t> exceedance_counts(const RateField& f, const SpaceTime& start, double t,
                                       const std::vector<double>& radii, int64_t n_paths,
                                       uint64_t seed, uint64_t stream_base = 0);

// Mean exit time from the Euclidean ball B_R(start.x) over n paths.
struct ExitStats {
  double mean = 0.0;
  double se = 0.0;
  int64_t n = 0;
};
ExitStats mc_ball_exit_time(const RateField& f, const SpaceTime& start, double R,
                            int64_t n_paths, uint64_t seed, double t_cap);

}  // namespace rwre

#include "rwre/walker.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rwre {

namespace {

// One thinning step shared by all samplers. Advances (x, t) to the next
// accepted jump before t_end, or returns false with t = t_end.
// Draw order per candidate: exponential gap, then one uniform for the slot.
inline bool next_jump(const RateField& f, Pt& x, double& t, double t_end, double lambda,
                      Philox& rng) {
  const int d = f.dim();
  while (true) {
    t += rng.exponential(lambda);
    if (t >= t_end) {
      t = t_end;
      return false;
    }
    const double u = rng.uniform() * lambda;
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double a = f.rate(x, t, i);
      if (u < acc + a) {
        x[i] += 1;
        return true;
      }
      if (u < acc + 2.0 * a) {
        x[i] -= 1;
        return true;
      }
      acc += 2.0 * a;
    }
    // u >= total rate: candidate rejected, walk stays.
  }
}

inline double norm2(const Pt& a, const Pt& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double c = static_cast<double>(a[i] - b[i]);
    s += c * c;
  }
  return std::sqrt(s);
}

}  // namespace

PathSample sample_path(const RateField& f, const SpaceTime& start, double horizon,
                       Philox& rng) {
  PathSample p;
  p.start = start;
  p.horizon = horizon;
  Pt x = start.x;
  double t = start.t;
  const double t_end = start.t + horizon, lambda = f.max_total_rate();
  while (next_jump(f, x, t, t_end, lambda, rng)) p.events.emplace_back(t, x);
  return p;
}

Pt sample_endpoint(const RateField& f, const SpaceTime& start, double horizon, Philox& rng) {
  Pt x = start.x;
  double t = start.t;
  const double t_end = start.t + horizon, lambda = f.max_total_rate();
  while (next_jump(f, x, t, t_end, lambda, rng)) {
  }
  return x;
}

Pt PathSample::position_at(double t_abs) const {
  Pt x = start.x;
  for (const auto& [t, y] : events) {
    if (t > t_abs) break;
    x = y;
  }
  return x;
}

std::optional<std::pair<double, Pt>> exit_time(
    const PathSample& path, const std::function<bool(const Pt&, double)>& pred) {
  if (!pred(path.start.x, path.start.t)) return std::make_pair(path.start.t, path.start.x);
  for (const auto& [t, x] : path.events)
    if (!pred(x, t)) return std::make_pair(t, x);
  return std::nullopt;
}

std::vector<Pt> sample_endpoints(const RateField& f, const SpaceTime& start, double elapsed,
                                 int64_t n_paths, uint64_t seed, uint64_t stream_base) {
  std::vector<Pt> out(n_paths);
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n_paths; ++i) {
    Philox rng(seed, stream_base + static_cast<uint64_t>(i));
    out[i] = sample_endpoint(f, start, elapsed, rng);
  }
  return out;
}

EmpiricalKernel empirical_kernel(const RateField& f, const SpaceTime& start, double elapsed,
                                 int64_t n_paths, uint64_t seed, uint64_t stream_base) {
  EmpiricalKernel k;
  k.n_paths = n_paths;
  k.start = start;
  k.elapsed = elapsed;
  const auto ends = sample_endpoints(f, start, elapsed, n_paths, seed, stream_base);
  for (const Pt& x : ends) ++k.counts[x];  // integer merge: order-free
  return k;
}

std::vector<int64_t> exceedance_counts(const RateField& f, const SpaceTime& start, double t,
                                       const std::vector<double>& radii, int64_t n_paths,
                                       uint64_t seed, uint64_t stream_base) {
  const int nr = static_cast<int>(radii.size());
  std::vector<int64_t> counts(nr, 0);
  const double lambda = f.max_total_rate();
#pragma omp parallel if (exec_policy() == Exec::Parallel)
  {
    std::vector<int64_t> local(nr, 0);
#pragma omp for schedule(static) nowait
    for (int64_t i = 0; i < n_paths; ++i) {
      Philox rng(seed, stream_base + static_cast<uint64_t>(i));
      Pt x = start.x;
      double tt = start.t, sup = 0.0;
      const double t_end = start.t + t;
      while (next_jump(f, x, tt, t_end, lambda, rng))
        sup = std::max(sup, norm2(x, start.x, f.dim()));
      for (int j = 0; j < nr; ++j)
        if (sup > radii[j]) ++local[j];
    }
#pragma omp critical
    for (int j = 0; j < nr; ++j) counts[j] += local[j];
  }
  return counts;
}

ExitStats mc_ball_exit_time(const RateField& f, const SpaceTime& start, double R,
                            int64_t n_paths, uint64_t seed, double t_cap) {
  std::vector<double> taus(n_paths, t_cap);
  const double lambda = f.max_total_rate();
#pragma omp parallel for schedule(static) if (exec_policy() == Exec::Parallel)
  for (int64_t i = 0; i < n_paths; ++i) {
    Philox rng(seed, static_cast<uint64_t>(i));
    Pt x = start.x;
    double t = start.t;
    const double t_end = start.t + t_cap;
    while (next_jump(f, x, t, t_end, lambda, rng)) {
      if (norm2(x, start.x, f.dim()) > R) {
        taus[i] = t - start.t;
        break;
      }
    }
  }
  ExitStats st;
  const MeanVar mv = mean_var(taus);
  st.mean = mv.mean;
  st.se = mv.se();
  st.n = n_paths;
  return st;
}

}  // namespace rwre

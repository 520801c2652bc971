// Benchmark: serial reference stepping core vs the OpenMP core, with a
// bitwise-equality assertion between the two results. Exits nonzero if the
// outputs differ in any bit.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rwre/env.hpp"
#include "rwre/grid.hpp"
#include "rwre/kernel.hpp"
#include "rwre/report.hpp"
#include "rwre/stats.hpp"

using namespace rwre;

namespace {

struct RunResult {
  double seconds = 0.0;
  std::vector<double> values;
};

RunResult run_torus(const RateField& f, int side, double t, Exec policy) {
  set_exec_policy(policy);
  Stopwatch sw;
  const TorusDomain dom(f.dim(), side);
  TorusEvolver ev(f, dom, 0.0, TorusEvolver::Mode::Forward);
  const int id = ev.add_delta(make_pt());
  ev.advance_to(t, oracle_step(f));
  return {sw.seconds(), ev.state(id)};
}

RunResult run_killed(const RateField& f, int radius, double t, Exec policy) {
  set_exec_policy(policy);
  Stopwatch sw;
  const Region rg = ball_region(f.dim(), make_pt(), radius);
  std::vector<double> init(static_cast<size_t>(rg.n_box), 0.0);
  init[static_cast<size_t>(rg.box_index(make_pt()))] = 1.0;
  RegionEvolver ev(f, rg, RegionEvolver::Mode::ForwardKilled, 0.0, std::move(init));
  ev.run_to(t, oracle_step(f));
  return {sw.seconds(), ev.values()};
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

int main(int argc, char** argv) {
  int side = 96;
  double t = 8.0;
  if (argc > 1) side = std::atoi(argv[1]);
  if (argc > 2) t = std::atof(argv[2]);

  EnvParams env;  // checkerboard d=2, kappa=0.25, delta_t=1
  const RateField f(env);
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("bench_kernels: d=%d side=%d t=%g threads=%d\n", f.dim(), side, t, threads);

  const RunResult ts = run_torus(f, side, t, Exec::Serial);
  const RunResult tp = run_torus(f, side, t, Exec::Parallel);
  std::printf("  torus forward   serial %8.3fs  parallel %8.3fs  speedup %5.2fx\n",
              ts.seconds, tp.seconds, ts.seconds / tp.seconds);
  if (!bitwise_equal(ts.values, tp.values)) {
    std::printf("  ERROR: torus results differ between serial and parallel cores\n");
    return 1;
  }

  const RunResult ks = run_killed(f, side / 2, t, Exec::Serial);
  const RunResult kp = run_killed(f, side / 2, t, Exec::Parallel);
  std::printf("  region killed   serial %8.3fs  parallel %8.3fs  speedup %5.2fx\n",
              ks.seconds, kp.seconds, ks.seconds / kp.seconds);
  if (!bitwise_equal(ks.values, kp.values)) {
    std::printf("  ERROR: region results differ between serial and parallel cores\n");
    return 1;
  }

  std::printf("  serial and parallel outputs bitwise identical\n");
  set_exec_policy(Exec::Parallel);
  return 0;
}

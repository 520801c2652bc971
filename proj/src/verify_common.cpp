#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rwre/stats.hpp"
#include "rwre/verify.hpp"

namespace rwre {

double gaussian_density(int d, const std::array<double, kMaxDim>& sigma_diag,
                        const std::array<double, kMaxDim>& x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("gaussian_density: t must be positive");
  double val = 1.0;
  for (int i = 0; i < d; ++i) {
    const double s2 = sigma_diag[i] * t;
    val *= std::exp(-x[i] * x[i] / (2.0 * s2)) / std::sqrt(2.0 * std::numbers::pi * s2);
  }
  return val;
}

double gaussian_green(int d, const std::array<double, kMaxDim>& sigma_diag,
                      const std::array<double, kMaxDim>& x) {
  if (d < 3) throw std::invalid_argument("gaussian_green: requires d >= 3");
  double det = 1.0, q = 0.0;
  for (int i = 0; i < d; ++i) {
    det *= sigma_diag[i];
    q += x[i] * x[i] / sigma_diag[i];
  }
  if (!(q > 0.0)) throw std::invalid_argument("gaussian_green: x must be nonzero");
  const double pi = std::numbers::pi;
  return std::tgamma(0.5 * d - 1.0) /
         (2.0 * std::pow(pi, 0.5 * d) * std::sqrt(det) * std::pow(q, 0.5 * d - 1.0));
}

double gaussian_green_quadrature(int d, const std::array<double, kMaxDim>& sigma_diag,
                                 const std::array<double, kMaxDim>& x) {
  if (d < 3) throw std::invalid_argument("gaussian_green_quadrature: requires d >= 3");
  double det = 1.0, q = 0.0;
  for (int i = 0; i < d; ++i) {
    det *= sigma_diag[i];
    q += x[i] * x[i] / sigma_diag[i];
  }
  // Log-time trapezoid over [t_lo, t_hi] plus the analytic large-t tail of
  // (2 pi t)^{-d/2} (det)^{-1/2} (1 - q/(2t) + ...).
  const double t_lo = q / 100.0;  // integrand ~ e^{-50}: negligible below
  const double t_hi = q * 1e6;
  const int n = 200000;
  const double y_lo = std::log(t_lo), y_hi = std::log(t_hi);
  const double h = (y_hi - y_lo) / n;
  std::vector<double> terms(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double t = std::exp(y_lo + h * j);
    std::array<double, kMaxDim> xx = x;
    double w = gaussian_density(d, sigma_diag, xx, t) * t;  // d t = t d(log t)
    if (j == 0 || j == n) w *= 0.5;
    terms[j] = w * h;
  }
  const double pi = std::numbers::pi;
  const double body = pairwise_sum(terms);
  const double half_d = 0.5 * d;
  const double tail = std::pow(2.0 * pi, -half_d) / std::sqrt(det) *
                      (std::pow(t_hi, 1.0 - half_d) / (half_d - 1.0) -
                       0.5 * q * std::pow(t_hi, -half_d) / half_d);
  return body + tail;
}

EnvParams ensemble_member(const EnvParams& proto, int i) {
  EnvParams p = proto;
  p.seed = proto.seed + static_cast<uint64_t>(i);
  return p;
}

std::array<double, kMaxDim> resolve_sigma(const RateField& f, int side, double burn,
                                          int n_slices) {
  const TorusDomain dom(f.dim(), side);
  BurnInSpec spec;
  spec.budget = burn;
  DensityField rho = compute_rho(f, dom, 0.0, spec);
  std::array<double, kMaxDim> acc{};
  for (int j = 0; j < n_slices; ++j) {
    const double t = (static_cast<double>(j) + 0.5) / n_slices * f.delta_t();
    rho.advance_to(t);
    const auto s = sigma_diag_estimate(f, rho);
    for (int i = 0; i < f.dim(); ++i) acc[i] += s[i];
  }
  for (int i = 0; i < f.dim(); ++i) acc[i] /= n_slices;
  return acc;
}

KernelRhoSnapshots kernel_rho_snapshots(const RateField& f, int side, double burn_in,
                                        const std::vector<double>& times, double h) {
  if (times.empty()) throw std::invalid_argument("kernel_rho_snapshots: empty time list");
  for (size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] > 0.0) || (j > 0 && !(times[j] > times[j - 1])))
      throw std::invalid_argument("kernel_rho_snapshots: times must be positive increasing");
  }
  KernelRhoSnapshots out;
  out.dom = TorusDomain(f.dim(), side);
  out.times = times;
  // A homogeneous field holds the uniform profile exactly, so its burn-in is
  // a no-op and is skipped; the kernel trajectory from time 0 is unaffected.
  const double start =
      (f.params().model == EnvModel::Homogeneous) ? 0.0 : -std::abs(burn_in);
  TorusEvolver ev(f, out.dom, start, TorusEvolver::Mode::Forward);
  const int rho_id = ev.add_uniform(1.0);
  if (start < 0.0) ev.advance_to(0.0, h);
  const int q_id = ev.add_delta(Pt{});
  ev.advance_with_snapshots(times.back(), h, times, [&](double) {
    out.q.push_back(ev.state(q_id));
    std::vector<double> r = ev.state(rho_id);
    const double scale = static_cast<double>(r.size()) / pairwise_sum(r);
    for (double& v : r) v *= scale;
    out.rho.push_back(std::move(r));
  });
  return out;
}

namespace {

double harnack_ratio(const GeneratorBasis& b, const std::vector<int>& sup,
                     const std::vector<int>& inf, bool allow_infinite) {
  double worst = 0.0;
  for (const auto& row : b.M) {
    double s = 0.0;
    for (int p : sup) s = std::max(s, row[p]);
    if (s <= 0.0) continue;  // generator invisible from the sup window
    double i = std::numeric_limits<double>::infinity();
    for (int p : inf) i = std::min(i, row[p]);
    if (!(i > 0.0)) {
      if (allow_infinite) return std::numeric_limits<double>::infinity();
      throw std::runtime_error(
          "harnack_constant: zero inf-window value for a generator visible from the sup "
          "window (geometry bug: ellipticity forbids this)");
    }
    worst = std::max(worst, s / i);
  }
  return worst;
}

}  // namespace

double harnack_constant(const GeneratorBasis& b, const std::vector<int>& sup,
                        const std::vector<int>& inf) {
  return harnack_ratio(b, sup, inf, false);
}

double harnack_constant(const GeneratorBasis& b) {
  return harnack_ratio(b, b.sup_probes, b.inf_probes, false);
}

double harnack_constant_or_infinity(const GeneratorBasis& b, const std::vector<int>& sup,
                                    const std::vector<int>& inf) {
  return harnack_ratio(b, sup, inf, true);
}

std::vector<std::string> check_ids() {
  return {"clt",     "llt",         "hke",     "phi",    "adjoint_phi",
          "hoelder", "doubling",    "rho_ergodic", "green2d", "green3d",
          "tails",   "exit",        "representation", "boundary"};
}

bool check_exists(const std::string& id) {
  for (const auto& c : check_ids())
    if (c == id) return true;
  return false;
}

VerificationReport run_check(const std::string& id, const EnvParams& env) {
  return run_check(id, env, {});
}

namespace {

struct GeometryReader {
  const std::map<std::string, double>& geo;
  mutable std::map<std::string, bool> used;

  bool has(const std::string& k) const {
    auto it = geo.find(k);
    if (it == geo.end()) return false;
    used[k] = true;
    return true;
  }
  double get(const std::string& k, double fallback) const {
    auto it = geo.find(k);
    if (it == geo.end()) return fallback;
    used[k] = true;
    return it->second;
  }
  int get_int(const std::string& k, int fallback) const {
    return static_cast<int>(std::llround(get(k, fallback)));
  }
  void finish(const std::string& id) const {
    for (const auto& [k, v] : geo)
      if (!used.count(k))
        throw std::invalid_argument("check '" + id + "': unknown geometry key '" + k + "'");
  }
};

std::vector<int> pow2_range(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; n *= 2) out.push_back(n);
  return out;
}

}  // namespace

VerificationReport run_check(const std::string& id, const EnvParams& env,
                             const std::map<std::string, double>& geometry) {
  const GeometryReader g{geometry, {}};
  VerificationReport rep;
  if (id == "clt") {
    CltOptions o;
    o.n_envs = g.get_int("n_envs", o.n_envs);
    o.paths_per_env = g.get_int("paths", static_cast<int>(o.paths_per_env));
    o.sigma_side = g.get_int("sigma_side", o.sigma_side);
    o.sigma_burn = g.get("sigma_burn", o.sigma_burn);
    o.mc_seed = static_cast<uint64_t>(g.get("seed", static_cast<double>(o.mc_seed)));
    if (g.has("t_max")) {
      const double tm = g.get("t_max", 200.0);
      o.t_probes = {tm / 4.0, tm / 2.0, tm};
    }
    g.finish(id);
    rep = verify_clt(env, o);
  } else if (id == "llt") {
    LltOptions o;
    o.K = g.get("K", o.K);
    o.t0 = g.get("t0", o.t0);
    if (g.has("n_min") || g.has("n_max"))
      o.n_list = pow2_range(g.get_int("n_min", 8), g.get_int("n_max", 32));
    g.finish(id);
    rep = verify_llt(env, o);
  } else if (id == "hke") {
    HkeOptions o;
    o.side = g.get_int("side", o.side);
    o.burn_in = g.get("burn_in", o.burn_in);
    if (g.has("t_max")) {
      const double tm = g.get("t_max", 200.0);
      o.t_probes.clear();
      for (double t = tm / 10.0; t < tm * 0.999; t *= 1.5) o.t_probes.push_back(t);
      o.t_probes.push_back(tm);
    }
    g.finish(id);
    rep = verify_hke(env, o);
  } else if (id == "phi") {
    PhiOptions o;
    o.n_envs = g.get_int("n_envs", o.n_envs);
    if (g.has("R")) {
      const int R = g.get_int("R", 8);
      o.R_list = {R, 2 * R};
    }
    g.finish(id);
    rep = verify_phi(env, o);
  } else if (id == "adjoint_phi") {
    AdjointPhiOptions o;
    o.n_envs = g.get_int("n_envs", o.n_envs);
    o.rho_burn = g.get("burn_in", o.rho_burn);
    if (g.has("R")) {
      const int R = g.get_int("R", 8);
      o.R_list = {R, 2 * R};
    }
    g.finish(id);
    rep = verify_adjoint_phi(env, o);
  } else if (id == "hoelder") {
    HoelderOptions o;
    o.R = g.get_int("R", o.R);
    o.rho_burn = g.get("burn_in", o.rho_burn);
    g.finish(id);
    rep = verify_hoelder(env, o);
  } else if (id == "doubling") {
    DoublingOptions o;
    o.K = g.get("K", o.K);
    o.side = g.get_int("side", o.side);
    o.burn_in = g.get("burn_in", o.burn_in);
    if (g.has("r_max")) {
      const int rm = g.get_int("r_max", 32);
      o.r_list.clear();
      for (int r = 4; r <= rm; r *= 2) o.r_list.push_back(r);
    }
    g.finish(id);
    rep = verify_doubling(env, o);
  } else if (id == "rho_ergodic") {
    RhoErgodicOptions o;
    o.n_envs = g.get_int("n_envs", o.n_envs);
    o.side = g.get_int("side", o.side);
    o.burn_in = g.get("burn_in", o.burn_in);
    g.finish(id);
    rep = verify_rho_ergodic(env, o);
  } else if (id == "green2d") {
    Green2dOptions o;
    if (g.has("n_min") || g.has("n_max"))
      o.n_list = pow2_range(g.get_int("n_min", 8), g.get_int("n_max", 32));
    o.t_factor = g.get("t_factor", o.t_factor);
    o.rho_burn = g.get("burn_in", o.rho_burn);
    g.finish(id);
    rep = verify_green2d(env, o);
  } else if (id == "green3d") {
    Green3dOptions o;
    if (g.has("n_min") || g.has("n_max"))
      o.n_list = pow2_range(g.get_int("n_min", 4), g.get_int("n_max", 8));
    o.t_factor = g.get("t_factor", o.t_factor);
    g.finish(id);
    rep = verify_green3d(env, o);
  } else if (id == "tails") {
    TailsOptions o;
    o.n_paths = g.get_int("paths", static_cast<int>(o.n_paths));
    o.mc_seed = static_cast<uint64_t>(g.get("seed", static_cast<double>(o.mc_seed)));
    if (g.has("t_max")) {
      const double tm = g.get("t_max", 64.0);
      o.t_list = {tm / 16.0, tm / 4.0, tm};
    }
    g.finish(id);
    rep = verify_tails(env, o);
  } else if (id == "exit") {
    ExitOptions o;
    o.R = g.get_int("R", o.R);
    o.n_envs = g.get_int("n_envs", o.n_envs);
    o.beta = g.get("beta", o.beta);
    g.finish(id);
    rep = verify_exit(env, o);
  } else if (id == "representation") {
    RepresentationOptions o;
    o.R = g.get_int("R", o.R);
    o.rho_side = g.get_int("side", o.rho_side);
    o.rho_burn = g.get("burn_in", o.rho_burn);
    g.finish(id);
    rep = verify_representation(env, o);
  } else if (id == "boundary") {
    BoundaryOptions o;
    o.delta = g.get("delta", o.delta);
    if (g.has("R")) {
      const int R = g.get_int("R", 8);
      o.R_list = {R, 2 * R};
    }
    g.finish(id);
    rep = verify_boundary(env, o);
  } else {
    throw std::invalid_argument("unknown check id: " + id);
  }
  return rep;
}

}  // namespace rwre

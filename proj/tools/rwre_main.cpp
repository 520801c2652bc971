#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "rwre/config.hpp"
#include "rwre/density.hpp"
#include "rwre/env.hpp"
#include "rwre/kernel.hpp"
#include "rwre/prng.hpp"
#include "rwre/verify.hpp"
#include "rwre/walker.hpp"

namespace {

using namespace rwre;
using ordered_json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --env accepts either inline JSON ('{...}') or a path to a JSON file
EnvParams parse_env(const std::string& spec) {
  if (spec.empty()) return EnvParams{};
  const size_t first = spec.find_first_not_of(" \t\n");
  if (first != std::string::npos && spec[first] == '{')
    return EnvParams::from_json_string(spec);
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open environment file " + spec);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return EnvParams::from_json_string(text);
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("expected key=value, got \"" + kv + "\"");
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

int cmd_simulate(const std::string& env_spec, int64_t paths, double horizon,
                 uint64_t seed, const std::string& out_path) {
  const EnvParams env = parse_env(env_spec);
  const RateField f(env);
  const int d = f.dim();
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "path,t";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  out << "\n";
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  for (int64_t j = 0; j < paths; ++j) {
    Philox gen(seed, static_cast<uint64_t>(j));
    const Pt x = sample_endpoint(f, SpaceTime{}, horizon, gen);
    out << j << "," << g17(horizon);
    for (int i = 0; i < d; ++i) {
      out << "," << x[i];
      mean[i] += static_cast<double>(x[i]);
      sq[i] += static_cast<double>(x[i]) * x[i];
    }
    out << "\n";
  }
  std::cout << "simulate: " << paths << " paths to t=" << horizon << " -> " << out_path
            << "\n";
  for (int i = 0; i < d; ++i) {
    const double m = mean[i] / static_cast<double>(paths);
    const double v = sq[i] / static_cast<double>(paths) - m * m;
    std::cout << "  axis " << i << ": mean " << m << ", var/t " << v / horizon << "\n";
  }
  return 0;
}

int cmd_kernel(const std::string& env_spec, int side, double t, double gamma,
               const std::string& out_path, const std::string& summary_path) {
  const EnvParams env = parse_env(env_spec);
  const RateField f(env);
  if (!(t > 0.0)) throw std::invalid_argument("kernel: t must be positive");
  const TorusDomain dom(f.dim(), side);
  TorusEvolver ev(f, dom, 0.0, TorusEvolver::Mode::Forward);
  const int id = ev.add_delta(make_pt());
  ev.advance_to(t, survey_step(f));
  const auto& q = ev.state(id);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  for (int i = 0; i < f.dim(); ++i) out << (i ? "," : "") << "x" << i;
  out << ",q\n";
  double qmin = q[0], qmax = q[0], tail = 0.0;
  const double r_tail = gamma * std::sqrt(t);
  for (int64_t k = 0; k < dom.n; ++k) {
    const Pt x = dom.point(k);
    double n2 = 0.0;
    for (int i = 0; i < f.dim(); ++i) {
      out << (i ? "," : "") << x[i];
      n2 += static_cast<double>(x[i]) * x[i];
    }
    out << "," << g17(q[k]) << "\n";
    qmin = std::min(qmin, q[k]);
    qmax = std::max(qmax, q[k]);
    if (n2 > r_tail * r_tail) tail += q[k];
  }
  ordered_json s;
  s["side"] = side;
  s["t"] = t;
  s["mass"] = ev.mass(id);
  s["origin_value"] = q[dom.index(make_pt())];
  s["min"] = qmin;
  s["max"] = qmax;
  s["gamma"] = gamma;
  s["tail_mass_beyond_gamma_sqrt_t"] = tail;
  std::ofstream sum(summary_path, std::ios::binary);
  if (!sum) throw std::runtime_error("cannot write " + summary_path);
  sum << s.dump(2) << "\n";
  std::cout << "kernel: side " << side << ", t=" << t << " -> " << out_path << ", "
            << summary_path << "\n";
  return 0;
}

int cmd_rho(const std::string& env_spec, int side, double t, double burn,
            const std::string& out_path, const std::string& audit_path) {
  const EnvParams env = parse_env(env_spec);
  const RateField f(env);
  const TorusDomain dom(f.dim(), side);
  BurnInSpec spec;
  spec.budget = burn;
  const DensityField rho = compute_rho(f, dom, t, spec);
  const auto& r = rho.values();

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  for (int i = 0; i < f.dim(); ++i) out << (i ? "," : "") << "x" << i;
  out << ",rho\n";
  double rmin = r[0], rmax = r[0], sum = 0.0;
  for (int64_t k = 0; k < dom.n; ++k) {
    const Pt x = dom.point(k);
    for (int i = 0; i < f.dim(); ++i) out << (i ? "," : "") << x[i];
    out << "," << g17(r[k]) << "\n";
    rmin = std::min(rmin, r[k]);
    rmax = std::max(rmax, r[k]);
    sum += r[k];
  }
  const RhoAudit audit = invariance_residual(f, rho);
  ordered_json a;
  a["side"] = side;
  a["t"] = t;
  a["burn_in"] = burn;
  a["mean"] = sum / static_cast<double>(dom.n);
  a["min"] = rmin;
  a["max"] = rmax;
  a["invariance_residual"] = audit.residual;
  a["audit_time"] = audit.audit_time;
  std::ofstream au(audit_path, std::ios::binary);
  if (!au) throw std::runtime_error("cannot write " + audit_path);
  au << a.dump(2) << "\n";
  std::cout << "rho: side " << side << ", t=" << t << " -> " << out_path << ", "
            << audit_path << " (residual " << audit.residual << ")\n";
  return 0;
}

int cmd_verify(const std::string& check, const std::string& env_spec,
               const std::vector<std::string>& sets, const std::string& out_path,
               bool deterministic) {
  if (!check_exists(check)) {
    std::cerr << "verify: unknown check \"" << check << "\"\n";
    return 2;
  }
  const EnvParams env = parse_env(env_spec);
  const VerificationReport rep = run_check(check, env, parse_overrides(sets));
  const std::string path = out_path.empty() ? check + "_report.json" : out_path;
  rep.save(path, deterministic);
  std::cout << check << ": " << (rep.pass ? "PASS" : "FAIL") << " ("
            << rep.runtime_seconds << "s) -> " << path << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (const char* cap = std::getenv("RWRE_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) omp_set_num_threads(std::min(c, omp_get_max_threads()));
  }
#endif
  CLI::App app{"random walks in balanced time-dependent random environments"};
  app.require_subcommand(1);

  std::string env_spec, out_path, summary_path, check_id, config_path, dir_path;
  std::vector<std::string> sets;
  int64_t paths = 1000;
  double horizon = 64.0, t_slice = 16.0, burn = -1.0, gamma = 3.0;
  int side = 64;
  uint64_t seed = 2026;
  bool deterministic = false;

  auto* sim = app.add_subcommand("simulate", "sample walk endpoints to CSV");
  sim->add_option("--env", env_spec, "environment JSON (inline or file)");
  sim->add_option("--paths", paths, "number of paths");
  sim->add_option("--t", horizon, "time horizon");
  sim->add_option("--seed", seed, "Monte Carlo seed");
  sim->add_option("--out", out_path, "output CSV")->default_str("endpoints.csv");

  auto* ker = app.add_subcommand("kernel", "solve the forward kernel on a torus");
  ker->add_option("--env", env_spec, "environment JSON (inline or file)");
  ker->add_option("--side", side, "torus side");
  ker->add_option("--t", t_slice, "evaluation time");
  ker->add_option("--gamma", gamma, "tail radius factor gamma*sqrt(t)");
  ker->add_option("--out", out_path, "output CSV")->default_str("kernel.csv");
  ker->add_option("--summary", summary_path, "summary JSON")->default_str("kernel.json");

  auto* rho = app.add_subcommand("rho", "compute the invariant density on a torus");
  rho->add_option("--env", env_spec, "environment JSON (inline or file)");
  rho->add_option("--side", side, "torus side");
  rho->add_option("--t", t_slice, "slice time");
  rho->add_option("--burn", burn, "burn-in duration (<0: default 8 side^2)");
  rho->add_option("--out", out_path, "output CSV")->default_str("rho.csv");
  rho->add_option("--audit", summary_path, "audit JSON")->default_str("rho.json");

  auto* ver = app.add_subcommand("verify", "run one verification check");
  ver->add_option("check", check_id, "check id")->required();
  ver->add_option("--env", env_spec, "environment JSON (inline or file)");
  ver->add_option("--set", sets, "geometry override key=value (repeatable)");
  ver->add_option("--out", out_path, "report JSON path");
  ver->add_flag("--deterministic", deterministic, "zero wall-clock fields in the report");

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "config JSON path")->required();

  auto* agg = app.add_subcommand("aggregate", "summarize a report directory");
  agg->add_option("dir", dir_path, "directory of report JSONs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(env_spec, paths, horizon, seed,
                          out_path.empty() ? "endpoints.csv" : out_path);
    if (ker->parsed())
      return cmd_kernel(env_spec, side, t_slice, gamma,
                        out_path.empty() ? "kernel.csv" : out_path,
                        summary_path.empty() ? "kernel.json" : summary_path);
    if (rho->parsed())
      return cmd_rho(env_spec, side, t_slice, burn, out_path.empty() ? "rho.csv" : out_path,
                     summary_path.empty() ? "rho.json" : summary_path);
    if (ver->parsed()) return cmd_verify(check_id, env_spec, sets, out_path, deterministic);
    if (run->parsed()) return run_experiment(config_path);
    if (agg->parsed()) return aggregate_reports(dir_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

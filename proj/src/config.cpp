#include "rwre/config.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rwre/verify.hpp"

namespace rwre {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// line/column of a 1-based byte offset, for parse diagnostics
std::pair<size_t, size_t> line_column(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  const size_t stop = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (size_t i = 0; i < stop; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void reject_unknown_keys(const ordered_json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("config error: unknown key \"" + k + "\" in " + where);
  }
}

std::map<std::string, double> numeric_map(const ordered_json& j, const std::string& where) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number())
      throw ConfigError("config error: " + where + "." + k + " must be numeric");
    out[k] = v.get<double>();
  }
  return out;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// headline metric per check for the aggregate table; falls back to the first
// recorded metric when a shrunken geometry renames things
std::string key_metric_name(const VerificationReport& rep) {
  static const std::map<std::string, std::string> kKey = {
      {"clt", "ratio_mean"},        {"llt", "E_final_over_first"},
      {"hke", "ondiag_band_ratio"}, {"phi", "C_max"},
      {"adjoint_phi", "C_max"},     {"hoelder", "gamma"},
      {"doubling", "hit_ratio_spread"}, {"rho_ergodic", "band_ratio"},
      {"green2d", "rel_err_final"}, {"green3d", "rel_err_final"},
      {"tails", "C_gauss"},         {"exit", "lower_bound_C"},
      {"representation", "reconstruction_err"}, {"boundary", "C_min"}};
  const auto it = kKey.find(rep.check);
  if (it != kKey.end())
    for (const auto& [k, v] : rep.metrics) {
      (void)v;
      if (k == it->second) return it->second;
    }
  return rep.metrics.empty() ? std::string() : rep.metrics.front().first;
}

struct JobOutcome {
  std::string id;
  bool ran = false;
  bool passed = false;
  double seconds = 0.0;
  std::string error;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("config error: malformed JSON at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + e.what());
  }
  try {
    if (!j.is_object()) throw ConfigError("config error: top level must be an object");
    reject_unknown_keys(j, {"env", "jobs", "output_dir", "global_seed", "workers",
                            "deterministic_output"},
                        "config");
    ExperimentConfig cfg;
    if (!j.contains("env")) throw ConfigError("config error: missing \"env\"");
    cfg.env = EnvParams::from_json_string(j.at("env").dump());
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (cfg.output_dir.empty()) throw ConfigError("config error: empty output_dir");
    if (j.contains("global_seed")) {
      cfg.has_global_seed = true;
      cfg.global_seed = j.at("global_seed").get<uint64_t>();
      cfg.env.seed = cfg.global_seed;
    }
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (cfg.workers < 1) throw ConfigError("config error: workers must be >= 1");
    if (j.contains("deterministic_output"))
      cfg.deterministic_output = j.at("deterministic_output").get<bool>();
    if (j.contains("jobs")) {
      if (!j.at("jobs").is_array())
        throw ConfigError("config error: \"jobs\" must be an array");
      for (const auto& jj : j.at("jobs")) {
        reject_unknown_keys(jj, {"id", "check", "geometry", "thresholds", "budget"},
                            "job");
        JobSpec job;
        job.id = jj.at("id").get<std::string>();
        job.check = jj.at("check").get<std::string>();
        if (job.id.empty()) throw ConfigError("config error: empty job id");
        if (!check_exists(job.check))
          throw ConfigError("config error: job \"" + job.id + "\" references unknown check \"" +
                            job.check + "\"");
        if (jj.contains("geometry"))
          job.geometry = numeric_map(jj.at("geometry"), "job \"" + job.id + "\" geometry");
        if (jj.contains("thresholds"))
          job.thresholds =
              numeric_map(jj.at("thresholds"), "job \"" + job.id + "\" thresholds");
        if (jj.contains("budget")) {
          if (!jj.at("budget").is_number())
            throw ConfigError("config error: job \"" + job.id + "\" budget must be numeric");
          job.budget = jj.at("budget").get<double>();
          if (job.check != "clt" && job.check != "tails")
            throw ConfigError("config error: job \"" + job.id +
                              "\": budget only applies to MC checks (clt, tails)");
          if (job.geometry.count("paths"))
            throw ConfigError("config error: job \"" + job.id +
                              "\": set either budget or geometry.paths, not both");
        }
        cfg.jobs.push_back(std::move(job));
      }
    }
    std::vector<std::string> ids;
    for (const auto& job : cfg.jobs) ids.push_back(job.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw ConfigError("config error: duplicate job id \"" +
                        *std::adjacent_find(ids.begin(), ids.end()) + "\"");
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config error: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

void apply_threshold_overrides(VerificationReport& rep,
                               const std::map<std::string, double>& overrides) {
  if (overrides.empty()) return;
  for (const auto& [name, bound] : overrides) {
    bool found = false;
    for (auto& [key, b] : rep.thresholds)
      if (key.size() > name.size() && key.compare(0, name.size(), name) == 0 &&
          key[name.size()] == ' ') {
        b = bound;
        found = true;
      }
    if (!found)
      throw ConfigError("config error: threshold override: no gate named \"" + name +
                        "\" in check " + rep.check);
    rep.add_note("threshold_override", name + " -> " + format_g17(bound));
  }
  bool pass = true;
  for (const auto& [key, bound] : rep.thresholds) {
    const size_t sp = key.rfind(' ');
    const std::string name = key.substr(0, sp);
    const std::string cmp = key.substr(sp + 1);
    const double value = rep.metric(name);
    if (cmp == "<")
      pass = pass && (value < bound);
    else if (cmp == "<=")
      pass = pass && (value <= bound);
    else if (cmp == ">")
      pass = pass && (value > bound);
    else
      pass = pass && (value >= bound);
  }
  rep.pass = pass;
}

int run_experiment(const std::string& config_path) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::load(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    std::cerr << "config error: cannot create output_dir " << cfg.output_dir << ": "
              << ec.message() << "\n";
    return 2;
  }
  if (cfg.jobs.empty()) {
    std::cout << "run: 0 jobs, nothing to do\n";
    return 0;
  }

  int workers = std::min<int>(cfg.workers, static_cast<int>(cfg.jobs.size()));
  if (const char* cap = std::getenv("RWRE_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) workers = std::min(workers, c);
  }

  std::vector<JobOutcome> outcomes(cfg.jobs.size());
  std::atomic<size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cfg.jobs.size()) return;
      const JobSpec& job = cfg.jobs[i];
      JobOutcome& out = outcomes[i];
      out.id = job.id;
      Stopwatch sw;
      try {
        std::map<std::string, double> geo = job.geometry;
        if (job.budget >= 0.0) geo["paths"] = job.budget;
        if (cfg.has_global_seed && (job.check == "clt" || job.check == "tails") &&
            !geo.count("seed"))
          geo["seed"] = static_cast<double>(cfg.global_seed);
        VerificationReport rep = run_check(job.check, cfg.env, geo);
        apply_threshold_overrides(rep, job.thresholds);
        const fs::path base = fs::path(cfg.output_dir) / job.id;
        rep.save(base.string() + ".json", cfg.deterministic_output);
        std::ofstream csv(base.string() + "_metrics.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write metrics CSV for " + job.id);
        csv << "metric,value\n";
        for (const auto& [k, v] : rep.metrics) csv << k << "," << format_g17(v) << "\n";
        out.ran = true;
        out.passed = rep.pass;
        out.seconds = sw.seconds();
        std::lock_guard<std::mutex> lk(io_mutex);
        std::cout << "[" << job.id << "] check=" << job.check
                  << (rep.pass ? " pass" : " FAIL") << " (" << format_g17(out.seconds)
                  << "s)\n";
      } catch (const std::exception& e) {
        out.error = e.what();
        out.seconds = sw.seconds();
        std::lock_guard<std::mutex> lk(io_mutex);
        std::cout << "[" << job.id << "] ERROR: " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  bool any_error = false, all_pass = true;
  for (const auto& out : outcomes) {
    if (!out.ran) any_error = true;
    all_pass = all_pass && out.ran && out.passed;
  }
  std::cout << "run: " << cfg.jobs.size() << " jobs, "
            << (all_pass ? "all passed" : any_error ? "errors occurred" : "some gates failed")
            << "\n";
  return any_error ? 1 : (all_pass ? 0 : 1);
}

int aggregate_reports(const std::string& dir) {
  struct Row {
    std::string id;
    fs::file_time_type mtime;
    VerificationReport rep;
  };
  std::map<std::string, Row> rows;
  std::error_code ec;
  fs::recursive_directory_iterator it(dir, ec), end;
  if (ec) {
    std::cerr << "aggregate: cannot read directory " << dir << ": " << ec.message() << "\n";
    return 2;
  }
  for (; it != end; ++it) {
    if (!it->is_regular_file()) continue;
    const fs::path p = it->path();
    if (p.extension() != ".json" || p.filename() == "summary.json") continue;
    VerificationReport rep;
    try {
      rep = VerificationReport::load(p.string());
    } catch (const std::exception& e) {
      std::cerr << "aggregate: warning: skipping unreadable report " << p.string() << " ("
                << e.what() << ")\n";
      continue;
    }
    const std::string id = p.stem().string();
    const auto mtime = fs::last_write_time(p, ec);
    auto found = rows.find(id);
    if (found != rows.end()) {
      std::cerr << "aggregate: warning: duplicate id \"" << id
                << "\", keeping the newest report\n";
      if (mtime <= found->second.mtime) continue;
    }
    rows[id] = Row{id, mtime, std::move(rep)};
  }
  if (rows.empty()) {
    std::cerr << "aggregate: no readable reports under " << dir << "\n";
    return 2;
  }

  ordered_json summary;
  summary["n_reports"] = rows.size();
  ordered_json jrows = ordered_json::array();
  std::ostringstream md;
  md << "| check | environment | key constant | pass |\n";
  md << "|---|---|---|---|\n";
  bool all_pass = true;
  for (const auto& [id, row] : rows) {
    const std::string key = key_metric_name(row.rep);
    const double value = key.empty() ? 0.0 : row.rep.metric(key);
    const std::string family = to_string(row.rep.env.model);
    ordered_json r;
    r["id"] = id;
    r["check"] = row.rep.check;
    r["environment"] = family;
    r["key_constant_name"] = key;
    r["key_constant"] = value;
    r["pass"] = row.rep.pass;
    jrows.push_back(r);
    char val[64];
    std::snprintf(val, sizeof(val), "%.6g", value);
    md << "| " << row.rep.check << " | " << family << " | " << key << " = " << val << " | "
       << (row.rep.pass ? "true" : "false") << " |\n";
    all_pass = all_pass && row.rep.pass;
  }
  summary["rows"] = jrows;
  summary["all_pass"] = all_pass;

  const fs::path out_json = fs::path(dir) / "summary.json";
  const fs::path out_md = fs::path(dir) / "summary.md";
  std::ofstream js(out_json, std::ios::binary);
  std::ofstream ms(out_md, std::ios::binary);
  if (!js || !ms) {
    std::cerr << "aggregate: cannot write summary files under " << dir << "\n";
    return 2;
  }
  js << summary.dump(2) << "\n";
  ms << md.str();
  std::cout << "aggregate: " << rows.size() << " reports, "
            << (all_pass ? "all pass" : "failures present") << "\n";
  return 0;
}

}  // namespace rwre

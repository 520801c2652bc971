#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/report.hpp"

namespace rwre {

// Configuration or semantic error in an experiment file; the message carries
// line/column when the underlying problem is a JSON parse failure.  Mapped to
// exit code 2 by the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JobSpec {
  std::string id;
  std::string check;
  std::map<std::string, double> geometry;    // per-check numeric overrides
  std::map<std::string, double> thresholds;  // gate name -> replacement bound
  double budget = -1.0;                      // MC path budget; < 0 keeps default
};

struct ExperimentConfig {
  EnvParams env;
  std::vector<JobSpec> jobs;
  std::string output_dir = "reports";
  bool has_global_seed = false;
  uint64_t global_seed = 0;  // replaces env.seed and MC seeds when present
  int workers = 1;
  bool deterministic_output = true;  // zero out wall-clock fields in reports

  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

// Replace gate bounds by name and re-evaluate the pass flag from the stored
// gate values.  Unknown gate names throw (the job is then reported as failed).
void apply_threshold_overrides(VerificationReport& rep,
                               const std::map<std::string, double>& overrides);

// Executes all jobs of a config (worker pool bounded by config.workers and
// RWRE_THREADS), writing <output_dir>/<id>.json and <id>_metrics.csv per job.
// Returns 0 iff every job ran and passed its gates, 1 otherwise (a throwing
// job is isolated and the rest still run), 2 on config errors.
int run_experiment(const std::string& config_path);

// Collects report JSONs under `dir` (recursively; summary files excluded) into
// summary.json and a Markdown table summary.md with one row per job id:
// check, environment family, key constant, pass.  Unreadable reports are
// skipped with a warning; duplicate ids resolve to the newest file.
// Returns 0 on success, 2 if the directory yields no readable report.
int aggregate_reports(const std::string& dir);

}  // namespace rwre

#pragma once
// Structured result of one verifier run.  Serialization is deterministic:
// insertion-ordered keys, shortest round-trip number formatting, and an
// option to zero the wall-clock field so identical (config, seed) runs
// produce bit-identical files.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rwre/env.hpp"

namespace rwre {

struct VerificationReport {
  std::string check;
  EnvParams env;
  bool pass = true;
  double runtime_seconds = 0.0;
  std::vector<std::pair<std::string, double>> geometry;
  std::vector<uint64_t> seeds;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, double>> thresholds;
  std::vector<std::pair<std::string, std::string>> notes;

  void add_geometry(const std::string& k, double v) { geometry.emplace_back(k, v); }
  void add_metric(const std::string& k, double v);  // rejects non-finite values
  void add_threshold(const std::string& k, double v) { thresholds.emplace_back(k, v); }
  void add_note(const std::string& k, const std::string& v) { notes.emplace_back(k, v); }
  // Records the metric, compares it against the threshold with the given
  // comparison ("<", "<=", ">", ">="), records the threshold, and folds the
  // outcome into `pass`.
  bool gate(const std::string& name, double value, const std::string& cmp, double bound);

  double metric(const std::string& k) const;  // throws if absent

  // deterministic_output replaces runtime_seconds with 0.0 in the output.
  std::string to_json(bool deterministic_output = false) const;
  void save(const std::string& path, bool deterministic_output = false) const;
  static VerificationReport from_json(const std::string& text);
  static VerificationReport load(const std::string& path);
};

// Monotonic wall-clock stopwatch for runtime_seconds.
class Stopwatch {
 public:
  Stopwatch();
  double seconds() const;

 private:
  int64_t start_ns_;
};

}  // namespace rwre

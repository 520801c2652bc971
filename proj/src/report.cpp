#include "rwre/report.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rwre {

using ordered_json = nlohmann::ordered_json;

void VerificationReport::add_metric(const std::string& k, double v) {
  if (!std::isfinite(v))
    throw std::runtime_error("report: non-finite metric '" + k + "' in check " + check);
  metrics.emplace_back(k, v);
}

bool VerificationReport::gate(const std::string& name, double value, const std::string& cmp,
                              double bound) {
  add_metric(name, value);
  add_threshold(name + " " + cmp, bound);
  bool ok;
  if (cmp == "<")
    ok = value < bound;
  else if (cmp == "<=")
    ok = value <= bound;
  else if (cmp == ">")
    ok = value > bound;
  else if (cmp == ">=")
    ok = value >= bound;
  else
    throw std::invalid_argument("report: unknown comparison '" + cmp + "'");
  pass = pass && ok;
  return ok;
}

double VerificationReport::metric(const std::string& k) const {
  for (const auto& [name, v] : metrics)
    if (name == k) return v;
  throw std::out_of_range("report: no metric '" + k + "' in check " + check);
}

std::string VerificationReport::to_json(bool deterministic_output) const {
  ordered_json j;
  j["check"] = check;
  j["env"] = ordered_json::parse(env.to_json_string());
  ordered_json geo = ordered_json::object();
  for (const auto& [k, v] : geometry) geo[k] = v;
  j["geometry"] = geo;
  j["seeds"] = seeds;
  ordered_json met = ordered_json::object();
  for (const auto& [k, v] : metrics) met[k] = v;
  j["metrics"] = met;
  ordered_json thr = ordered_json::object();
  for (const auto& [k, v] : thresholds) thr[k] = v;
  j["thresholds"] = thr;
  ordered_json nts = ordered_json::object();
  for (const auto& [k, v] : notes) nts[k] = v;
  j["notes"] = nts;
  j["pass"] = pass;
  j["runtime_seconds"] = deterministic_output ? 0.0 : runtime_seconds;
  return j.dump(2) + "\n";
}

void VerificationReport::save(const std::string& path, bool deterministic_output) const {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + path + " for writing");
  out << to_json(deterministic_output);
}

VerificationReport VerificationReport::from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  VerificationReport r;
  r.check = j.at("check").get<std::string>();
  r.env = EnvParams::from_json_string(j.at("env").dump());
  for (const auto& [k, v] : j.at("geometry").items()) r.geometry.emplace_back(k, v.get<double>());
  r.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics.emplace_back(k, v.get<double>());
  for (const auto& [k, v] : j.at("thresholds").items())
    r.thresholds.emplace_back(k, v.get<double>());
  if (j.contains("notes"))
    for (const auto& [k, v] : j.at("notes").items())
      r.notes.emplace_back(k, v.get<std::string>());
  r.pass = j.at("pass").get<bool>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  return r;
}

VerificationReport VerificationReport::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

Stopwatch::Stopwatch()
    : start_ns_(std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now().time_since_epoch())
                    .count()) {}

double Stopwatch::seconds() const {
  const int64_t now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          std::chrono::steady_clock::now().time_since_epoch())
                          .count();
  return static_cast<double>(now - start_ns_) * 1e-9;
}

}  // namespace rwre

#pragma once
// Balanced, uniformly elliptic, time-dependent rate fields on Z^d.
//
// A field stores one per-axis rate a_i(x,t) in [kappa, 1/kappa] per
// (site, time cell, axis); the walk jumps x -> x+e_i and x -> x-e_i at the
// same rate a_i(x,t), so the per-axis balance condition cannot be violated by
// construction. Fields are piecewise constant in time on cells
// [k*delta_t, (k+1)*delta_t) and are pure functions of (seed, coordinates):
// unbounded lattices are queried lazily via counter-based hashing, so the same
// (params, x, t, axis) always returns the same rate in any query order.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "rwre/prng.hpp"

namespace rwre {

constexpr int kMaxDim = 4;
using Pt = std::array<int64_t, kMaxDim>;  // lattice point, slots >= d unused (0)

inline Pt make_pt(int64_t x0 = 0, int64_t x1 = 0, int64_t x2 = 0, int64_t x3 = 0) {
  return Pt{x0, x1, x2, x3};
}

enum class EnvModel { Homogeneous, IidCheckerboard, StaticIid, TwoStateFlip };

const char* to_string(EnvModel m);
EnvModel env_model_from_string(const std::string& s);

// ---------------------------------------------------------------- parameters
struct EnvParams {
  int d = 2;
  double kappa = 0.25;
  EnvModel model = EnvModel::IidCheckerboard;
  double delta_t = 1.0;
  uint64_t seed = 1;
  std::map<std::string, double> model_params;

  // Throws std::invalid_argument with a specific message on bad input.
  void validate() const;

  std::string to_json_string() const;          // round-trips via from_json_string
  static EnvParams from_json_string(const std::string& text);
};

// ---------------------------------------------------------------- rate field
class RateField {
 public:
  RateField() = default;
  explicit RateField(const EnvParams& p);

  // Per-axis rate a_i(x,t); equals the jump rate to both x+e_i and x-e_i.
  double rate(const Pt& x, double t, int axis) const;

  // 2 * sum_i a_i(x,t): total jump rate out of (x,t).
  double total_rate(const Pt& x, double t) const;

  // Environment shifted so that the new origin is (x0,t0):
  // shifted.rate(y,s,i) == rate(y+x0, s+t0, i).
  RateField shifted(const Pt& x0, double t0) const;

  const EnvParams& params() const { return params_; }
  int dim() const { return params_.d; }
  double kappa() const { return params_.kappa; }
  double delta_t() const { return params_.delta_t; }
  // Uniform upper bound on total_rate: Lambda = 2d/kappa (thinning envelope).
  double max_total_rate() const { return 2.0 * params_.d / params_.kappa; }

 private:
  double base_rate(const Pt& x, int64_t cell, int axis) const;
  int64_t cell_of(double t) const;

  EnvParams params_;
  Pt shift_x_ = make_pt();
  double shift_t_ = 0.0;
  std::array<double, kMaxDim> homog_a_{};   // resolved per-axis rates (Homogeneous)
  double lo_ = 0.0, hi_ = 0.0;              // TwoStateFlip levels
  int64_t flip_gap_ = 1;                    // TwoStateFlip mean gap in cells
  int64_t flip_jmax_ = 0;                   // jitter range [0, jmax], jmax < gap/2
};

RateField make_field(const EnvParams& p);

}  // namespace rwre

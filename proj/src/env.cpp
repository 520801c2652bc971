#include "rwre/env.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace rwre {

using json = nlohmann::json;

// Salts keep the per-purpose hash streams of one seed disjoint.
namespace salt {
constexpr uint64_t kIid = 0x11u;
constexpr uint64_t kStatic = 0x22u;
constexpr uint64_t kFlipJitter = 0x33u;
constexpr uint64_t kFlipBase = 0x44u;
}  // namespace salt

const char* to_string(EnvModel m) {
  switch (m) {
    case EnvModel::Homogeneous: return "homogeneous";
    case EnvModel::IidCheckerboard: return "iid_checkerboard";
    case EnvModel::StaticIid: return "static_iid";
    case EnvModel::TwoStateFlip: return "two_state_flip";
  }
  return "?";
}

EnvModel env_model_from_string(const std::string& s) {
  if (s == "homogeneous") return EnvModel::Homogeneous;
  if (s == "iid_checkerboard") return EnvModel::IidCheckerboard;
  if (s == "static_iid") return EnvModel::StaticIid;
  if (s == "two_state_flip") return EnvModel::TwoStateFlip;
  throw std::invalid_argument("unknown env model: \"" + s + "\"");
}

// ---------------------------------------------------------------- EnvParams
void EnvParams::validate() const {
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("env: d must be in [1," + std::to_string(kMaxDim) + "]");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("env: kappa must lie in (0,1)");
  if (!(delta_t > 0.0)) throw std::invalid_argument("env: delta_t must be positive");
  const double lo = kappa, hi = 1.0 / kappa;
  auto need = [&](const char* key) -> double {
    auto it = model_params.find(key);
    if (it == model_params.end())
      throw std::invalid_argument(std::string("env: model_params missing \"") + key + "\"");
    return it->second;
  };
  switch (model) {
    case EnvModel::Homogeneous:
      for (int i = 0; i < d; ++i) {
        const std::string per_axis = "a" + std::to_string(i);
        const double a = model_params.count(per_axis) ? model_params.at(per_axis)
                         : model_params.count("a")    ? model_params.at("a")
                                                      : (throw std::invalid_argument(
                                                             "env: homogeneous needs \"a\" or \"a<i>\""),
                                                         0.0);
        if (!(a >= lo && a <= hi))
          throw std::invalid_argument("env: homogeneous rate outside [kappa,1/kappa]");
      }
      break;
    case EnvModel::IidCheckerboard:
    case EnvModel::StaticIid:
      break;  // law is uniform on [kappa,1/kappa]; no parameters
    case EnvModel::TwoStateFlip: {
      const double low = need("low"), high = need("high"), fr = need("flip_rate");
      if (!(low >= lo && low <= hi && high >= lo && high <= hi))
        throw std::invalid_argument("env: two_state_flip levels outside [kappa,1/kappa]");
      if (!(fr > 0.0)) throw std::invalid_argument("env: flip_rate must be positive");
      break;
    }
  }
}

std::string EnvParams::to_json_string() const {
  json j;
  j["d"] = d;
  j["kappa"] = kappa;
  j["model"] = to_string(model);
  j["delta_t"] = delta_t;
  j["seed"] = seed;
  j["model_params"] = model_params;
  return j.dump();
}

EnvParams EnvParams::from_json_string(const std::string& text) {
  json j = json::parse(text);
  EnvParams p;
  p.d = j.value("d", 2);
  p.kappa = j.value("kappa", 0.25);
  p.model = env_model_from_string(j.value("model", std::string("iid_checkerboard")));
  p.delta_t = j.value("delta_t", 1.0);
  p.seed = j.value("seed", uint64_t{1});
  if (j.contains("model_params"))
    p.model_params = j.at("model_params").get<std::map<std::string, double>>();
  p.validate();
  return p;
}

// ---------------------------------------------------------------- RateField
RateField::RateField(const EnvParams& p) : params_(p) {
  params_.validate();
  if (p.model == EnvModel::Homogeneous) {
    for (int i = 0; i < p.d; ++i) {
      const std::string per_axis = "a" + std::to_string(i);
      homog_a_[i] = p.model_params.count(per_axis) ? p.model_params.at(per_axis)
                                                   : p.model_params.at("a");
    }
  } else if (p.model == EnvModel::TwoStateFlip) {
    lo_ = p.model_params.at("low");
    hi_ = p.model_params.at("high");
    const double cells = 1.0 / (p.model_params.at("flip_rate") * p.delta_t);
    flip_gap_ = std::max<int64_t>(1, std::llround(cells));
    flip_jmax_ = (flip_gap_ - 1) / 2;  // jitter < gap/2 keeps epochs strictly increasing
  }
}

RateField make_field(const EnvParams& p) { return RateField(p); }

int64_t RateField::cell_of(double t) const {
  return static_cast<int64_t>(std::floor(t / params_.delta_t));
}

double RateField::rate(const Pt& x, double t, int axis) const {
  Pt y = x;
  for (int i = 0; i < params_.d; ++i) y[i] += shift_x_[i];
  return base_rate(y, cell_of(t + shift_t_), axis);
}

double RateField::base_rate(const Pt& x, int64_t cell, int axis) const {
  const double lo = params_.kappa, hi = 1.0 / params_.kappa;
  switch (params_.model) {
    case EnvModel::Homogeneous:
      return homog_a_[axis];
    case EnvModel::IidCheckerboard: {
      uint64_t h = hash_combine(params_.seed, salt::kIid);
      for (int i = 0; i < params_.d; ++i) h = hash_combine(h, static_cast<uint64_t>(x[i]));
      h = hash_combine(h, static_cast<uint64_t>(cell));
      h = hash_combine(h, static_cast<uint64_t>(axis));
      return lo + u64_to_unit(h) * (hi - lo);
    }
    case EnvModel::StaticIid: {
      uint64_t h = hash_combine(params_.seed, salt::kStatic);
      for (int i = 0; i < params_.d; ++i) h = hash_combine(h, static_cast<uint64_t>(x[i]));
      h = hash_combine(h, static_cast<uint64_t>(axis));
      return lo + u64_to_unit(h) * (hi - lo);
    }
    case EnvModel::TwoStateFlip: {
      // Alternating two-level rate. Switch epochs form a jittered renewal grid
      // on the cell lattice: epoch j sits at cell j*gap + jitter(j) with
      // jitter in [0, jmax], jmax < gap/2, so epochs are strictly increasing
      // and the parity of {epochs <= cell} is an O(1) random-access quantity.
      uint64_t hsite = hash_combine(params_.seed, salt::kFlipJitter);
      for (int i = 0; i < params_.d; ++i)
        hsite = hash_combine(hsite, static_cast<uint64_t>(x[i]));
      hsite = hash_combine(hsite, static_cast<uint64_t>(axis));
      auto epoch_cell = [&](int64_t j) {
        const int64_t jit =
            flip_jmax_ == 0
                ? 0
                : static_cast<int64_t>(hash_combine(hsite, static_cast<uint64_t>(j)) %
                                       static_cast<uint64_t>(flip_jmax_ + 1));
        return j * flip_gap_ + jit;
      };
      // Largest j with epoch_cell(j) <= cell; epochs move at slope `gap`.
      int64_t j = (cell >= 0 ? cell : cell - flip_gap_ + 1) / flip_gap_ + 1;
      while (epoch_cell(j) > cell) --j;
      const bool parity = (j & 1) != 0;
      const bool base = (hash_combine(hsite, salt::kFlipBase) & 1) != 0;
      return (parity != base) ? hi_ : lo_;
    }
  }
  return lo;
}

double RateField::total_rate(const Pt& x, double t) const {
  double s = 0.0;
  for (int i = 0; i < params_.d; ++i) s += rate(x, t, i);
  return 2.0 * s;
}

RateField RateField::shifted(const Pt& x0, double t0) const {
  RateField f = *this;
  for (int i = 0; i < params_.d; ++i) f.shift_x_[i] = shift_x_[i] + x0[i];
  f.shift_t_ = shift_t_ + t0;
  return f;
}

}  // namespace rwre

#include "rwre/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rwre/stats.hpp"

namespace rwre {

DensityField::DensityField(const RateField& f, const TorusDomain& dom, double time,
                           std::vector<double> rho)
    : ev_(f, dom, time), h_default_(coarse_step(f)) {
  ev_.add_state(std::move(rho));
}

void DensityField::advance_to(double t, double h_target) {
  ev_.advance_to(t, h_target > 0.0 ? h_target : h_default_);
}

DensityField compute_rho(const RateField& f, const TorusDomain& dom, double t_target,
                         const BurnInSpec& spec) {
  if (spec.skip_if_homogeneous && f.params().model == EnvModel::Homogeneous)
    return DensityField(f, dom, t_target, std::vector<double>(dom.n, 1.0));
  const double budget = spec.budget >= 0.0
                            ? spec.budget
                            : 8.0 * static_cast<double>(dom.L) * static_cast<double>(dom.L);
  const double h = spec.h > 0.0 ? spec.h : coarse_step(f);
  TorusEvolver ev(f, dom, t_target - budget);
  ev.add_uniform(1.0);
  ev.advance_to(t_target, h);
  std::vector<double> rho = std::move(ev.state(0));
  const double scale = static_cast<double>(dom.n) / pairwise_sum(rho);
  for (double& v : rho) v *= scale;
  return DensityField(f, dom, t_target, std::move(rho));
}

RhoGrid::RhoGrid(TorusDomain dom, double t0, double step,
                 std::vector<std::vector<double>> slices, double burn_in)
    : dom_(dom), t0_(t0), step_(step), burn_in_(burn_in), slices_(std::move(slices)) {
  if (slices_.size() < 2) throw std::invalid_argument("RhoGrid: need at least two slices");
  if (!(step_ > 0.0)) throw std::invalid_argument("RhoGrid: grid step must be positive");
  for (const auto& s : slices_)
    if (static_cast<int64_t>(s.size()) != dom_.n)
      throw std::invalid_argument("RhoGrid: slice size does not match domain");
}

double RhoGrid::at(const Pt& x, double t) const {
  const int64_t i = dom_.index(x);
  const double pos = (t - t0_) / step_;
  if (pos < -1e-9 || pos > static_cast<double>(slices_.size() - 1) + 1e-9)
    throw std::out_of_range("RhoGrid::at: time outside stored window");
  const int j = std::clamp(static_cast<int>(std::floor(pos)), 0,
                           static_cast<int>(slices_.size()) - 2);
  const double w = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
  return (1.0 - w) * slices_[j][i] + w * slices_[j + 1][i];
}

std::vector<double> RhoGrid::interpolated(double t) const {
  const double pos = (t - t0_) / step_;
  if (pos < -1e-9 || pos > static_cast<double>(slices_.size() - 1) + 1e-9)
    throw std::out_of_range("RhoGrid::interpolated: time outside stored window");
  const int j = std::clamp(static_cast<int>(std::floor(pos)), 0,
                           static_cast<int>(slices_.size()) - 2);
  const double w = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
  std::vector<double> out(dom_.n);
  for (int64_t i = 0; i < dom_.n; ++i)
    out[i] = (1.0 - w) * slices_[j][i] + w * slices_[j + 1][i];
  return out;
}

RhoGrid RhoGrid::subsample(int factor) const {
  if (factor < 1 || (static_cast<int>(slices_.size()) - 1) % factor != 0)
    throw std::invalid_argument("RhoGrid::subsample: factor must divide the slice count");
  std::vector<std::vector<double>> picked;
  for (size_t j = 0; j < slices_.size(); j += static_cast<size_t>(factor))
    picked.push_back(slices_[j]);
  return RhoGrid(dom_, t0_, step_ * factor, std::move(picked), burn_in_);
}

RhoGrid compute_rho_grid(const RateField& f, const TorusDomain& dom, double t0, double t1,
                         double grid_step, const BurnInSpec& spec) {
  if (grid_step <= 0.0) grid_step = f.delta_t();
  const double span = t1 - t0;
  const int m = static_cast<int>(std::llround(span / grid_step));
  if (m < 1 || std::abs(span - m * grid_step) > 1e-9)
    throw std::invalid_argument("compute_rho_grid: window must be a multiple of the grid step");

  const bool skip = spec.skip_if_homogeneous && f.params().model == EnvModel::Homogeneous;
  const double budget = spec.budget >= 0.0
                            ? spec.budget
                            : 8.0 * static_cast<double>(dom.L) * static_cast<double>(dom.L);
  const double h_burn = spec.h > 0.0 ? spec.h : coarse_step(f);

  TorusEvolver ev(f, dom, skip ? t0 : t0 - budget);
  ev.add_uniform(1.0);
  if (!skip) ev.advance_to(t0, h_burn);

  std::vector<double> times(m);
  for (int j = 1; j <= m; ++j) times[j - 1] = t0 + grid_step * j;
  std::vector<std::vector<double>> slices;
  slices.reserve(m + 1);
  slices.push_back(ev.state(0));
  ev.advance_with_snapshots(t1, oracle_step(f), times,
                            [&](double) { slices.push_back(ev.state(0)); });
  for (auto& s : slices) {
    const double scale = static_cast<double>(dom.n) / pairwise_sum(s);
    for (double& v : s) v *= scale;
  }
  return RhoGrid(dom, t0, grid_step, std::move(slices), skip ? 0.0 : budget);
}

RhoAudit invariance_residual(const RateField& f, const RhoGrid& rho, double exclusion_margin) {
  const double dt = f.delta_t();
  TorusEvolver ev(f, rho.dom(), rho.t0());
  std::vector<double> deriv;
  double worst = 0.0, worst_t = rho.t0();
  for (int j = 1; j + 1 < rho.slices(); ++j) {
    const double t = rho.slice_time(j);
    const double dist = std::abs(t - std::round(t / dt) * dt);
    if (dist <= std::max(exclusion_margin, 1e-9)) continue;
    ev.eval_derivative(t, rho.slice(j), deriv);
    const std::vector<double>& lo = rho.slice(j - 1);
    const std::vector<double>& hi = rho.slice(j + 1);
    for (int64_t i = 0; i < rho.dom().n; ++i) {
      const double d = std::abs((hi[i] - lo[i]) / (2.0 * rho.step()) - deriv[i]);
      if (d > worst) {
        worst = d;
        worst_t = t;
      }
    }
  }
  return {worst, worst_t};
}

RhoAudit invariance_residual(const RateField& f, const DensityField& rho, double h_fd) {
  if (h_fd <= 0.0) h_fd = std::min(1e-3, f.delta_t() / 8.0);
  const TorusDomain& dom = rho.dom();
  const double dt = f.delta_t();
  // Center the stencil on the next mid-cell time so all three evaluations see
  // the same frozen rates.
  int64_t cell = static_cast<int64_t>(std::floor(rho.time() / dt + 1e-12));
  double t_mid = (static_cast<double>(cell) + 0.5) * dt;
  if (t_mid - h_fd < rho.time()) t_mid += dt;
  const double h = oracle_step(f);

  TorusEvolver ev(f, dom, rho.time());
  ev.add_state(rho.values());
  ev.advance_to(t_mid - h_fd, h);
  const std::vector<double> lo = ev.state(0);
  ev.advance_to(t_mid, h);
  const std::vector<double> mid = ev.state(0);
  ev.advance_to(t_mid + h_fd, h);
  const std::vector<double>& hi = ev.state(0);

  std::vector<double> lmid;
  ev.eval_derivative(t_mid, mid, lmid);
  double worst = 0.0;
  for (int64_t i = 0; i < dom.n; ++i) {
    const double drho_dt = (hi[i] - lo[i]) / (2.0 * h_fd);
    worst = std::max(worst, std::abs(drho_dt - lmid[i]));
  }
  return {worst, t_mid};
}

double rho_ball(const TorusDomain& dom, const std::vector<double>& values, const Pt& center,
                double radius) {
  const auto offsets = lattice_ball(dom.d, radius);
  std::vector<double> terms;
  terms.reserve(offsets.size());
  for (const Pt& o : offsets) {
    Pt y = center;
    for (int i = 0; i < dom.d; ++i) y[i] += o[i];
    terms.push_back(values[dom.index(y)]);
  }
  return pairwise_sum(terms);
}

double rho_ball(const DensityField& rho, const Pt& center, double radius) {
  return rho_ball(rho.dom(), rho.values(), center, radius);
}

MomentEstimate rho_moment(const EnvParams& proto, int n_envs, double p, int torus_side,
                          double burn_in) {
  if (n_envs < 1) throw std::invalid_argument("rho_moment: need at least one environment");
  const TorusDomain dom(proto.d, torus_side);
  const Pt origin{};
  std::vector<double> samples;
  samples.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    EnvParams params = proto;
    params.seed = proto.seed + static_cast<uint64_t>(i);
    const RateField f(params);
    BurnInSpec spec;
    spec.budget = burn_in;
    const DensityField rho = compute_rho(f, dom, 0.0, spec);
    samples.push_back(std::pow(rho.at(origin), p));
  }
  const MeanVar mv = mean_var(samples);
  return {mv.mean, mv.se(), static_cast<int>(mv.n)};
}

std::array<double, kMaxDim> sigma_diag_estimate(const RateField& f,
                                                const DensityField& rho) {
  const TorusDomain& dom = rho.dom();
  const double t = rho.time();
  std::array<double, kMaxDim> out{};
  for (int axis = 0; axis < f.dim(); ++axis) {
    std::vector<double> terms(dom.n);
    for (int64_t i = 0; i < dom.n; ++i)
      terms[i] = rho.values()[i] * f.rate(dom.point(i), t, axis);
    out[axis] = 2.0 * pairwise_sum(terms) / static_cast<double>(dom.n);
  }
  return out;
}

}  // namespace rwre

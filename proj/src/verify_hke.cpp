#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/stats.hpp"
#include "rwre/verify.hpp"

namespace rwre {

// Heat-kernel estimates for q(0,0; x,t) = P(X_t = x) / rho(x,t):
//   on-diagonal (|x| <= sqrt(t)):  q t^{d/2} trapped in a band [c, C], C/c
//     bounded at desk scale;
//   off-diagonal (sqrt(t) < |x| <= factor sqrt(t)): log(q t^{d/2}) linear in
//     |x|^2/t with negative slope; the fitted line shifted by its extremal
//     residuals yields upper/lower envelopes that must cover every probe.
VerificationReport verify_hke(const EnvParams& env, const HkeOptions& opt) {
  Stopwatch sw;
  env.validate();
  if (opt.t_probes.size() < 2)
    throw std::invalid_argument("verify_hke: need at least two time probes");
  for (size_t j = 0; j < opt.t_probes.size(); ++j)
    if (!(opt.t_probes[j] > 0.0) ||
        (j > 0 && !(opt.t_probes[j] > opt.t_probes[j - 1])))
      throw std::invalid_argument("verify_hke: t_probes must be positive increasing");

  RateField f(env);
  const int d = f.dim();
  VerificationReport rep;
  rep.check = "hke";
  rep.env = env;
  rep.seeds = {env.seed};
  rep.add_geometry("side", opt.side);
  rep.add_geometry("burn_in", opt.burn_in);
  rep.add_geometry("t_max", opt.t_probes.back());
  rep.add_geometry("offdiag_factor", opt.offdiag_factor);

  const auto snap =
      kernel_rho_snapshots(f, opt.side, opt.burn_in, opt.t_probes, survey_step(f));

  double band_lo = std::numeric_limits<double>::infinity(), band_hi = 0.0;
  std::vector<double> z_sq, z_abs, y;        // pooled off-diagonal points
  std::vector<double> log_t, log_q0;         // origin decay trace
  const double half_d = 0.5 * d;
  for (size_t k = 0; k < opt.t_probes.size(); ++k) {
    const double t = opt.t_probes[k];
    const auto& q = snap.q[k];
    const auto& rho = snap.rho[k];
    const double td = std::pow(t, half_d);

    for (const auto& off : lattice_ball(d, std::sqrt(t))) {
      const double v = td * heat_kernel_value(q[snap.dom.index(off)],
                                              rho[snap.dom.index(off)]);
      band_lo = std::min(band_lo, v);
      band_hi = std::max(band_hi, v);
    }
    log_t.push_back(std::log(t));
    log_q0.push_back(std::log(heat_kernel_value(q[snap.dom.index(Pt{})],
                                                rho[snap.dom.index(Pt{})])));

    const int m_lo = static_cast<int>(std::floor(std::sqrt(t))) + 1;
    const int m_hi = static_cast<int>(std::floor(opt.offdiag_factor * std::sqrt(t)));
    for (int m = m_lo; m <= m_hi; ++m) {
      Pt x{};
      x[0] = m;
      const double v = td * heat_kernel_value(q[snap.dom.index(x)],
                                              rho[snap.dom.index(x)]);
      z_sq.push_back(static_cast<double>(m) * m / t);
      z_abs.push_back(m);
      y.push_back(std::log(v));
    }
  }

  rep.add_metric("ondiag_lower_c", band_lo);
  rep.add_metric("ondiag_upper_C", band_hi);
  const LineFit decay = fit_line(log_t, log_q0);
  rep.add_metric("t_decay_slope", decay.slope);  // expect about -d/2

  const LineFit fit = fit_line(z_sq, y);
  const LineFit fit_abs = fit_line(z_abs, y);
  rep.add_metric("offdiag_points", static_cast<double>(y.size()));
  rep.add_metric("offdiag_slope_absx", fit_abs.slope);
  rep.add_metric("offdiag_r2_absx", fit_abs.r2);
  // Envelope constants: q t^{d/2} in [c_low e^{-C_low z}, C_up e^{-c_up z}],
  // z = |x|^2/t, obtained by shifting the fitted line to the extreme residuals.
  const double c_up = -fit.slope, C_low = -fit.slope;
  const double C_up = std::exp(fit.intercept + fit.max_resid);
  const double c_low = std::exp(fit.intercept + fit.min_resid);
  rep.add_metric("envelope_C_upper", C_up);
  rep.add_metric("envelope_c_upper", c_up);
  rep.add_metric("envelope_c_lower", c_low);
  rep.add_metric("envelope_C_lower", C_low);
  double violations = 0.0;
  for (size_t j = 0; j < y.size(); ++j) {
    const double v = std::exp(y[j]);
    const double hi = C_up * std::exp(-c_up * z_sq[j]) * (1.0 + 1e-12);
    const double lo = c_low * std::exp(-C_low * z_sq[j]) * (1.0 - 1e-12);
    if (v > hi || v < lo) violations += 1.0;
  }

  rep.gate("ondiag_band_ratio", band_hi / band_lo, "<", opt.band_bound);
  rep.gate("offdiag_slope", fit.slope, "<", 0.0);
  rep.gate("offdiag_r2", fit.r2, ">", 0.9);
  rep.gate("envelope_violations", violations, "<=", 0.0);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

}  // namespace rwre

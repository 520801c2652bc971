#include "rwre/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace rwre {

TorusDomain::TorusDomain(int d_, int L_) : d(d_), L(L_) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("torus: bad dimension");
  if (L < 4 || L % 2 != 0) throw std::invalid_argument("torus: L must be even and >= 4");
  n = 1;
  for (int i = 0; i < d; ++i) n *= L;
}

int torus_side_for_horizon(const RateField& f, double T, double gamma) {
  const double spread = std::sqrt(T * f.max_total_rate());
  int L = 2 * static_cast<int>(std::ceil(gamma * spread));
  if (L % 2) ++L;
  return std::max(L, 4);
}

std::vector<Pt> lattice_ball(int d, double r) {
  std::vector<Pt> out;
  const int64_t m = static_cast<int64_t>(std::floor(r));
  const double r2 = r * r;
  Pt x = make_pt();
  // Nested scan over [-m, m]^d.
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += static_cast<double>(x[i]) * x[i];
      if (s <= r2) out.push_back(x);
      return;
    }
    for (int64_t c = -m; c <= m; ++c) {
      x[axis] = c;
      rec(axis + 1);
    }
  };
  rec(0);
  return out;
}

int64_t lattice_ball_count(int d, double r) {
  return static_cast<int64_t>(lattice_ball(d, r).size());
}

Region make_region(int d, const Pt& lo, const Pt& hi,
                   const std::function<bool(const Pt&)>& inside) {
  Region rg;
  rg.d = d;
  rg.box_lo = lo;
  rg.n_box = 1;
  for (int i = 0; i < d; ++i) {
    rg.side[i] = static_cast<int>(hi[i] - lo[i] + 1);
    if (rg.side[i] < 1) throw std::invalid_argument("region: empty box");
    rg.n_box *= rg.side[i];
  }
  rg.mask.assign(rg.n_box, 0.0);
  for (int64_t i = 0; i < rg.n_box; ++i) {
    const Pt x = rg.point(i);
    if (inside(x)) {
      rg.mask[i] = 1.0;
      rg.interior.push_back(i);
    }
  }
  if (rg.interior.empty()) throw std::invalid_argument("region: no interior sites");
  // Boundary: non-interior neighbors of interior sites. The box is required to
  // contain them (callers pad by one site).
  std::vector<int64_t> bmark(rg.n_box, -1);
  for (int64_t i : rg.interior) {
    const Pt x = rg.point(i);
    for (int axis = 0; axis < d; ++axis) {
      for (int sgn : {-1, +1}) {
        Pt y = x;
        y[axis] += sgn;
        const int64_t j = rg.box_index(y);
        if (j < 0) throw std::logic_error("region: box does not contain boundary ring");
        if (rg.mask[j] != 0.0) continue;
        if (bmark[j] < 0) {
          bmark[j] = static_cast<int64_t>(rg.boundary.size());
          rg.boundary.push_back({j, y, {}});
        }
        rg.boundary[bmark[j]].edges.emplace_back(i, axis);
      }
    }
  }
  return rg;
}

Region ball_region(int d, const Pt& center, double R) {
  const int64_t m = static_cast<int64_t>(std::floor(R)) + 1;
  Pt lo = center, hi = center;
  for (int i = 0; i < d; ++i) {
    lo[i] -= m;
    hi[i] += m;
  }
  const double R2 = R * R;
  return make_region(d, lo, hi, [&](const Pt& x) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double c = static_cast<double>(x[i] - center[i]);
      s += c * c;
    }
    return s <= R2;
  });
}

Region annulus_region(int d, const Pt& center, double r, double R) {
  const int64_t m = static_cast<int64_t>(std::floor(R)) + 1;
  Pt lo = center, hi = center;
  for (int i = 0; i < d; ++i) {
    lo[i] -= m;
    hi[i] += m;
  }
  const double r2 = r * r, R2 = R * R;
  return make_region(d, lo, hi, [&](const Pt& x) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double c = static_cast<double>(x[i] - center[i]);
      s += c * c;
    }
    return s > r2 && s <= R2;
  });
}

}  // namespace rwre

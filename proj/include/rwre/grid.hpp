#pragma once
// Lattice geometry: torus domains for whole-lattice solves (truncation
// surrogate for Z^d) and boxed masked regions for killed/absorbed solves on
// balls and annuli. Coordinates are absolute lattice points (the environment
// is always queried at absolute coordinates); a torus of side L identifies
// x ~ x + L e_i, with canonical representatives in [-L/2, L/2)^d.

#include <cstdint>
#include <functional>
#include <vector>

#include "rwre/env.hpp"

namespace rwre {

// ---------------------------------------------------------------- torus
struct TorusDomain {
  int d = 2;
  int L = 4;          // even, >= 4
  int64_t n = 16;     // L^d

  TorusDomain() = default;
  TorusDomain(int d_, int L_);

  int64_t wrap1(int64_t c) const {  // representative in [-L/2, L/2)
    const int64_t half = L / 2;
    int64_t r = (c + half) % L;
    if (r < 0) r += L;
    return r - half;
  }
  Pt wrap(const Pt& x) const {
    Pt y = make_pt();
    for (int i = 0; i < d; ++i) y[i] = wrap1(x[i]);
    return y;
  }
  // Flattened index; axis 0 is the fastest-varying (contiguous) direction.
  int64_t index(const Pt& x) const {
    int64_t idx = 0;
    for (int i = d - 1; i >= 0; --i) idx = idx * L + (wrap1(x[i]) + L / 2);
    return idx;
  }
  Pt point(int64_t idx) const {
    Pt x = make_pt();
    for (int i = 0; i < d; ++i) {
      x[i] = idx % L - L / 2;
      idx /= L;
    }
    return x;
  }
};

// Torus side for horizon T per the default truncation rule
// L >= 2*ceil(gamma*sqrt(T*2d/kappa)) rounded up to even; gamma=6 targets
// self-wrap mass below 1e-8 (callers with looser tolerances size their own).
int torus_side_for_horizon(const RateField& f, double T, double gamma = 6.0);

// ---------------------------------------------------------------- balls
// Lattice Euclidean ball offsets {o : |o|_2 <= r}.
std::vector<Pt> lattice_ball(int d, double r);
int64_t lattice_ball_count(int d, double r);

// ---------------------------------------------------------------- regions
// A finite set of "interior" lattice sites held in a bounding box, for killed
// evolution: mass on interior sites evolves, mass jumping to a non-interior
// neighbor is absorbed there. Boundary sites are the non-interior neighbors.
struct Region {
  int d = 2;
  Pt box_lo = make_pt();               // box corner (absolute coordinates)
  std::array<int, kMaxDim> side{};     // box extent per axis
  int64_t n_box = 0;                   // product of sides
  std::vector<double> mask;            // 1.0 interior, 0.0 otherwise (size n_box)
  std::vector<int64_t> interior;       // box indices of interior sites

  struct BoundarySite {
    int64_t box_index;                 // where the absorbed mass sits
    Pt x;                              // absolute coordinates
    // Edges to interior: (interior box index, axis of the edge).
    std::vector<std::pair<int64_t, int>> edges;
  };
  std::vector<BoundarySite> boundary;

  int64_t stride(int axis) const {
    int64_t s = 1;
    for (int i = 0; i < axis; ++i) s *= side[i];
    return s;
  }
  int64_t box_index(const Pt& x) const {  // -1 if outside the box
    int64_t idx = 0;
    for (int i = d - 1; i >= 0; --i) {
      const int64_t c = x[i] - box_lo[i];
      if (c < 0 || c >= side[i]) return -1;
      idx = idx * side[i] + c;
    }
    return idx;
  }
  Pt point(int64_t idx) const {
    Pt x = make_pt();
    for (int i = 0; i < d; ++i) {
      x[i] = box_lo[i] + idx % side[i];
      idx /= side[i];
    }
    return x;
  }
  bool is_interior(const Pt& x) const {
    const int64_t i = box_index(x);
    return i >= 0 && mask[i] != 0.0;
  }
};

// Region from a membership predicate, bounded by [lo, hi] per axis (inclusive).
Region make_region(int d, const Pt& lo, const Pt& hi,
                   const std::function<bool(const Pt&)>& inside);

// Euclidean ball B_R(center) as a killed region.
Region ball_region(int d, const Pt& center, double R);

// Annulus (B_R \ B_r)(center): interior sites with r < |x| <= R.
Region annulus_region(int d, const Pt& center, double r, double R);

}  // namespace rwre

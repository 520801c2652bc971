#pragma once
// Counter-based pseudo-randomness.
//
// Two flavors, both pure functions of (seed, coordinates/counter):
//  * hash_u64 / hash_to_unit: splitmix64-style finalizer chains used to attach
//    i.i.d. uniforms to lattice coordinates (quenched disorder). Random access,
//    no state, identical results regardless of query order or thread count.
//  * Philox4x32-10: counter-based generator used for walker path streams; one
//    stream per path index, so ensembles are reproducible under any scheduling.

#include <cmath>
#include <cstdint>

namespace rwre {

// ---------------------------------------------------------------- splitmix64
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combine: h' = mix(h ^ mix(v)).
inline uint64_t hash_combine(uint64_t h, uint64_t v) {
  return splitmix64(h ^ (splitmix64(v) + 0x9e3779b97f4a7c15ULL));
}

// Map to [0,1) with 53-bit resolution.
inline double u64_to_unit(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------- Philox4x32-10
// Constants from the reference implementation (Salmon et al. round function).
class Philox {
 public:
  // One independent stream per (seed, stream) pair.
  Philox(uint64_t seed, uint64_t stream) {
    const uint64_t k = splitmix64(seed ^ splitmix64(stream));
    key0_ = static_cast<uint32_t>(k);
    key1_ = static_cast<uint32_t>(k >> 32);
    ctr_[0] = ctr_[1] = 0;
    ctr_[2] = static_cast<uint32_t>(stream);
    ctr_[3] = static_cast<uint32_t>(stream >> 32);
    have_ = 0;
  }

  uint32_t next_u32() {
    if (have_ == 0) refill();
    return out_[--have_];
  }

  uint64_t next_u64() {
    const uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on [0,1).
  double uniform() { return u64_to_unit(next_u64()); }

  // Exponential with given rate (rate > 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;

  void refill() {
    uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = static_cast<uint64_t>(kMul0) * c0;
      const uint64_t p1 = static_cast<uint64_t>(kMul1) * c2;
      const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
      const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
      const uint32_t n0 = hi1 ^ c1 ^ k0, n1 = lo1, n2 = hi0 ^ c3 ^ k1, n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kWeyl0; k1 += kWeyl1;
    }
    out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
    have_ = 4;
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
  }

  uint32_t key0_, key1_;
  uint32_t ctr_[4];
  uint32_t out_[4];
  int have_;
};

}  // namespace rwre

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rwre/env.hpp"

using namespace rwre;

namespace {

EnvParams flip_params() {
  EnvParams p;
  p.model = EnvModel::TwoStateFlip;
  p.model_params = {{"low", 0.5}, {"high", 2.0}, {"flip_rate", 0.25}};
  return p;
}

}  // namespace

TEST_CASE("rates stay in the ellipticity band for every model") {
  std::vector<EnvParams> models;
  {
    EnvParams p;
    p.model = EnvModel::Homogeneous;
    p.model_params = {{"a", 0.5}};
    models.push_back(p);
  }
  models.push_back(EnvParams{});  // checkerboard default
  {
    EnvParams p;
    p.model = EnvModel::StaticIid;
    models.push_back(p);
  }
  models.push_back(flip_params());

  for (const auto& p : models) {
    const RateField f(p);
    for (int64_t x0 = -7; x0 <= 7; x0 += 3)
      for (int64_t x1 = -7; x1 <= 7; x1 += 3)
        for (double t : {-4.3, 0.0, 0.49, 1.5, 37.25})
          for (int i = 0; i < p.d; ++i) {
            const double a = f.rate(make_pt(x0, x1), t, i);
            CHECK(a >= p.kappa);
            CHECK(a <= 1.0 / p.kappa);
          }
  }
}

TEST_CASE("total rate is twice the axis sum") {
  const RateField f{EnvParams{}};
  const Pt x = make_pt(3, -2);
  const double t = 5.7;
  CHECK(f.total_rate(x, t) == 2.0 * (f.rate(x, t, 0) + f.rate(x, t, 1)));
  CHECK(f.max_total_rate() == doctest::Approx(2.0 * 2 / 0.25));
}

TEST_CASE("fields are pure functions of (params, coordinates)") {
  EnvParams p;  // checkerboard
  const RateField f(p), g(p);
  // Same params, independent instances, arbitrary query order.
  CHECK(f.rate(make_pt(11, -4), 9.2, 1) == g.rate(make_pt(11, -4), 9.2, 1));
  const double first = g.rate(make_pt(-100, 55), 3.1, 0);
  (void)g.rate(make_pt(2, 2), 0.0, 0);  // interleave other queries
  CHECK(g.rate(make_pt(-100, 55), 3.1, 0) == first);
}

TEST_CASE("rates are piecewise constant on delta_t cells") {
  const RateField f{EnvParams{}};
  const Pt x = make_pt(1, 2);
  // Constant inside cell [3,4); free to change across the boundary.
  CHECK(f.rate(x, 3.0, 0) == f.rate(x, 3.999999, 0));
  CHECK(f.rate(x, 3.0, 1) == f.rate(x, 3.5, 1));
  bool some_change = false;
  for (int64_t k = 0; k < 12 && !some_change; ++k)
    some_change = f.rate(x, static_cast<double>(k), 0) !=
                  f.rate(x, static_cast<double>(k + 1), 0);
  CHECK(some_change);
}

TEST_CASE("checkerboard draws are iid across sites and cells") {
  const RateField f{EnvParams{}};
  std::set<double> vals;
  for (int64_t x0 = 0; x0 < 5; ++x0)
    for (int64_t k = 0; k < 5; ++k) vals.insert(f.rate(make_pt(x0, 0), 1.0 * k, 0));
  CHECK(vals.size() == 25);  // continuous law: collisions have probability 0
}

TEST_CASE("homogeneous model takes shared or per-axis rates") {
  EnvParams p;
  p.model = EnvModel::Homogeneous;
  p.model_params = {{"a", 0.25}};
  const RateField f(p);
  CHECK(f.rate(make_pt(9, -9), 123.4, 0) == 0.25);
  CHECK(f.rate(make_pt(0, 0), 0.0, 1) == 0.25);

  p.model_params = {{"a0", 0.5}, {"a1", 2.0}};
  const RateField g(p);
  CHECK(g.rate(make_pt(-3, 7), 2.5, 0) == 0.5);
  CHECK(g.rate(make_pt(-3, 7), 2.5, 1) == 2.0);
}

TEST_CASE("static model ignores time entirely") {
  EnvParams p;
  p.model = EnvModel::StaticIid;
  const RateField f(p);
  const Pt x = make_pt(4, -1);
  CHECK(f.rate(x, 0.0, 0) == f.rate(x, 1000.25, 0));
  CHECK(f.rate(x, -3.7, 1) == f.rate(x, 99.1, 1));
}

TEST_CASE("two-state flip takes only the two configured levels") {
  const RateField f(flip_params());
  for (int64_t k = 0; k < 40; ++k) {
    const double a = f.rate(make_pt(2, 3), 1.0 * k, 0);
    CHECK((a == 0.5 || a == 2.0));
  }
  // Both levels appear over a long enough window.
  bool saw_low = false, saw_high = false;
  for (int64_t k = 0; k < 200; ++k) {
    const double a = f.rate(make_pt(0, 0), 1.0 * k, 1);
    saw_low = saw_low || a == 0.5;
    saw_high = saw_high || a == 2.0;
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

TEST_CASE("shifted fields relocate the origin") {
  const RateField f{EnvParams{}};
  const Pt x0 = make_pt(5, -3);
  const RateField g = f.shifted(x0, 2.0);
  for (int64_t y0 = -2; y0 <= 2; ++y0)
    for (double s : {0.25, 1.75, 6.0})
      for (int i = 0; i < 2; ++i) {
        const Pt y = make_pt(y0, 1 - y0);
        Pt shifted = y;
        shifted[0] += x0[0];
        shifted[1] += x0[1];
        CHECK(g.rate(y, s, i) == f.rate(shifted, s + 2.0, i));
      }
}

TEST_CASE("seed selects a different environment") {
  EnvParams p, q;
  q.seed = 2;
  const RateField f(p), g(q);
  bool differ = false;
  for (int64_t x0 = 0; x0 < 4 && !differ; ++x0)
    differ = f.rate(make_pt(x0, 0), 0.0, 0) != g.rate(make_pt(x0, 0), 0.0, 0);
  CHECK(differ);
}

TEST_CASE("validate rejects malformed parameters") {
  EnvParams p;
  p.d = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.d = kMaxDim + 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = EnvParams{};
  p.kappa = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.kappa = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = EnvParams{};
  p.delta_t = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = EnvParams{};
  p.model = EnvModel::Homogeneous;  // missing "a"
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.model_params = {{"a", 8.0}};  // outside [kappa, 1/kappa]
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = flip_params();
  p.model_params.erase("flip_rate");
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_NOTHROW(EnvParams{}.validate());
}

TEST_CASE("json round trip preserves every field") {
  EnvParams p = flip_params();
  p.d = 3;
  p.kappa = 0.3;
  p.delta_t = 0.5;
  p.seed = 77;
  const EnvParams q = EnvParams::from_json_string(p.to_json_string());
  CHECK(q.d == p.d);
  CHECK(q.kappa == p.kappa);
  CHECK(q.model == p.model);
  CHECK(q.delta_t == p.delta_t);
  CHECK(q.seed == p.seed);
  CHECK(q.model_params == p.model_params);
  const RateField f(p), g(q);
  CHECK(f.rate(make_pt(1, 2, 3), 4.5, 2) == g.rate(make_pt(1, 2, 3), 4.5, 2));
}

TEST_CASE("model names round trip and bad names throw") {
  for (EnvModel m : {EnvModel::Homogeneous, EnvModel::IidCheckerboard, EnvModel::StaticIid,
                     EnvModel::TwoStateFlip})
    CHECK(env_model_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(env_model_from_string("no_such_model"), std::invalid_argument);
}

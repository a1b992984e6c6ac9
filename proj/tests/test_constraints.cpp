#include <doctest.h>

#include <cmath>

#include "ccfm/constraints.hpp"

using namespace ccfm;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec central_difference(const ConstraintSet& cs, Eigen::Index row, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (cs.row_value(row, xp) - cs.row_value(row, xm)) / (2 * h);
  }
  return g;
}

SmoothScalar soft_ball(Eigen::Index d) {
  return SmoothScalar(
      d, [](const Vec& x) { return std::exp(0.3 * x.sum()) + x.squaredNorm() - 4.0; },
      [](const Vec& x) { return Vec((0.3 * std::exp(0.3 * x.sum())) * Vec::Ones(x.size()) + 2.0 * x); },
      9);
}

ConstraintSet mixed_set() {
  ConstraintSet cs(3);
  Vec a(3), c(2);
  a << 1, -2, 0.5;
  c << 0.2, -0.1;
  cs.add(LinearIneq(a, 0.3))
      .add(LinearBand(Vec::Ones(3), -1.0, 0.5))
      .add(QuadIneq(a, 2.0))
      .add(MinDistance(c, 0.7, {0, 2}))
      .add(soft_ball(3));
  return cs;
}

}  // namespace

TEST_CASE("residual examples") {
  ConstraintSet lin(2);
  lin.add(LinearIneq(v2(1, 0), 1.0));
  CHECK(residuals(lin, v2(2, 0)) == v1(1.0));
  CHECK(residuals(lin, v2(0, 0)) == v1(0.0));

  ConstraintSet quad(1);
  quad.add(QuadIneq(v1(1), 4.0));
  CHECK(residuals(quad, v1(3)) == v1(5.0));

  CHECK_THROWS_AS(residuals(lin, v2(std::nan(""), 0)), NumericalError);
  CHECK_THROWS_AS(residuals(lin, v1(0)), DimensionError);
}

TEST_CASE("active_set examples") {
  ConstraintSet cs(2);
  cs.add(LinearIneq(v2(1, 0), 0.0)).add(LinearIneq(v2(0, 1), 0.0)).add(LinearIneq(v2(1, 1), 0.5));
  CHECK(active_set(cs, v2(-1, -1)).empty());
  CHECK(active_set(cs, v2(1, -0.2)) == std::vector<Eigen::Index>{0, 2});

  const ConstraintSet m = mixed_set();
  SeededRng rng(10, 0);
  for (int i = 0; i < 500; ++i) {
    const Vec x = 1.5 * sample_std_normal(rng, 3);
    std::vector<Eigen::Index> want;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (m.row_value(r, x) > 0) want.push_back(r);
    CHECK(active_set(m, x) == want);
    const Vec res = residuals(m, x);
    CHECK((res.array() >= 0.0).all());
    std::vector<Eigen::Index> support;
    for (Eigen::Index r = 0; r < res.size(); ++r)
      if (res[r] > 0) support.push_back(r);
    CHECK(support == want);
    CHECK(max_violation(m, x) == res.maxCoeff());
  }
}

TEST_CASE("jacobian examples") {
  ConstraintSet lin(2);
  lin.add(LinearIneq(v2(3, 4), -100));
  CHECK(jacobian_active(lin, v2(0, 0), {0}).row(0) == v2(3, 4).transpose());

  ConstraintSet quad(2);
  quad.add(QuadIneq(v2(1, 0), 1.0));
  CHECK(jacobian_active(quad, v2(2, 5), {0}).row(0) == v2(4, 0).transpose());

  ConstraintSet ring(2);
  ring.add(MinDistance(v2(0, 0), 1.0));
  CHECK(jacobian_active(ring, v2(0.5, 0), {0}).row(0) == v2(-1, 0).transpose());
  CHECK_THROWS_AS(jacobian_active(ring, v2(0, 0), {0}), SingularGradientError);
  CHECK_THROWS_AS(jacobian_active(ring, v2(0.5, 0), {}), DomainError);
}

TEST_CASE("analytic gradients match central differences") {
  const ConstraintSet cs = mixed_set();
  SeededRng rng(11, 0);
  for (int i = 0; i < 100; ++i) {
    const Vec x = 1.2 * sample_std_normal(rng, 3);
    for (Eigen::Index r = 0; r < cs.rows(); ++r) {
      const Vec g = cs.row_gradient(r, x);
      const Vec fd = central_difference(cs, r, x);
      CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("SmoothScalar rejects a wrong gradient") {
  auto g = [](const Vec& x) { return x.squaredNorm(); };
  CHECK_THROWS_AS(SmoothScalar(2, g, [](const Vec& x) { return Vec(3.0 * x); }), DomainError);
  CHECK_NOTHROW(SmoothScalar(2, g, [](const Vec& x) { return Vec(2.0 * x); }));
}

TEST_CASE("max_violation examples") {
  ConstraintSet cs(2);
  CHECK(max_violation(cs, v2(3, 3)) == 0.0);
  cs.add(LinearIneq(v2(1, 0), 0.7)).add(LinearIneq(v2(0, 1), 0.3));
  CHECK(max_violation(cs, v2(0, 0)) == 0.0);
  CHECK(max_violation(cs, v2(1.0, 1.0)) == doctest::Approx(0.7));
}

TEST_CASE("group violations") {
  ConstraintSet cs(2);
  cs.add(LinearIneq(v2(1, 0), 0.0), "left").add(LinearIneq(v2(0, 1), 0.0), "down");
  const Vec x = v2(0.25, 0.5);
  CHECK(max_violation(cs, x, "left") == 0.25);
  CHECK(max_violation(cs, x, "down") == 0.5);
  CHECK(max_violation(cs, x, "other") == 0.0);
}

TEST_CASE("LinearBand equals its two halfspaces") {
  const Vec a = v2(0.6, -1.3);
  ConstraintSet band(2), halves(2);
  band.add(LinearBand(a, -0.4, 0.9));
  halves.add(LinearIneq(a, 0.9)).add(LinearIneq(Vec(-a), 0.4));
  CHECK(band.rows() == 2);
  CHECK(row_count(band[0]) == 2);
  SeededRng rng(12, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = sample_std_normal(rng, 2);
    CHECK(constraint_values(band, x) == constraint_values(halves, x));
    CHECK((max_violation(band, x) == 0.0) == (max_violation(halves, x) == 0.0));
  }
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(LinearIneq(v2(0, 0), 1.0), DomainError);
  CHECK_THROWS_AS(LinearBand(v2(1, 0), 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(QuadIneq(v2(1, 0), 0.0), DomainError);
  CHECK_THROWS_AS(MinDistance(v2(0, 0), -1.0), DomainError);
  CHECK_THROWS_AS(MinDistance(v2(0, 0), 1.0, {0}), DimensionError);
  ConstraintSet cs(2);
  CHECK_THROWS_AS(cs.add(LinearIneq(v1(1), 0.0)), DimensionError);
  CHECK_THROWS_AS(cs.add(MinDistance(v1(0), 1.0, {5})), DimensionError);
  CHECK_THROWS_AS(ConstraintSet(2, 0.0), DomainError);
}

TEST_CASE("MinDistance on a coordinate subset") {
  ConstraintSet cs(3);
  cs.add(MinDistance(v2(1, 1), 0.5, {0, 2}));
  Vec x(3);
  x << 1.0, 100.0, 1.2;
  CHECK(max_violation(cs, x) == doctest::Approx(0.3));
  const Vec g = cs.row_gradient(0, x);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == doctest::Approx(-1.0));
}

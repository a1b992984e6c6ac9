#include <doctest.h>

#include <cmath>

#include "ccfm/chance.hpp"
#include "ccfm/flow_model.hpp"
#include "ccfm/verify.hpp"

using namespace ccfm;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

double rhs_of(const Constraint& c, bool upper = true) {
  if (const auto* k = std::get_if<LinearIneq>(&c)) return k->b;
  const auto& band = std::get<LinearBand>(c);
  return upper ? band.hi : band.lo;
}

}  // namespace

TEST_CASE("scheduler") {
  CHECK(phi(Scheduler(0.5), 0.5) == doctest::Approx(0.5));
  CHECK(phi(Scheduler(0.1), 1.0) == doctest::Approx(0.9330329915368074).epsilon(1e-15));
  CHECK(phi(Scheduler(2.0), 0.0) == 0.0);
  CHECK_THROWS_AS(Scheduler(0.0), DomainError);
  CHECK_THROWS_AS(phi(Scheduler(0.5), 1.5), DomainError);
  for (double n : {0.1, 0.5, 1.0, 3.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double p = phi(Scheduler(n), i / 100.0);
      CHECK(p >= prev);
      CHECK(p <= std::pow(2.0, -n) + 1e-16);
      prev = p;
    }
  }
}

TEST_CASE("sigma_of_t") {
  CHECK(sigma_of_t(0.5) == 1.0);
  CHECK(sigma_of_t(1.0) == 0.0);
  CHECK(sigma_of_t(2.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(sigma_of_t(0.0), DomainError);
}

TEST_CASE("tighten_linear examples") {
  const auto t1 = tighten_linear(LinearIneq(v2(1, 0), 2.0), 1.0, 0.73);
  CHECK(t1.kind == TightenedKind::linear);
  CHECK(t1.rhs == 2.0);
  CHECK(tighten_linear(LinearIneq(v1(1), 1.0), 0.5, 0.5).rhs == 0.5);
  const auto t3 = tighten_linear(LinearIneq(v2(3, 4), 2.0), 0.5, 0.95);
  CHECK(t3.rhs == doctest::Approx(-3.1121340673786815).epsilon(1e-14));
  CHECK(std::abs(t3.rhs - (-3.112134)) < 1e-6);
  CHECK_THROWS_AS(tighten_linear(LinearIneq(v1(1), 1.0), 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(tighten_linear(LinearIneq(v1(1), 1.0), 0.5, 0.0), DomainError);
}

TEST_CASE("tighten_quadratic examples") {
  const auto t1 = tighten_quadratic(QuadIneq(v1(1), 4.0), 1.0, 0.9);
  CHECK(t1.kind == TightenedKind::quadratic_band);
  CHECK(t1.rhs == 2.0);
  const auto t2 = tighten_quadratic(QuadIneq(v1(1), 9.0), 2.0 / 3.0, 0.95);
  CHECK(t2.rhs == doctest::Approx(1.346678671819982).epsilon(1e-14));
  CHECK(tighten_quadratic(QuadIneq(v1(1), 0.01), 0.1, 0.95).kind == TightenedKind::inactive);
  CHECK_THROWS_AS(TightenedConstraint{}.to_constraint(), DomainError);
}

TEST_CASE("Monte Carlo soundness of the tightened boundaries") {
  constexpr long n = 200'000;
  SeededRng rng(31, 0);
  // Linear: exact at the boundary.
  const LinearIneq lin(v2(3, 4), 2.0);
  const auto tl = tighten_linear(lin, 0.5, 0.95);
  const Vec on_boundary = v2(3, 4) * (tl.rhs / 25.0);
  const McEstimate el = mc_chance(lin, on_boundary, 0.5, n, rng);
  CHECK(el.p_hat >= 0.95 - 3 * el.std_error);
  CHECK(el.p_hat <= 0.95 + 3 * el.std_error);

  // Quadratic: conservative at a.x = rhs, tight at a.x = 0 only at the
  // critical time where the band collapses.
  const QuadIneq quad(v1(1), 9.0);
  const auto tq = tighten_quadratic(quad, 2.0 / 3.0, 0.95);
  const McEstimate eq = mc_chance(quad, v1(tq.rhs), 2.0 / 3.0, n, rng);
  CHECK(eq.p_hat >= 0.95 - 3 * eq.std_error);
  const double z = normal_quantile(0.975);
  const double t_star = 1.0 / (1.0 + 3.0 / z);
  const McEstimate et = mc_chance(quad, v1(0.0), t_star, n, rng);
  CHECK(std::abs(et.p_hat - 0.95) <= 3 * et.std_error);
}

TEST_CASE("tightening is monotone and degenerates at t = 1") {
  const LinearIneq lin(v2(1, -2), 0.7);
  for (double p : {0.5, 0.8, 0.99}) {
    double prev = -INFINITY;
    for (int i = 1; i <= 200; ++i) {
      const double t = i / 200.0;
      const double r = tighten_linear(lin, t, p).rhs;
      CHECK(r >= prev - 1e-15);
      prev = r;
    }
    CHECK(tighten_linear(lin, 1.0, p).rhs == lin.b);
  }
  ConstraintSet cs(2);
  cs.add(lin).add(LinearBand(v2(1, 1), -0.3, 0.4)).add(QuadIneq(v2(0.5, 0.5), 2.0));
  const ConstraintSet at1 = tighten_set(cs, 1.0, Scheduler(0.5), EnforcementMode::marginal);
  REQUIRE(at1.size() == 3);
  CHECK(rhs_of(at1[0]) == 0.7);
  CHECK(rhs_of(at1[1]) == 0.4);
  CHECK(rhs_of(at1[1], false) == -0.3);
  CHECK(rhs_of(at1[2]) == std::sqrt(2.0));
  CHECK(rhs_of(at1[2], false) == -std::sqrt(2.0));
}

TEST_CASE("tighten_set marginal") {
  ConstraintSet empty(2);
  CHECK(tighten_set(empty, 0.4, Scheduler(0.5), EnforcementMode::marginal).empty());

  const Vec a = v2(0.8, -0.3);
  ConstraintSet band(2);
  band.add(LinearBand(a, -1.0, 1.2));
  const Scheduler s(0.5);
  for (double t : {0.2, 0.5, 0.9}) {
    const double side = 1.0 - (1.0 - phi(s, t)) / 2.0;
    const ConstraintSet out = tighten_set(band, t, s, EnforcementMode::marginal);
    const double hi = tighten_linear(LinearIneq(a, 1.2), t, side).rhs;
    const double lo = -tighten_linear(LinearIneq(Vec(-a), 1.0), t, side).rhs;
    if (lo <= hi) {
      CHECK(rhs_of(out[0]) == hi);
      CHECK(rhs_of(out[0], false) == lo);
    } else {
      CHECK(rhs_of(out[0]) == rhs_of(out[0], false));
    }
  }

  ConstraintSet ring(2);
  ring.add(MinDistance(v2(0, 0), 1.0));
  CHECK_THROWS_AS(tighten_set(ring, 0.5, s, EnforcementMode::marginal), ConfigError);
  CHECK(tighten_set(ring, 0.0, s, EnforcementMode::marginal).empty());
}

TEST_CASE("tighten_set pathwise") {
  ConstraintSet cs(1);
  cs.add(LinearIneq(v1(1), 0.0));
  const ConstraintSet out = tighten_set(cs, 0.5, Scheduler(0.5), EnforcementMode::pathwise, v1(2));
  const auto& k = std::get<LinearIneq>(out[0]);
  CHECK(k.a == v1(1));
  CHECK(k.b == 1.0);
  CHECK_THROWS_AS(tighten_set(cs, 0.5, Scheduler(0.5), EnforcementMode::pathwise), ConfigError);
}

TEST_CASE("pathwise composition is exact along linear paths") {
  ConstraintSet cs(3);
  Vec a(3), c(3);
  a << 1, 2, -1;
  c << 0.5, 0, 0;
  cs.add(LinearIneq(a, 0.3))
      .add(LinearBand(a, -0.5, 0.5))
      .add(QuadIneq(a, 1.5))
      .add(MinDistance(c, 0.8))
      .add(SmoothScalar(
          3, [](const Vec& x) { return std::sin(x[0]) + x[1] * x[2] - 0.2; },
          [](const Vec& x) {
            Vec g(3);
            g << std::cos(x[0]), x[2], x[1];
            return g;
          }));
  SeededRng rng(33, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec x0 = sample_std_normal(rng, 3), x1 = sample_std_normal(rng, 3);
    const double t = 0.05 + 0.95 * rng.uniform();
    const ConstraintSet ct = tighten_set(cs, t, Scheduler(0.5), EnforcementMode::pathwise, x0);
    const Vec xt = interpolate(x0, x1, t);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const double want = constraint_value(cs[k], x1);
      const double got = constraint_value(ct[k], xt);
      CHECK((got <= 0) == (want <= 0));
      if (k == 2) continue;  // the quadratic becomes a band in |a.x|
      const double scale = k == 4 ? 1.0 : t;
      CHECK(std::abs(got - scale * want) <= 1e-12 * (1 + std::abs(want)));
    }
  }
}

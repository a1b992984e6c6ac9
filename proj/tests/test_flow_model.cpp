#include <doctest.h>

#include <cmath>

#include "ccfm/flow_model.hpp"

using namespace ccfm;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("interpolate") {
  CHECK(interpolate(v2(0, 0), v2(2, 4), 0.5) == v2(1, 2));
  SeededRng rng(1, 0);
  const Vec x0 = sample_std_normal(rng, 3), x1 = sample_std_normal(rng, 3);
  CHECK(interpolate(x0, x1, 0.0) == x0);
  CHECK(interpolate(x0, x1, 1.0) == x1);
  CHECK_THROWS_AS(interpolate(x0, v2(1, 1), 0.5), DimensionError);
  CHECK_THROWS_AS(interpolate(x0, x1, 1.5), DomainError);
}

TEST_CASE("recover_x1 and affine_map_Mt") {
  CHECK(recover_x1(v2(1, 2), v2(0, 0), 0.5) == v2(2, 4));
  CHECK(recover_x1(v2(1, 2), v2(7, -3), 1.0) == v2(1, 2));
  CHECK(affine_map_Mt(v1(3), v1(2), 0.5) == v1(4));
  CHECK(affine_map_Mt(v1(2), v1(2), 0.5) == v1(2));
  CHECK_THROWS_AS(recover_x1(v1(1), v1(0), 0.0), DomainError);
  CHECK_THROWS_AS(affine_map_Mt(v1(1), v1(0), 0.0), DomainError);

  SeededRng rng(2, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec x0 = sample_std_normal(rng, 4), x1 = sample_std_normal(rng, 4);
    const double t = i == 0 ? 0.3 : 0.01 + 0.99 * rng.uniform();
    const Vec xt = interpolate(x0, x1, t);
    CHECK((recover_x1(xt, x0, t) - x1).lpNorm<Eigen::Infinity>() <= 1e-12 / t);
    CHECK(affine_map_Mt(xt, x0, t) == recover_x1(xt, x0, t));
  }
}

TEST_CASE("path algebra works on other scalar types") {
  Eigen::VectorXf a(2), b(2);
  a << 0.f, 0.f;
  b << 2.f, 4.f;
  const Eigen::VectorXf mid = interpolate(a, b, 0.5f);
  CHECK(mid[1] == 2.f);
}

TEST_CASE("exact_velocity closed forms") {
  Mat one(1, 1);
  one << 2.0;
  const FlowModel single(Target::empirical(one));
  CHECK(exact_velocity(single, v1(0), 0.5)[0] == doctest::Approx(4.0).epsilon(1e-15));

  Mat two(2, 1);
  two << -1, 1;
  const FlowModel sym(Target::empirical(two));
  for (double t : {0.0, 0.2, 0.5, 0.9, 0.999})
    CHECK(std::abs(exact_velocity(sym, v1(0), t)[0]) <= 1e-15);

  CHECK_THROWS_AS(exact_velocity(single, v1(0), 1.0), DomainError);
}

TEST_CASE("exact_velocity matches a direct log-sum-exp posterior") {
  Mat atoms(3, 1);
  atoms << -1.0, 0.5, 2.0;
  Vec w(3);
  w << 0.2, 0.5, 0.3;
  const FlowModel model(Target::empirical(atoms, w));
  const double x = 0.3, t = 0.7, var = 0.09;

  double logits[3], top = -INFINITY;
  for (int i = 0; i < 3; ++i) {
    logits[i] = std::log(w[i]) - std::pow(x - t * atoms(i, 0), 2) / (2 * var);
    top = std::max(top, logits[i]);
  }
  double z = 0, num = 0;
  for (int i = 0; i < 3; ++i) {
    z += std::exp(logits[i] - top);
    num += std::exp(logits[i] - top) * atoms(i, 0);
  }
  const double want = (num / z - x) / (1 - t);
  CHECK(std::abs(exact_velocity(model, v1(x), t)[0] - want) <= 1e-12);
}

TEST_CASE("posterior weights are a probability vector") {
  SeededRng rng(3, 0);
  Mat atoms = Mat::NullaryExpr(8, 3, [&] { return 2.0 * rng.normal(); });
  const FlowModel emp(Target::empirical(atoms));
  Mat means(3, 3);
  means << 0, 0, 0, 3, 0, 0, 0, -3, 1;
  Vec scales(3), weights(3);
  scales << 0.5, 1.0, 0.2;
  weights << 0.5, 0.3, 0.2;
  const FlowModel gm(Target::gaussian_mixture(means, scales, weights));
  for (int i = 0; i < 300; ++i) {
    const Vec x = 3.0 * sample_std_normal(rng, 3);
    const double t = rng.uniform() * (1 - 1e-9);
    for (const FlowModel* m : {&emp, &gm}) {
      const Posterior p = posterior(*m, x, t);
      CHECK((p.weights.array() >= 0.0).all());
      CHECK(std::abs(p.weights.sum() - 1.0) <= 1e-12);
      CHECK(exact_velocity(*m, x, t).allFinite());
    }
  }
}

TEST_CASE("posterior mean approaches the nearest atom near t = 1") {
  Mat atoms(3, 2);
  atoms << 0, 0, 1, 1, -2, 1;
  const FlowModel model(Target::empirical(atoms));
  const double t = 1 - 1e-6;
  const Vec x = t * v2(0.9, 0.8);
  CHECK((posterior(model, x, t).mean_x1 - v2(1, 1)).norm() <= 1e-12);
}

TEST_CASE("Euler on the exact field recovers the straight line") {
  Mat one(1, 2);
  one << 2.0, -1.0;
  const FlowModel model(Target::empirical(one));
  const Vec c = one.row(0).transpose();
  const Vec x0 = v2(-0.4, 0.7);
  for (int n : {10, 40}) {
    Vec x = x0;
    for (int k = 0; k < n; ++k) {
      const double t = double(k) / n;
      x += (1.0 / n) * exact_velocity(model, x, t);
      CHECK((x - interpolate(x0, c, double(k + 1) / n)).norm() <= 1e-12);
    }
    CHECK((x - c).norm() <= (c - x0).norm() / n);
  }
}

TEST_CASE("target validation") {
  Mat means(2, 1);
  means << 0, 1;
  CHECK_THROWS_AS(Target::gaussian_mixture(means, Vec::Ones(1), Vec::Constant(2, 0.5)), DimensionError);
  CHECK_THROWS_AS(Target::gaussian_mixture(means, -Vec::Ones(2), Vec::Constant(2, 0.5)), DomainError);
  CHECK_THROWS_AS(Target::empirical(means, Vec::Ones(2)), DomainError);
  CHECK_THROWS_AS(Target::empirical(Mat(0, 1)), DimensionError);
}

TEST_CASE("sample_target follows component weights") {
  Mat means(2, 1);
  means << -5, 5;
  Vec w(2);
  w << 0.25, 0.75;
  const FlowModel model(Target::gaussian_mixture(means, Vec::Constant(2, 0.1), w));
  SeededRng rng(4, 0);
  int right = 0;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) right += model.sample_target(rng)[0] > 0;
  const double se = std::sqrt(0.75 * 0.25 / n);
  CHECK(std::abs(right / double(n) - 0.75) <= 4 * se);
}

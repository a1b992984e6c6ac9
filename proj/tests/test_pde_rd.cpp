#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ccfm/pde_rd.hpp"

using namespace ccfm;

namespace {

RdProblem random_problem(std::uint64_t seed, const RdGrid& grid = {}) {
  RdProblem p;
  p.grid = grid;
  SeededRng rng(seed, 0);
  p.ic = random_ic(p.grid, rng);
  std::tie(p.g_left, p.g_right) = random_fluxes(rng);
  return p;
}

}  // namespace

TEST_CASE("grid") {
  const RdGrid g;
  CHECK(g.dim() == 640);
  CHECK(g.dt == doctest::Approx(5.0 / 19.0));
  CHECK(g.quadrature().sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(RdGrid(3, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(RdGrid(8, 1, 1.0), ConfigError);
}

TEST_CASE("equilibria") {
  for (double level : {0.0, 1.0}) {
    RdProblem p;
    p.ic = Vec::Constant(p.grid.n_s, level);
    const Mat field = simulate_rd(p);
    CHECK((field.array() - level).abs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("heat eigenmode decays at the continuum rate") {
  RdProblem p;
  p.rho = 0.0;
  const int n = p.grid.n_s;
  const double k = 2.0 * std::numbers::pi;  // second Neumann mode on [0, 1]
  p.ic.resize(n);
  for (int i = 0; i < n; ++i) p.ic[i] = std::cos(k * i * p.grid.h());
  const Mat field = simulate_rd(p);
  const double t_final = p.grid.dt * (p.grid.n_t - 1);
  const double amp = field.row(p.grid.n_t - 1).dot(p.ic.transpose()) / p.ic.squaredNorm();
  const double want = std::exp(-p.nu * k * k * t_final);
  CHECK(std::abs(amp / want - 1.0) <= 0.05);
}

TEST_CASE("simulated fields satisfy their own constraints") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const RdProblem p = random_problem(100 + s);
    const Mat field = simulate_rd(p);
    CHECK(field.row(0) == p.ic.transpose());
    const Vec x = flatten(field);
    const ConstraintSet cs = rd_constraints(p);
    CHECK(cs.size() == std::size_t(p.grid.n_s + 2 * (p.grid.n_t - 1)));
    CHECK(max_violation(cs, x) <= 1e-8);
    for (int k = 0; k < p.grid.n_t; ++k) CHECK(std::abs(mass_defect(p, x, k)) <= 1e-12);
  }
}

TEST_CASE("IC band arithmetic") {
  const RdProblem p = random_problem(7);
  Vec x = flatten(simulate_rd(p));
  x[5] += 0.1;
  const ConstraintSet cs = rd_constraints(p);
  CHECK(max_violation(cs, x, "ic") == doctest::Approx(0.1 - p.delta).epsilon(1e-12));
}

TEST_CASE("mass law on a zero field measures the boundary flux") {
  RdProblem p;
  p.ic = Vec::Zero(p.grid.n_s);
  p.g_left = 0.004;
  p.g_right = -0.001;
  const ConstraintSet cs = rd_constraints(p);
  const double t_final = p.grid.dt * (p.grid.n_t - 1);
  const double want = std::abs(t_final * (p.g_left - p.g_right)) - p.delta;
  CHECK(max_violation(cs, Vec::Zero(p.grid.dim()), "cl") == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mass-law gradients match finite differences") {
  const RdProblem p = random_problem(8, RdGrid(8, 5, 2.0));
  const ConstraintSet cs = rd_constraints(p);
  SeededRng rng(9, 0);
  const Vec x = flatten(simulate_rd(p)) + 0.1 * sample_std_normal(rng, p.grid.dim());
  for (Eigen::Index row = 2 * p.grid.n_s; row < cs.rows(); ++row) {
    const Vec g = cs.row_gradient(row, x);
    Vec fd(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Vec xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      fd[j] = (cs.row_value(row, xp) - cs.row_value(row, xm)) / 2e-6;
    }
    CHECK((g - fd).norm() <= 1e-5 * g.norm());
  }
}

TEST_CASE("flatten round trip") {
  const RdGrid g(6, 4, 1.0);
  Mat field(4, 6);
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 6; ++i) field(k, i) = 6.0 * k + i;
  const Vec x = flatten(field);
  CHECK(x[6] == field(1, 0));
  CHECK(unflatten(x, g) == field);
  CHECK_THROWS_AS(unflatten(Vec::Zero(5), g), DimensionError);
}

TEST_CASE("rd_metrics") {
  SeededRng rng(10, 0);
  const RdGrid g(6, 3, 1.0);
  RdProblem p;
  p.grid = g;
  p.ic = Vec::Constant(6, 0.5);
  const ConstraintSet cs = rd_constraints(p);
  std::vector<Vec> ref, shifted, other;
  for (int i = 0; i < 7; ++i) {
    ref.push_back(sample_std_normal(rng, g.dim()));
    shifted.push_back(ref.back().array() + 0.1);
  }
  for (int i = 0; i < 5; ++i) other.push_back(sample_std_normal(rng, g.dim()));

  const RdMetrics same = rd_metrics(ref, ref, cs);
  CHECK(same.mmse == 0.0);
  CHECK(same.smse == 0.0);
  const RdMetrics shift = rd_metrics(shifted, ref, cs);
  CHECK(shift.mmse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(shift.smse <= 1e-28);

  // Naive double loop.
  const Eigen::Index d = g.dim();
  double mmse = 0, smse = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double ma = 0, mb = 0;
    for (const Vec& x : other) ma += x[j] / other.size();
    for (const Vec& x : ref) mb += x[j] / ref.size();
    double va = 0, vb = 0;
    for (const Vec& x : other) va += (x[j] - ma) * (x[j] - ma) / (other.size() - 1);
    for (const Vec& x : ref) vb += (x[j] - mb) * (x[j] - mb) / (ref.size() - 1);
    mmse += (ma - mb) * (ma - mb) / d;
    smse += (std::sqrt(va) - std::sqrt(vb)) * (std::sqrt(va) - std::sqrt(vb)) / d;
  }
  const RdMetrics m = rd_metrics(other, ref, cs);
  CHECK(m.mmse == doctest::Approx(mmse).epsilon(1e-12));
  CHECK(m.smse == doctest::Approx(smse).epsilon(1e-12));
  double cv_ic = 0;
  for (const Vec& x : other) cv_ic = std::max(cv_ic, max_violation(cs, x, "ic"));
  CHECK(m.cv_ic == cv_ic);

  CHECK_THROWS_AS(rd_metrics({ref[0]}, ref, cs), DomainError);
  CHECK_THROWS_AS(rd_metrics(other, ref, std::vector<ConstraintSet>{cs}), DimensionError);
}

TEST_CASE("problem validation") {
  RdProblem p;
  p.ic = Vec::Zero(p.grid.n_s);
  p.rho = 0.0;
  CHECK_THROWS_AS(rd_constraints(p), ConfigError);
  p.rho = 0.01;
  p.ic = Vec::Zero(3);
  CHECK_THROWS_AS(rd_constraints(p), DimensionError);
  CHECK_THROWS_AS(simulate_rd(p), DimensionError);
}

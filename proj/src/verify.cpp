#include "ccfm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccfm {

McEstimate mc_chance(const Constraint& c, const Vec& x_t, double t, long n_trials, SeededRng& rng) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("mc_chance: t must lie in (0, 1]");
  if (n_trials < 1) throw DomainError("mc_chance: n_trials must be >= 1");
  const double scale = (1.0 - t) / t;
  const Vec center = x_t / t;
  Vec y(x_t.size());
  long hits = 0;
  for (long n = 0; n < n_trials; ++n) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = center[i] - scale * rng.normal();
    if (constraint_value(c, y) <= 0.0) ++hits;
  }
  McEstimate est;
  est.n_trials = n_trials;
  est.p_hat = static_cast<double>(hits) / static_cast<double>(n_trials);
  est.std_error = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n_trials));
  return est;
}

namespace {

bool feasible(const ConstraintSet& cs, const Vec& y) {
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (constraint_value(cs[i], y) > 0.0) return false;
  return true;
}

// Exhaustive search over x + spacing * k for integer k with x + spacing * k in
// [lo, hi] per coordinate; updates (best, best_sq) on improvement.
void lattice_search(const Vec& x, const ConstraintSet& cs, double spacing, const Vec& lo,
                    const Vec& hi, Vec& best, double& best_sq) {
  const Eigen::Index d = x.size();
  std::vector<long> k_lo(static_cast<std::size_t>(d)), k_hi(static_cast<std::size_t>(d)),
      k(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto u = static_cast<std::size_t>(j);
    k_lo[u] = static_cast<long>(std::ceil((lo[j] - x[j]) / spacing));
    k_hi[u] = static_cast<long>(std::floor((hi[j] - x[j]) / spacing));
    if (k_lo[u] > k_hi[u]) return;
    k[u] = k_lo[u];
  }
  Vec y(d);
  for (;;) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double step = spacing * static_cast<double>(k[static_cast<std::size_t>(j)]);
      y[j] = x[j] + step;
      sq += step * step;
    }
    if (sq < best_sq && feasible(cs, y)) {
      best_sq = sq;
      best = y;
    }
    Eigen::Index j = 0;
    for (; j < d; ++j) {
      const auto u = static_cast<std::size_t>(j);
      if (++k[u] <= k_hi[u]) break;
      k[u] = k_lo[u];
    }
    if (j == d) return;
  }
}

Vec grid_project(const Vec& x, const ConstraintSet& cs, const BruteForceConfig& cfg) {
  if (x.size() > 4) throw DomainError("brute_force_project: grid mode needs d <= 4");
  if (!(cfg.box_radius > 0.0) || cfg.levels < 1) throw DomainError("brute_force_project: bad grid config");
  Vec best;
  double best_sq = std::numeric_limits<double>::infinity();
  const Vec r = Vec::Constant(x.size(), cfg.box_radius);
  double spacing = cfg.h;
  lattice_search(x, cs, spacing, x - r, x + r, best, best_sq);
  if (!std::isfinite(best_sq)) throw NumericalError("brute_force_project: no feasible lattice point in the box");
  for (int level = 1; level < cfg.levels; ++level) {
    const double dist = std::max(std::sqrt(best_sq), spacing);
    const double window = std::max(4.0 * spacing, 5.0 * std::pow(spacing, 2.0 / 3.0) * std::cbrt(dist));
    const Vec w = Vec::Constant(x.size(), window);
    const Vec center = best;
    spacing /= 10.0;
    lattice_search(x, cs, spacing, center - w, center + w, best, best_sq);
  }
  return best;
}

// Quadratic penalty 0.5 ||y - x||^2 + 0.5 mu sum hinge^2 with mu increasing.
Vec penalty_descent(const Vec& x, const Vec& start, const ConstraintSet& cs) {
  Vec y = start;
  for (double mu = 10.0; mu <= 1e9; mu *= 10.0) {
    for (int it = 0; it < 2000; ++it) {
      Vec grad = y - x;
      double curvature = 1.0;
      for (Eigen::Index row = 0; row < cs.rows(); ++row) {
        const double g = cs.row_value(row, y);
        if (g <= 0.0) continue;
        const Vec dg = cs.row_gradient(row, y);
        grad += mu * g * dg;
        curvature += mu * dg.squaredNorm();
      }
      const Vec step = grad / curvature;
      y -= step;
      if (step.norm() < 1e-14) break;
    }
  }
  return y;
}

Vec restart_project(const Vec& x, const ConstraintSet& cs, const BruteForceConfig& cfg) {
  if (cfg.restarts < 1) throw DomainError("brute_force_project: restarts must be >= 1");
  SeededRng rng(cfg.seed, 0x0ac1e);
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    const Vec start = r == 0 ? x : Vec(x + cfg.box_radius * sample_std_normal(rng, x.size()));
    Vec y = penalty_descent(x, start, cs);
    if (max_violation(cs, y) > 1e-6) continue;
    const double dist = (y - x).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(y);
    }
  }
  if (!std::isfinite(best_dist)) throw NumericalError("brute_force_project: every restart ended infeasible");
  return best;
}

}  // namespace

Vec brute_force_project(const Vec& x, const ConstraintSet& cs, const BruteForceConfig& cfg) {
  if (x.size() != cs.dim()) throw DimensionError("brute_force_project: dimension mismatch");
  if (feasible(cs, x)) return x;
  return cfg.mode == OracleMode::grid ? grid_project(x, cs, cfg) : restart_project(x, cs, cfg);
}

double w2_squared_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("w2_squared_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // Integrate (F_a^{-1}(u) - F_b^{-1}(u))^2 over the merged quantile breakpoints.
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    const double diff = a[i] - b[j];
    total += diff * diff * (next - u);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

double sliced_w2(const std::vector<Vec>& a, const std::vector<Vec>& b, int n_projections,
                 SeededRng& rng) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("sliced_w2: need at least two points per batch");
  if (n_projections < 1) throw DomainError("sliced_w2: n_projections must be >= 1");
  const Eigen::Index d = a.front().size();
  for (const auto* batch : {&a, &b})
    for (const Vec& x : *batch)
      if (x.size() != d) throw DimensionError("sliced_w2: dimension mismatch");

  std::vector<double> pa(a.size()), pb(b.size());
  double sum = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    Vec theta = sample_std_normal(rng, d);
    theta /= theta.norm();
    std::transform(a.begin(), a.end(), pa.begin(), [&](const Vec& x) { return theta.dot(x); });
    std::transform(b.begin(), b.end(), pb.begin(), [&](const Vec& x) { return theta.dot(x); });
    sum += w2_squared_1d(pa, pb);
  }
  return std::sqrt(sum / n_projections);
}

DistortionReport feasibility_report(const std::vector<SampleRecord>& records, const ConstraintSet& cs,
                                    const std::vector<Vec>& reference, int n_projections,
                                    SeededRng& rng) {
  if (records.empty()) throw DomainError("feasibility_report: empty batch");
  DistortionReport rep;
  std::size_t ok = 0;
  double moves = 0.0;
  std::vector<Vec> finals;
  finals.reserve(records.size());
  for (const SampleRecord& r : records) {
    if (!r.failure.empty()) continue;
    if (max_violation(cs, r.x1) <= cs.tolerance()) ++ok;
    double total = 0.0;
    for (double m : r.projection_moves) total += m;
    moves += total;
    finals.push_back(r.x1);
  }
  rep.feasibility_rate = static_cast<double>(ok) / static_cast<double>(records.size());
  rep.mean_projection_move = finals.empty() ? 0.0 : moves / static_cast<double>(finals.size());
  rep.sliced_w2 = reference.empty() || finals.size() < 2
                      ? std::numeric_limits<double>::quiet_NaN()
                      : sliced_w2(finals, reference, n_projections, rng);
  return rep;
}

}  // namespace ccfm

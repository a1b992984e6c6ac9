#include "ccfm/projection.hpp"

#include <cmath>

#include "ccfm/flow_model.hpp"

namespace ccfm {

namespace {

Vec halfspace(const Vec& x, const Vec& a, double b) {
  const double excess = a.dot(x) - b;
  if (excess <= 0.0) return x;
  return x - (excess / a.squaredNorm()) * a;
}

Vec slab(const Vec& x, const Vec& a, double lo, double hi) {
  const double s = a.dot(x);
  if (s > hi) return x - ((s - hi) / a.squaredNorm()) * a;
  if (s < lo) return x - ((s - lo) / a.squaredNorm()) * a;
  return x;
}

Vec project_single(const Vec& x, const Constraint& c) {
  if (const auto* k = std::get_if<LinearIneq>(&c)) return halfspace(x, k->a, k->b);
  const auto& band = std::get<LinearBand>(c);
  return slab(x, band.a, band.lo, band.hi);
}

}  // namespace

Vec project_linear(const Vec& x, const LinearIneq& c) {
  require_same_size(x, c.a, "project_linear");
  return halfspace(x, c.a, c.b);
}

Vec project_linear(const Vec& x, const TightenedConstraint& c) {
  if (c.kind != TightenedKind::linear) throw DomainError("project_linear: not a linear constraint");
  require_same_size(x, c.a, "project_linear");
  return halfspace(x, c.a, c.rhs);
}

Vec project_band(const Vec& x, const LinearBand& band) {
  require_same_size(x, band.a, "project_band");
  return slab(x, band.a, band.lo, band.hi);
}

Vec project_band(const Vec& x, const TightenedConstraint& band) {
  if (band.kind != TightenedKind::quadratic_band)
    throw DomainError("project_band: not a band constraint");
  if (band.rhs < 0.0) throw DomainError("project_band: rhs must be >= 0");
  require_same_size(x, band.a, "project_band");
  return slab(x, band.a, -band.rhs, band.rhs);
}

ProjectionReport project_pocs(const Vec& x, const ConstraintSet& constraints, int max_cycles,
                              double tol) {
  if (!constraints.all_linear())
    throw DomainError("project_pocs: only halfspaces and slabs have closed-form projections");
  if (x.size() != constraints.dim()) throw DimensionError("project_pocs: dimension mismatch");

  ProjectionReport rep;
  rep.x_out = x;
  rep.violation_history.push_back(max_violation(constraints, x));
  if (rep.violation_history.back() <= 0.0 || constraints.empty()) {
    rep.final_max_violation = rep.violation_history.back();
    rep.converged = true;
    return rep;
  }

  // Dykstra: one correction vector per constraint.
  std::vector<Vec> corr(constraints.size(), Vec::Zero(x.size()));
  Vec cur = x;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const Vec start = cur;
    double corr_change = 0.0;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const Vec shifted = cur + corr[i];
      cur = project_single(shifted, constraints[i]);
      const Vec next = shifted - cur;
      corr_change = std::max(corr_change, (next - corr[i]).norm());
      corr[i] = next;
    }
    ++rep.iterations;
    const double viol = max_violation(constraints, cur);
    rep.violation_history.push_back(viol);
    if ((cur - start).norm() <= tol && corr_change <= tol && viol <= tol) {
      rep.converged = true;
      break;
    }
  }
  rep.x_out = cur;
  rep.final_max_violation = rep.violation_history.back();
  return rep;
}

ProjectionReport gauss_newton_project(const Vec& x, const ConstraintSet& cs, const GnConfig& cfg) {
  if (!(cfg.lambda > 0.0) || !(cfg.tol > 0.0)) throw DomainError("GnConfig: lambda and tol must be > 0");
  if (x.size() != cs.dim()) throw DimensionError("gauss_newton_project: dimension mismatch");
  require_finite(x, "gauss_newton_project input");

  ProjectionReport rep;
  rep.x_out = x;
  for (;;) {
    const Vec g = constraint_values(cs, rep.x_out);
    const double viol = std::max(0.0, g.size() ? g.maxCoeff() : 0.0);
    rep.violation_history.push_back(viol);
    if (viol <= cfg.tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_iters) break;

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (g[i] > 0.0) active.push_back(i);
    Vec r(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) r[static_cast<Eigen::Index>(k)] = g[active[k]];
    const Mat J = jacobian_active(cs, rep.x_out, active);
    Mat schur = J * J.transpose();
    schur.diagonal().array() += cfg.lambda;
    Vec dx = -J.transpose() * solve_spd(schur, r);
    const double step = dx.norm();
    if (step > cfg.step_cap) dx *= cfg.step_cap / step;
    rep.x_out += dx;
    ++rep.iterations;
  }
  rep.final_max_violation = rep.violation_history.back();
  return rep;
}

ProjectionReport final_refine(const Vec& x, const ConstraintSet& cs, int budget, double lambda,
                              std::optional<double> tol) {
  GnConfig cfg;
  cfg.lambda = lambda;
  cfg.max_iters = budget;
  cfg.tol = tol.value_or(cs.tolerance());
  return gauss_newton_project(x, cs, cfg);
}

ProjectionReport project_onto(const Vec& x, const ConstraintSet& cs, const GnConfig& cfg) {
  if (cs.all_linear()) return project_pocs(x, cs);
  return gauss_newton_project(x, cs, cfg);
}

Vec project_decomposed(const Vec& x, const Vec& x0, double t, const ConstraintSet& cs,
                       const GnConfig& cfg) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("project_decomposed: t must lie in (0, 1]");
  const Vec clean = affine_map_Mt(x, x0, t);
  const Vec projected = project_onto(clean, cs, cfg).x_out;
  if (projected == clean) return x;
  return interpolate(x0, projected, t);
}

}  // namespace ccfm

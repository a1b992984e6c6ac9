#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "ccfm/chance.hpp"
#include "ccfm/constraints.hpp"

namespace ccfm {

struct ProjectionReport {
  Vec x_out;
  int iterations = 0;
  double final_max_violation = 0.0;
  bool converged = false;
  /// max_violation at every iterate, starting with the input point.
  std::vector<double> violation_history;
};

/// Gauss-Newton settings. `max_iters = 1` is the single per-step update.
struct GnConfig {
  double lambda = 1e-6;
  int max_iters = 1;
  double tol = ConstraintSet::kDefaultTolerance;
  double step_cap = std::numeric_limits<double>::infinity();
};

// Closed-form projections. Inputs already satisfying the constraint are
// returned unchanged.
Vec project_linear(const Vec& x, const LinearIneq& c);
Vec project_linear(const Vec& x, const TightenedConstraint& c);
Vec project_band(const Vec& x, const LinearBand& band);
Vec project_band(const Vec& x, const TightenedConstraint& band);

/// Euclidean projection onto an intersection of halfspaces and slabs by
/// Dykstra's cyclic projections in declaration order. Stops once a full cycle
/// moves the iterate and every correction by at most `tol` and the set is
/// satisfied within `tol`.
/// Non-convergence is reported, never thrown.
ProjectionReport project_pocs(const Vec& x, const ConstraintSet& constraints, int max_cycles = 100000,
                              double tol = 1e-12);

/// Ridge-regularized Gauss-Newton on the hinge residuals of the active set:
///   y = (J J^T + lambda I)^{-1} r,  x <- x - J^T y.
ProjectionReport gauss_newton_project(const Vec& x, const ConstraintSet& cs, const GnConfig& cfg);

/// Newton-Schur refinement for strict feasibility: up to `budget` Gauss-Newton
/// iterations, stopping once the violation is at most `tol` (cs.tolerance()
/// when unset).
ProjectionReport final_refine(const Vec& x, const ConstraintSet& cs, int budget = 30,
                              double lambda = 1e-6, std::optional<double> tol = std::nullopt);

/// Projection onto C_t(x0) = (1 - t) x0 + t C1 computed as
/// (1 - t) x0 + t P1(M_t(x)). P1 is closed form for all-linear sets and
/// Gauss-Newton otherwise.
Vec project_decomposed(const Vec& x, const Vec& x0, double t, const ConstraintSet& cs,
                       const GnConfig& cfg);

/// Projection onto C1 used by the samplers: Dykstra for all-linear sets,
/// otherwise Gauss-Newton with `cfg`.
ProjectionReport project_onto(const Vec& x, const ConstraintSet& cs, const GnConfig& cfg);

}  // namespace ccfm

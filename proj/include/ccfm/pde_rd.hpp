#pragma once

#include <vector>

#include "ccfm/constraints.hpp"

namespace ccfm {

/// Node-centred grid on [0, L]: n_s points with spacing L / (n_s - 1),
/// n_t frames at spacing dt.
struct RdGrid {
  int n_s = 32;
  int n_t = 20;
  double length = 1.0;
  double dt = 5.0 / 19.0;

  RdGrid() = default;
  RdGrid(int n_s, int n_t, double t_final, double length = 1.0);

  double h() const { return length / (n_s - 1); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(n_s) * n_t; }
  /// Trapezoid weights for m = sum_i w_i v_i.
  Vec quadrature() const;
  void validate() const;
};

/// v_t = nu v_ss + rho v (1 - v) with flux conditions nu v_s(0) = -g_left,
/// nu v_s(L) = -g_right (so g is outward-positive at the left edge).
struct RdProblem {
  RdGrid grid;
  double nu = 0.005;
  double rho = 0.01;
  Vec ic;
  double g_left = 0.0;
  double g_right = 0.0;
  double delta = 1e-10;

  void validate() const;
};

/// n_t x n_s field; row k is frame k. Row 0 equals the initial condition.
///
/// Semi-implicit: backward Euler for diffusion, forward Euler for reaction,
/// fluxes through ghost nodes. The trapezoid mass changes by exactly
/// dt ((g_left - g_right) + rho sum_i w_i v_i (1 - v_i)) per step.
Mat simulate_rd(const RdProblem& p);

/// Frame-major flattening: entry k * n_s + i is v(s_i, t_k).
Vec flatten(const Mat& field);
Mat unflatten(const Vec& x, const RdGrid& grid);

/// Smooth random initial condition: 0.5 + three sine modes + a Gaussian bump.
Vec random_ic(const RdGrid& grid, SeededRng& rng);
/// Random Neumann fluxes, uniform in [-0.005, 0.005].
std::pair<double, double> random_fluxes(SeededRng& rng);

/// IC band (group "ic"): |v(s_i, 0) - ic_i| <= delta per grid point.
/// Mass law (group "cl"): for each frame k >= 1,
///   |m_k - m_0 - R_k - F_k| <= delta, with
///   R_k = dt rho sum_{j<k} sum_i w_i v_{j,i} (1 - v_{j,i}),  F_k = k dt (g_left - g_right),
/// encoded as two SmoothScalar rows.
ConstraintSet rd_constraints(const RdProblem& p, double tolerance = ConstraintSet::kDefaultTolerance);

/// Signed mass-law defect c_k for frame k of a flattened field.
double mass_defect(const RdProblem& p, const Vec& x, int k);

struct RdMetrics {
  double mmse = 0.0;
  double smse = 0.0;
  double cv_ic = 0.0;
  double cv_cl = 0.0;
};

/// Pointwise errors of the batch mean and sample standard deviation, averaged
/// over the grid, plus worst-case IC / mass-law hinge violations.
RdMetrics rd_metrics(const std::vector<Vec>& generated, const std::vector<Vec>& reference,
                     const ConstraintSet& cs);
/// As above, with generated[i] checked against its own constraint set sets[i].
RdMetrics rd_metrics(const std::vector<Vec>& generated, const std::vector<Vec>& reference,
                     const std::vector<ConstraintSet>& sets);

}  // namespace ccfm

#pragma once

#include <cstdint>
#include <vector>

#include "ccfm/constraints.hpp"
#include "ccfm/samplers.hpp"

namespace ccfm {

struct McEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;  ///< sqrt(p_hat (1 - p_hat) / n_trials)
  long n_trials = 0;
};

/// Frequency of g(x_t / t - xi) <= 0 over xi = (1 - t) x0 / t, x0 ~ N(0, I).
McEstimate mc_chance(const Constraint& c, const Vec& x_t, double t, long n_trials, SeededRng& rng);

enum class OracleMode { grid, restarts };

struct BruteForceConfig {
  OracleMode mode = OracleMode::grid;
  double h = 1e-3;          ///< nominal lattice spacing
  double box_radius = 1.0;  ///< half-width of the first search box around x
  int levels = 3;           ///< zoom levels, each 10x finer than the last
  int restarts = 16;
  std::uint64_t seed = 0;
};

/// Nearest feasible point found by exhaustive search (grid, d <= 4) or by the
/// best of several seeded quadratic-penalty descents (restarts, any d).
///
/// Grid mode searches a lattice anchored at x over the box, then re-searches a
/// window around the incumbent at 10x finer spacing, `levels` times in total.
/// The window covers every lattice point that could still beat the incumbent
/// on a boundary with bounded curvature. Throws NumericalError when no
/// feasible point is found.
Vec brute_force_project(const Vec& x, const ConstraintSet& cs, const BruteForceConfig& cfg = {});

/// Sliced 2-Wasserstein distance: sqrt of the mean over `n_projections`
/// seeded random directions of the exact 1-D squared W2 between the projected
/// empirical measures. Batch sizes may differ.
double sliced_w2(const std::vector<Vec>& a, const std::vector<Vec>& b, int n_projections,
                 SeededRng& rng);

/// Exact squared W2 between two 1-D empirical measures with uniform weights.
double w2_squared_1d(std::vector<double> a, std::vector<double> b);

struct DistortionReport {
  double sliced_w2 = 0.0;
  double feasibility_rate = 0.0;
  double mean_projection_move = 0.0;
};

/// Samples with a failure or a violation above cs.tolerance() count as
/// infeasible. sliced_w2 is NaN when `reference` is empty.
DistortionReport feasibility_report(const std::vector<SampleRecord>& records, const ConstraintSet& cs,
                                    const std::vector<Vec>& reference, int n_projections,
                                    SeededRng& rng);

}  // namespace ccfm

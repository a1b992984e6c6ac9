#pragma once

#include "ccfm/constraints.hpp"

namespace ccfm {

/// Probabilistic scheduler phi(t) = (t / 2)^n.
struct Scheduler {
  double exponent = 0.5;

  explicit Scheduler(double n = 0.5);
};

double phi(const Scheduler& s, double t);

/// Noise scale sigma = (1 - t) / t of xi = (1 - t) x0 / t. Zero at t = 1.
double sigma_of_t(double t);

enum class TightenedKind { linear, quadratic_band, inactive };

/// Deterministic time-t surrogate of a chance constraint on the clean sample:
///   linear:          a . x_t <= rhs
///   quadratic_band:  |a . x_t| <= rhs
///   inactive:        nothing enforced this step
struct TightenedConstraint {
  TightenedKind kind = TightenedKind::inactive;
  Vec a;
  double rhs = 0.0;

  /// Equivalent LinearIneq / LinearBand. Throws DomainError when inactive.
  Constraint to_constraint() const;
};

/// P_xi(a.(x_t/t - xi) <= b) >= p  <=>  a.x_t <= t b - t sigma ||a|| z_p.
TightenedConstraint tighten_linear(const LinearIneq& c, double t, double satisfy_prob);

/// Two-sided union-bound reformulation of P_xi((a.(x_t/t - xi))^2 <= b) >= p:
///   |a.x_t| <= t (sqrt(b) - sigma ||a|| z_{(1+p)/2}),
/// inactive when the right-hand side would be negative.
TightenedConstraint tighten_quadratic(const QuadIneq& c, double t, double satisfy_prob);

enum class EnforcementMode { marginal, pathwise };

/// Satisfaction probabilities below this make a step's constraints inactive.
inline constexpr double kMinSatisfyProb = 1e-12;

/// Constraints to enforce on x_t at time t.
///
/// marginal: Gaussian reformulations at satisfy_prob = phi(t). Each side of a
///   LinearBand gets half the risk. If the two tightened sides cross, the band
///   collapses to the midpoint of the crossed interval. Only linear, band and
///   quadratic kinds are accepted (ConfigError otherwise).
/// pathwise: the exact set {x : g(M_t(x)) <= 0} for the realized x0,
///   i.e. (1 - t) x0 + t C1. Every kind is accepted.
///
/// Returns an empty set when phi(t) < kMinSatisfyProb.
ConstraintSet tighten_set(const ConstraintSet& cs, double t, const Scheduler& s,
                          EnforcementMode mode, const Vec& x0 = Vec());

}  // namespace ccfm

#include "ccfm/chance.hpp"

#include <cmath>

namespace ccfm {

namespace {

void require_time(double t, const char* what) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError(std::string(what) + ": t must lie in (0, 1]");
}

void require_prob(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(what) + ": probability must lie in (0, 1)");
}

// Same arithmetic as tighten_linear, reused for each side of a band.
double tightened_rhs(const Vec& a, double b, double t, double satisfy_prob) {
  return t * b - t * sigma_of_t(t) * a.norm() * normal_quantile(satisfy_prob);
}

Constraint compose_with_Mt(const Constraint& c, const Vec& x0, double t) {
  // g(M_t(x)) <= 0 rewritten in x for each kind.
  if (const auto* k = std::get_if<LinearIneq>(&c))
    return LinearIneq(k->a, t * k->b + (1.0 - t) * k->a.dot(x0));
  if (const auto* k = std::get_if<LinearBand>(&c)) {
    const double shift = (1.0 - t) * k->a.dot(x0);
    return LinearBand(k->a, t * k->lo + shift, t * k->hi + shift);
  }
  if (const auto* k = std::get_if<QuadIneq>(&c)) {
    // (a.(x - (1-t) x0))^2 <= t^2 b  <=>  |a.x - shift| <= t sqrt(b)
    const double shift = (1.0 - t) * k->a.dot(x0);
    const double half = t * std::sqrt(k->b);
    return LinearBand(k->a, shift - half, shift + half);
  }
  if (const auto* k = std::get_if<MinDistance>(&c)) {
    const Vec x0s = k->restrict(x0);
    return MinDistance((1.0 - t) * x0s + t * k->center, t * k->radius, k->subset);
  }
  const auto& smooth = std::get<SmoothScalar>(c);
  const Vec shift = (1.0 - t) * x0;
  return SmoothScalar::trusted(
      smooth.dim(), [smooth, shift, t](const Vec& x) { return smooth.value((x - shift) / t); },
      [smooth, shift, t](const Vec& x) -> Vec { return smooth.gradient((x - shift) / t) / t; });
}

}  // namespace

Scheduler::Scheduler(double n) : exponent(n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("Scheduler: exponent must be > 0");
}

double phi(const Scheduler& s, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phi: t must lie in [0, 1]");
  return std::pow(t / 2.0, s.exponent);
}

double sigma_of_t(double t) {
  require_time(t, "sigma_of_t");
  return (1.0 - t) / t;
}

Constraint TightenedConstraint::to_constraint() const {
  switch (kind) {
    case TightenedKind::linear:
      return LinearIneq(a, rhs);
    case TightenedKind::quadratic_band:
      return LinearBand(a, -rhs, rhs);
    case TightenedKind::inactive:
      break;
  }
  throw DomainError("TightenedConstraint: inactive constraint has no set form");
}

TightenedConstraint tighten_linear(const LinearIneq& c, double t, double satisfy_prob) {
  require_time(t, "tighten_linear");
  require_prob(satisfy_prob, "tighten_linear");
  return {TightenedKind::linear, c.a, tightened_rhs(c.a, c.b, t, satisfy_prob)};
}

TightenedConstraint tighten_quadratic(const QuadIneq& c, double t, double satisfy_prob) {
  require_time(t, "tighten_quadratic");
  require_prob(satisfy_prob, "tighten_quadratic");
  const double root_b = std::sqrt(c.b);
  const double spread = sigma_of_t(t) * c.a.norm() * normal_quantile(0.5 * (1.0 + satisfy_prob));
  if (root_b < spread) return {TightenedKind::inactive, c.a, 0.0};
  return {TightenedKind::quadratic_band, c.a, t * (root_b - spread)};
}

ConstraintSet tighten_set(const ConstraintSet& cs, double t, const Scheduler& s,
                          EnforcementMode mode, const Vec& x0) {
  ConstraintSet out(cs.dim(), cs.tolerance());
  double prob = phi(s, t);
  if (prob < kMinSatisfyProb) return out;
  prob = std::min(prob, 1.0 - kMinSatisfyProb);

  if (mode == EnforcementMode::pathwise) {
    if (x0.size() != cs.dim()) throw ConfigError("tighten_set: pathwise mode needs the realized x0");
    for (std::size_t i = 0; i < cs.size(); ++i) out.add(compose_with_Mt(cs[i], x0, t), cs.group(i));
    return out;
  }

  for (std::size_t i = 0; i < cs.size(); ++i) {
    const Constraint& c = cs[i];
    if (const auto* k = std::get_if<LinearIneq>(&c)) {
      out.add(tighten_linear(*k, t, prob).to_constraint(), cs.group(i));
    } else if (const auto* k = std::get_if<QuadIneq>(&c)) {
      const TightenedConstraint tc = tighten_quadratic(*k, t, prob);
      if (tc.kind != TightenedKind::inactive) out.add(tc.to_constraint(), cs.group(i));
    } else if (const auto* k = std::get_if<LinearBand>(&c)) {
      const double side_prob = 1.0 - 0.5 * (1.0 - prob);
      const double upper = tightened_rhs(k->a, k->hi, t, side_prob);
      const double lower = -tightened_rhs(k->a, -k->lo, t, side_prob);
      if (lower <= upper) {
        out.add(LinearBand(k->a, lower, upper), cs.group(i));
      } else {
        const double mid = 0.5 * (lower + upper);
        out.add(LinearBand(k->a, mid, mid), cs.group(i));
      }
    } else {
      throw ConfigError("tighten_set: marginal mode does not support '" + kind_name(c) +
                        "' constraints; use pathwise mode");
    }
  }
  return out;
}

}  // namespace ccfm

#include "ccfm/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace ccfm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_nonzero(const Vec& a, const char* what) {
  require_finite(a, what);
  if (a.size() == 0 || a.norm() == 0.0) throw DomainError(std::string(what) + ": ||a|| must be > 0");
}

Eigen::Index constraint_dim(const Constraint& c) {
  return std::visit(overloaded{[](const MinDistance&) { return Eigen::Index(-1); },
                               [](const SmoothScalar& s) { return s.dim(); },
                               [](const auto& lin) { return lin.a.size(); }},
                    c);
}

// g and its gradient for MinDistance:  radius - ||x_S - c||.
double min_distance_value(const MinDistance& m, const Vec& x) {
  double sq = 0.0;
  if (m.subset.empty()) {
    sq = (x - m.center).squaredNorm();
  } else {
    for (std::size_t k = 0; k < m.subset.size(); ++k) {
      const double diff = x[m.subset[k]] - m.center[static_cast<Eigen::Index>(k)];
      sq += diff * diff;
    }
  }
  return m.radius - std::sqrt(sq);
}

Vec min_distance_gradient(const MinDistance& m, const Vec& x) {
  const Vec diff = m.restrict(x) - m.center;
  const double dist = diff.norm();
  if (dist == 0.0) throw SingularGradientError("MinDistance: gradient undefined at the center");
  Vec grad = Vec::Zero(x.size());
  if (m.subset.empty()) return -diff / dist;
  for (std::size_t k = 0; k < m.subset.size(); ++k)
    grad[m.subset[k]] = -diff[static_cast<Eigen::Index>(k)] / dist;
  return grad;
}

}  // namespace

LinearIneq::LinearIneq(Vec a_, double b_) : a(std::move(a_)), b(b_) {
  require_nonzero(a, "LinearIneq");
  if (!std::isfinite(b)) throw DomainError("LinearIneq: b must be finite");
}

LinearBand::LinearBand(Vec a_, double lo_, double hi_) : a(std::move(a_)), lo(lo_), hi(hi_) {
  require_nonzero(a, "LinearBand");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw DomainError("LinearBand: need finite lo <= hi");
}

QuadIneq::QuadIneq(Vec a_, double b_) : a(std::move(a_)), b(b_) {
  require_nonzero(a, "QuadIneq");
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("QuadIneq: b must be > 0");
}

MinDistance::MinDistance(Vec center_, double radius_, std::vector<Eigen::Index> subset_)
    : center(std::move(center_)), radius(radius_), subset(std::move(subset_)) {
  require_finite(center, "MinDistance center");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("MinDistance: radius must be > 0");
  if (!subset.empty() && static_cast<Eigen::Index>(subset.size()) != center.size())
    throw DimensionError("MinDistance: subset and center sizes differ");
}

Vec MinDistance::restrict(const Vec& x) const {
  if (subset.empty()) return x;
  Vec out(static_cast<Eigen::Index>(subset.size()));
  for (std::size_t k = 0; k < subset.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[subset[k]];
  return out;
}

SmoothScalar::SmoothScalar(Eigen::Index dim, Value g, Gradient grad, std::uint64_t probe_seed,
                           int probes)
    : dim_(dim), g_(std::move(g)), grad_(std::move(grad)) {
  if (dim < 1 || !g_ || !grad_) throw DomainError("SmoothScalar: need dim >= 1 and both callables");
  SeededRng rng(probe_seed, 0x5eed);
  constexpr double h = 1e-6;
  for (int p = 0; p < probes; ++p) {
    Vec x = sample_std_normal(rng, dim);
    const Vec analytic = grad_(x);
    if (analytic.size() != dim) throw DimensionError("SmoothScalar: gradient has wrong size");
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double xi = x[i];
      x[i] = xi + h;
      const double up = g_(x);
      x[i] = xi - h;
      const double down = g_(x);
      x[i] = xi;
      const double fd = (up - down) / (2.0 * h);
      if (std::abs(fd - analytic[i]) > 1e-5 * scale)
        throw DomainError("SmoothScalar: gradient disagrees with finite differences at coordinate " +
                          std::to_string(i));
    }
  }
}

SmoothScalar SmoothScalar::trusted(Eigen::Index dim, Value g, Gradient grad) {
  SmoothScalar s;
  s.dim_ = dim;
  s.g_ = std::move(g);
  s.grad_ = std::move(grad);
  return s;
}

int row_count(const Constraint& c) { return std::holds_alternative<LinearBand>(c) ? 2 : 1; }

double constraint_value(const Constraint& c, const Vec& x) {
  return std::visit(overloaded{
                        [&](const LinearIneq& k) { return k.a.dot(x) - k.b; },
                        [&](const LinearBand& k) {
                          const double s = k.a.dot(x);
                          return std::max(s - k.hi, k.lo - s);
                        },
                        [&](const QuadIneq& k) {
                          const double s = k.a.dot(x);
                          return s * s - k.b;
                        },
                        [&](const MinDistance& k) { return min_distance_value(k, x); },
                        [&](const SmoothScalar& k) { return k.value(x); },
                    },
                    c);
}

bool is_linear_kind(const Constraint& c) {
  return std::holds_alternative<LinearIneq>(c) || std::holds_alternative<LinearBand>(c);
}

std::string kind_name(const Constraint& c) {
  static const char* names[] = {"linear", "band", "quadratic", "min_distance", "smooth"};
  return names[c.index()];
}

ConstraintSet::ConstraintSet(Eigen::Index dim, double tolerance) : dim_(dim), tolerance_(tolerance) {
  if (dim < 1) throw DimensionError("ConstraintSet: dim must be >= 1");
  if (!(tolerance > 0.0)) throw DomainError("ConstraintSet: tolerance must be > 0");
}

ConstraintSet& ConstraintSet::add(Constraint c, std::string group) {
  const Eigen::Index cd = constraint_dim(c);
  if (cd >= 0 && cd != dim_) throw DimensionError("ConstraintSet: constraint dimension mismatch");
  if (const auto* m = std::get_if<MinDistance>(&c)) {
    if (m->subset.empty() && m->center.size() != dim_)
      throw DimensionError("ConstraintSet: MinDistance center dimension mismatch");
    for (auto idx : m->subset)
      if (idx < 0 || idx >= dim_) throw DimensionError("ConstraintSet: MinDistance subset out of range");
  }
  const std::size_t item = items_.size();
  for (int side = 0; side < row_count(c); ++side) row_map_.push_back({item, side});
  items_.push_back({std::move(c), std::move(group)});
  return *this;
}

double ConstraintSet::row_value(Eigen::Index row, const Vec& x) const {
  const RowRef ref = row_map_[static_cast<std::size_t>(row)];
  const Constraint& c = items_[ref.item].c;
  if (const auto* band = std::get_if<LinearBand>(&c)) {
    const double s = band->a.dot(x);
    return ref.side == 0 ? s - band->hi : band->lo - s;
  }
  return constraint_value(c, x);
}

Vec ConstraintSet::row_gradient(Eigen::Index row, const Vec& x) const {
  const RowRef ref = row_map_[static_cast<std::size_t>(row)];
  return std::visit(overloaded{
                        [&](const LinearIneq& k) -> Vec { return k.a; },
                        [&](const LinearBand& k) -> Vec { return ref.side == 0 ? k.a : Vec(-k.a); },
                        [&](const QuadIneq& k) -> Vec { return 2.0 * k.a.dot(x) * k.a; },
                        [&](const MinDistance& k) -> Vec { return min_distance_gradient(k, x); },
                        [&](const SmoothScalar& k) -> Vec { return k.gradient(x); },
                    },
                    items_[ref.item].c);
}

bool ConstraintSet::all_linear() const {
  return std::all_of(items_.begin(), items_.end(), [](const Item& it) { return is_linear_kind(it.c); });
}

Vec constraint_values(const ConstraintSet& cs, const Vec& x) {
  if (x.size() != cs.dim()) throw DimensionError("constraint_values: dimension mismatch");
  require_finite(x, "constraint evaluation point");
  Vec g(cs.rows());
  for (Eigen::Index i = 0; i < cs.rows(); ++i) g[i] = cs.row_value(i, x);
  return g;
}

Vec residuals(const ConstraintSet& cs, const Vec& x) {
  return constraint_values(cs, x).cwiseMax(0.0);
}

std::vector<Eigen::Index> active_set(const ConstraintSet& cs, const Vec& x) {
  const Vec g = constraint_values(cs, x);
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g[i] > 0.0) out.push_back(i);
  return out;
}

Mat jacobian_active(const ConstraintSet& cs, const Vec& x, const std::vector<Eigen::Index>& active) {
  if (active.empty()) throw DomainError("jacobian_active: empty active set");
  Mat J(static_cast<Eigen::Index>(active.size()), cs.dim());
  for (std::size_t k = 0; k < active.size(); ++k)
    J.row(static_cast<Eigen::Index>(k)) = cs.row_gradient(active[k], x).transpose();
  return J;
}

double max_violation(const ConstraintSet& cs, const Vec& x) {
  if (x.size() != cs.dim()) throw DimensionError("max_violation: dimension mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < cs.size(); ++i) worst = std::max(worst, constraint_value(cs[i], x));
  return worst;
}

double max_violation(const ConstraintSet& cs, const Vec& x, const std::string& group) {
  if (x.size() != cs.dim()) throw DimensionError("max_violation: dimension mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs.group(i) == group) worst = std::max(worst, constraint_value(cs[i], x));
  return worst;
}

}  // namespace ccfm

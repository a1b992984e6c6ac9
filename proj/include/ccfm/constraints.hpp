#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "ccfm/num_core.hpp"

namespace ccfm {

/// a . x <= b
struct LinearIneq {
  Vec a;
  double b = 0.0;
  LinearIneq(Vec a, double b);
};

/// lo <= a . x <= hi. Contributes two scalar rows: a.x - hi and lo - a.x.
struct LinearBand {
  Vec a;
  double lo = 0.0;
  double hi = 0.0;
  LinearBand(Vec a, double lo, double hi);
};

/// (a . x)^2 <= b with b > 0.
struct QuadIneq {
  Vec a;
  double b = 0.0;
  QuadIneq(Vec a, double b);
};

/// || x|_S - center || >= radius, where S is `subset` (all coordinates when
/// empty). Nonconvex; the gradient is undefined at the center.
struct MinDistance {
  Vec center;
  double radius = 0.0;
  std::vector<Eigen::Index> subset;
  MinDistance(Vec center, double radius, std::vector<Eigen::Index> subset = {});

  Vec restrict(const Vec& x) const;
};

/// User-supplied smooth g(x) <= 0 with its analytic gradient.
///
/// The constructor checks the gradient against central differences at a few
/// seeded probe points and throws DomainError on mismatch.
class SmoothScalar {
 public:
  using Value = std::function<double(const Vec&)>;
  using Gradient = std::function<Vec(const Vec&)>;

  SmoothScalar(Eigen::Index dim, Value g, Gradient grad, std::uint64_t probe_seed = 0,
               int probes = 2);

  /// Skips the gradient check; for compositions of already-checked functions.
  static SmoothScalar trusted(Eigen::Index dim, Value g, Gradient grad);

  Eigen::Index dim() const { return dim_; }
  double value(const Vec& x) const { return g_(x); }
  Vec gradient(const Vec& x) const { return grad_(x); }

 private:
  SmoothScalar() = default;
  Eigen::Index dim_ = 0;
  Value g_;
  Gradient grad_;
};

struct SingularGradientError : NumericalError {
  using NumericalError::NumericalError;
};

using Constraint = std::variant<LinearIneq, LinearBand, QuadIneq, MinDistance, SmoothScalar>;

/// Number of scalar rows a constraint contributes (2 for LinearBand, else 1).
int row_count(const Constraint& c);
/// max over the constraint's rows of g_row(x); <= 0 iff satisfied.
double constraint_value(const Constraint& c, const Vec& x);
/// True for kinds with a closed-form Euclidean projection (LinearIneq, LinearBand).
bool is_linear_kind(const Constraint& c);
std::string kind_name(const Constraint& c);

/// Clean-sample feasible set C = {x : g_i(x) <= 0 for all rows i}.
///
/// Constraints are kept in declaration order; each may carry a group label
/// (e.g. "ic", "cl") used for per-group violation metrics.
class ConstraintSet {
 public:
  static constexpr double kDefaultTolerance = 1e-8;

  explicit ConstraintSet(Eigen::Index dim, double tolerance = kDefaultTolerance);

  ConstraintSet& add(Constraint c, std::string group = {});

  Eigen::Index dim() const { return dim_; }
  double tolerance() const { return tolerance_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(row_map_.size()); }

  const Constraint& operator[](std::size_t i) const { return items_[i].c; }
  const std::string& group(std::size_t i) const { return items_[i].group; }

  /// Constraint index that owns a row.
  std::size_t owner(Eigen::Index row) const { return row_map_[static_cast<std::size_t>(row)].item; }

  double row_value(Eigen::Index row, const Vec& x) const;
  Vec row_gradient(Eigen::Index row, const Vec& x) const;

  bool all_linear() const;

 private:
  struct Item {
    Constraint c;
    std::string group;
  };
  struct RowRef {
    std::size_t item;
    int side;  // LinearBand: 0 upper, 1 lower
  };
  Eigen::Index dim_;
  double tolerance_;
  std::vector<Item> items_;
  std::vector<RowRef> row_map_;
};

/// Raw row values g_i(x).
Vec constraint_values(const ConstraintSet& cs, const Vec& x);
/// Hinge residuals max(0, g_i(x)) per row.
Vec residuals(const ConstraintSet& cs, const Vec& x);
/// Rows with g_i(x) > 0, ascending.
std::vector<Eigen::Index> active_set(const ConstraintSet& cs, const Vec& x);
/// One gradient per active row (|active| x d).
Mat jacobian_active(const ConstraintSet& cs, const Vec& x, const std::vector<Eigen::Index>& active);
double max_violation(const ConstraintSet& cs, const Vec& x);
/// Maximum hinge residual over constraints whose group label equals `group`.
double max_violation(const ConstraintSet& cs, const Vec& x, const std::string& group);

}  // namespace ccfm

#pragma once

#include <string>

#include "ccfm/num_core.hpp"

namespace ccfm {

// ---------------------------------------------------------------------------
// Path algebra for the linear (optimal-transport displacement) path
//     x_t = (1 - t) x0 + t x1.
// These accept any Eigen expression and return an evaluated vector.
// ---------------------------------------------------------------------------

template <typename D0, typename D1>
VectorX<typename D0::Scalar> interpolate(const Eigen::MatrixBase<D0>& x0,
                                         const Eigen::MatrixBase<D1>& x1,
                                         typename D0::Scalar t) {
  using Scalar = typename D0::Scalar;
  require_same_size(x0, x1, "interpolate");
  if (!(t >= Scalar(0) && t <= Scalar(1))) throw DomainError("interpolate: t must lie in [0, 1]");
  return (Scalar(1) - t) * x0 + t * x1;
}

/// The affine map M_t(x) = (x - (1 - t) x0) / t sending a time-t state on the
/// path through x0 to its clean endpoint.
template <typename D0, typename D1>
VectorX<typename D0::Scalar> affine_map_Mt(const Eigen::MatrixBase<D0>& x,
                                           const Eigen::MatrixBase<D1>& x0,
                                           typename D0::Scalar t) {
  using Scalar = typename D0::Scalar;
  require_same_size(x, x0, "affine_map_Mt");
  if (!(t > Scalar(0) && t <= Scalar(1)))
    throw DomainError("affine_map_Mt: t must lie in (0, 1]");
  return (x - (Scalar(1) - t) * x0) / t;
}

/// Closed-form clean endpoint x1 = x_t / t - (1 - t) x0 / t.
template <typename D0, typename D1>
VectorX<typename D0::Scalar> recover_x1(const Eigen::MatrixBase<D0>& x_t,
                                        const Eigen::MatrixBase<D1>& x0,
                                        typename D0::Scalar t) {
  return affine_map_Mt(x_t, x0, t);
}

// ---------------------------------------------------------------------------
// Targets and exact marginal velocities
// ---------------------------------------------------------------------------

enum class TargetKind { empirical, gaussian_mixture };

/// Target distribution q. Points are stored column-wise (d x m).
///
/// For a Gaussian mixture, component j is Normal(mean_j, scale_j^2 I): the
/// scale is an isotropic standard deviation.
struct Target {
  TargetKind kind = TargetKind::empirical;
  Mat points;  ///< atoms or component means, one per column
  Vec scales;  ///< mixture only
  Vec weights;

  /// `atoms` holds one sample per row. Empty weights mean uniform.
  static Target empirical(const Mat& atoms, Vec weights = {});
  /// `means` holds one component mean per row.
  static Target gaussian_mixture(const Mat& means, const Vec& scales, const Vec& weights);

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }
};

/// Standard-normal source pushed to `target` along the linear path.
class FlowModel {
 public:
  explicit FlowModel(Target target);

  const Target& target() const { return target_; }
  Eigen::Index dim() const { return target_.dim(); }

  /// Draw one point from the target distribution.
  Vec sample_target(SeededRng& rng) const;

 private:
  Target target_;
};

/// Posterior over atoms/components given x_t = x, and the induced posterior
/// mean of the clean sample.
struct Posterior {
  Vec weights;
  Vec mean_x1;
};

/// Largest time at which velocities are evaluated; later queries are clamped.
inline constexpr double kVelocityTimeCap = 1.0 - 1e-9;

Posterior posterior(const FlowModel& model, const Vec& x, double t);

/// Marginal velocity u_t(x) = E[x1 - x0 | x_t = x] of the linear path.
/// Defined for 0 <= t < 1; t = 1 throws DomainError.
Vec exact_velocity(const FlowModel& model, const Vec& x, double t);

}  // namespace ccfm

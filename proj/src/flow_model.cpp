#include "ccfm/flow_model.hpp"

#include <cmath>

namespace ccfm {

namespace {

Vec checked_weights(Vec weights, Eigen::Index m) {
  if (weights.size() == 0) return Vec::Constant(m, 1.0 / static_cast<double>(m));
  if (weights.size() != m) throw DimensionError("target: one weight per point required");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw DomainError("target: weights must be finite and nonnegative");
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("target: weights must sum to 1");
  return weights / total;
}

// Normalized softmax of log-weights.
Vec softmax(const Vec& logits) {
  const double top = logits.maxCoeff();
  Vec w = (logits.array() - top).exp().matrix();
  return w / w.sum();
}

double clamp_time(double t) {
  if (!(t >= 0.0 && t < 1.0)) throw DomainError("velocity: t must lie in [0, 1)");
  return std::min(t, kVelocityTimeCap);
}

}  // namespace

Target Target::empirical(const Mat& atoms, Vec weights) {
  if (atoms.rows() < 1 || atoms.cols() < 1) throw DimensionError("empirical target: no atoms");
  require_finite(atoms, "empirical target");
  Target out;
  out.kind = TargetKind::empirical;
  out.points = atoms.transpose();
  out.weights = checked_weights(std::move(weights), atoms.rows());
  return out;
}

Target Target::gaussian_mixture(const Mat& means, const Vec& scales, const Vec& weights) {
  if (means.rows() < 1 || means.cols() < 1) throw DimensionError("mixture target: no components");
  if (scales.size() != means.rows()) throw DimensionError("mixture target: one scale per component");
  if ((scales.array() <= 0.0).any()) throw DomainError("mixture target: scales must be > 0");
  require_finite(means, "mixture target");
  Target out;
  out.kind = TargetKind::gaussian_mixture;
  out.points = means.transpose();
  out.scales = scales;
  out.weights = checked_weights(weights, means.rows());
  return out;
}

FlowModel::FlowModel(Target target) : target_(std::move(target)) {}

Vec FlowModel::sample_target(SeededRng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  Eigen::Index pick = target_.size() - 1;
  for (Eigen::Index j = 0; j < target_.size(); ++j) {
    acc += target_.weights[j];
    if (u < acc) {
      pick = j;
      break;
    }
  }
  Vec x = target_.points.col(pick);
  if (target_.kind == TargetKind::gaussian_mixture)
    x += target_.scales[pick] * sample_std_normal(rng, dim());
  return x;
}

Posterior posterior(const FlowModel& model, const Vec& x, double t) {
  const Target& q = model.target();
  if (x.size() != q.dim()) throw DimensionError("posterior: dimension mismatch");
  require_finite(x, "velocity query");
  t = clamp_time(t);
  const Eigen::Index m = q.size();
  const double d = static_cast<double>(q.dim());

  Vec logits(m);
  Posterior post;
  if (q.kind == TargetKind::empirical) {
    // x_t | x1 = a_i  ~  Normal(t a_i, (1 - t)^2 I)
    const double var = (1.0 - t) * (1.0 - t);
    for (Eigen::Index i = 0; i < m; ++i)
      logits[i] = std::log(q.weights[i]) - (x - t * q.points.col(i)).squaredNorm() / (2.0 * var);
    post.weights = softmax(logits);
    post.mean_x1 = q.points * post.weights;
  } else {
    // x_t | component j  ~  Normal(t mu_j, (t^2 s_j^2 + (1 - t)^2) I)
    post.mean_x1 = Vec::Zero(q.dim());
    Vec v(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s2 = q.scales[j] * q.scales[j];
      v[j] = t * t * s2 + (1.0 - t) * (1.0 - t);
      logits[j] = std::log(q.weights[j]) - 0.5 * d * std::log(v[j]) -
                  (x - t * q.points.col(j)).squaredNorm() / (2.0 * v[j]);
    }
    post.weights = softmax(logits);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double s2 = q.scales[j] * q.scales[j];
      post.mean_x1 +=
          post.weights[j] * (q.points.col(j) + (t * s2 / v[j]) * (x - t * q.points.col(j)));
    }
  }
  return post;
}

Vec exact_velocity(const FlowModel& model, const Vec& x, double t) {
  if (t == 1.0) throw DomainError("exact_velocity: undefined at t = 1");
  const Target& q = model.target();
  if (q.kind == TargetKind::empirical) {
    const double tc = clamp_time(t);
    const Posterior post = posterior(model, x, tc);
    return (post.mean_x1 - x) / (1.0 - tc);
  }
  // Per-component velocity written without the (x1_hat - x) / (1 - t)
  // cancellation:  u_j = ((1 - t) mu_j + (t s_j^2 - (1 - t)) x) / v_j.
  const double tc = clamp_time(t);
  const Posterior post = posterior(model, x, tc);
  Vec u = Vec::Zero(x.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    const double s2 = q.scales[j] * q.scales[j];
    const double v = tc * tc * s2 + (1.0 - tc) * (1.0 - tc);
    u += post.weights[j] * (((1.0 - tc) * q.points.col(j) + (tc * s2 - (1.0 - tc)) * x) / v);
  }
  return u;
}

}  // namespace ccfm

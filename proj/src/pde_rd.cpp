#include "ccfm/pde_rd.hpp"

#include <cmath>
#include <numbers>

namespace ccfm {

RdGrid::RdGrid(int n_s_, int n_t_, double t_final, double length_)
    : n_s(n_s_), n_t(n_t_), length(length_), dt(n_t_ > 1 ? t_final / (n_t_ - 1) : 0.0) {
  validate();
}

void RdGrid::validate() const {
  if (n_s < 4) throw ConfigError("RdGrid: n_s must be >= 4");
  if (n_t < 2) throw ConfigError("RdGrid: n_t must be >= 2");
  if (!(length > 0.0) || !(dt > 0.0)) throw ConfigError("RdGrid: length and dt must be > 0");
}

Vec RdGrid::quadrature() const {
  Vec w = Vec::Constant(n_s, h());
  w[0] *= 0.5;
  w[n_s - 1] *= 0.5;
  return w;
}

void RdProblem::validate() const {
  grid.validate();
  if (!(nu > 0.0)) throw ConfigError("RdProblem: nu must be > 0");
  if (!(rho > 0.0)) throw ConfigError("RdProblem: rho must be > 0");
  if (!(delta > 0.0)) throw ConfigError("RdProblem: delta must be > 0");
  if (ic.size() != grid.n_s) throw DimensionError("RdProblem: ic must have n_s entries");
  require_finite(ic, "RdProblem ic");
}

Mat simulate_rd(const RdProblem& p) {
  // rho = 0 is allowed here (pure heat equation) even though RdProblem
  // forbids it for constraint assembly.
  p.grid.validate();
  if (!(p.nu > 0.0) || p.rho < 0.0) throw ConfigError("simulate_rd: need nu > 0, rho >= 0");
  if (p.ic.size() != p.grid.n_s) throw DimensionError("simulate_rd: ic must have n_s entries");

  const int n = p.grid.n_s;
  const double h = p.grid.h();
  const double dt = p.grid.dt;
  const double r = dt * p.nu / (h * h);

  // I - dt nu L with the ghost-node Laplacian; tridiagonal (sub, diag, sup).
  Vec sub = Vec::Constant(n, -r), diag = Vec::Constant(n, 1.0 + 2.0 * r), sup = Vec::Constant(n, -r);
  sup[0] = -2.0 * r;
  sub[n - 1] = -2.0 * r;

  Vec source = Vec::Zero(n);
  source[0] = 2.0 * p.g_left / h;
  source[n - 1] = -2.0 * p.g_right / h;

  // Thomas forward sweep is the same every step.
  Vec c_prime(n), denom(n);
  denom[0] = diag[0];
  c_prime[0] = sup[0] / denom[0];
  for (int i = 1; i < n; ++i) {
    denom[i] = diag[i] - sub[i] * c_prime[i - 1];
    c_prime[i] = i + 1 < n ? sup[i] / denom[i] : 0.0;
  }

  Mat field(p.grid.n_t, n);
  field.row(0) = p.ic.transpose();
  Vec v = p.ic;
  Vec rhs(n);
  for (int k = 1; k < p.grid.n_t; ++k) {
    rhs = v.array() + dt * p.rho * v.array() * (1.0 - v.array()) + dt * source.array();
    rhs[0] /= denom[0];
    for (int i = 1; i < n; ++i) rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom[i];
    for (int i = n - 2; i >= 0; --i) rhs[i] -= c_prime[i] * rhs[i + 1];
    v = rhs;
    if (!v.allFinite()) throw NumericalError("simulate_rd: non-finite state at frame " + std::to_string(k));
    field.row(k) = v.transpose();
  }
  return field;
}

Vec flatten(const Mat& field) {
  Vec x(field.size());
  for (Eigen::Index k = 0; k < field.rows(); ++k)
    x.segment(k * field.cols(), field.cols()) = field.row(k).transpose();
  return x;
}

Mat unflatten(const Vec& x, const RdGrid& grid) {
  if (x.size() != grid.dim()) throw DimensionError("unflatten: size does not match grid");
  Mat field(grid.n_t, grid.n_s);
  for (int k = 0; k < grid.n_t; ++k) field.row(k) = x.segment(k * grid.n_s, grid.n_s).transpose();
  return field;
}

Vec random_ic(const RdGrid& grid, SeededRng& rng) {
  auto unif = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  double amp[3], phase[3];
  for (int m = 0; m < 3; ++m) {
    amp[m] = unif(-0.15, 0.15);
    phase[m] = unif(0.0, 2.0 * std::numbers::pi);
  }
  const double bump_amp = unif(-0.2, 0.2);
  const double bump_center = unif(0.2, 0.8);
  const double bump_width = unif(0.03, 0.1);

  Vec ic(grid.n_s);
  for (int i = 0; i < grid.n_s; ++i) {
    const double s = i * grid.h() / grid.length;
    double v = 0.5;
    for (int m = 0; m < 3; ++m) v += amp[m] * std::sin((m + 1) * std::numbers::pi * s + phase[m]);
    const double z = (s - bump_center) / bump_width;
    ic[i] = v + bump_amp * std::exp(-0.5 * z * z);
  }
  return ic;
}

std::pair<double, double> random_fluxes(SeededRng& rng) {
  const double left = -0.005 + 0.01 * rng.uniform();
  const double right = -0.005 + 0.01 * rng.uniform();
  return {left, right};
}

namespace {

struct MassLaw {
  int n_s;
  double dt;
  double rho;
  double flux;  // g_left - g_right
  Vec w;

  double frame_mass(const Vec& x, int k) const { return w.dot(x.segment(k * n_s, n_s)); }

  double reaction(const Vec& x, int j) const {
    const auto v = x.segment(j * n_s, n_s).array();
    return dt * rho * (w.array() * v * (1.0 - v)).sum();
  }

  double defect(const Vec& x, int k) const {
    double c = frame_mass(x, k) - frame_mass(x, 0) - k * dt * flux;
    for (int j = 0; j < k; ++j) c -= reaction(x, j);
    return c;
  }

  Vec defect_gradient(const Vec& x, int k) const {
    Vec g = Vec::Zero(x.size());
    g.segment(k * n_s, n_s) += w;
    g.segment(0, n_s) -= w;
    for (int j = 0; j < k; ++j) {
      const auto v = x.segment(j * n_s, n_s).array();
      g.segment(j * n_s, n_s).array() -= dt * rho * w.array() * (1.0 - 2.0 * v);
    }
    return g;
  }
};

MassLaw mass_law(const RdProblem& p) {
  return {p.grid.n_s, p.grid.dt, p.rho, p.g_left - p.g_right, p.grid.quadrature()};
}

}  // namespace

double mass_defect(const RdProblem& p, const Vec& x, int k) {
  if (x.size() != p.grid.dim()) throw DimensionError("mass_defect: size does not match grid");
  if (k < 0 || k >= p.grid.n_t) throw DomainError("mass_defect: frame out of range");
  return mass_law(p).defect(x, k);
}

ConstraintSet rd_constraints(const RdProblem& p, double tolerance) {
  p.validate();
  const Eigen::Index d = p.grid.dim();
  ConstraintSet cs(d, tolerance);
  for (int i = 0; i < p.grid.n_s; ++i) {
    Vec a = Vec::Zero(d);
    a[i] = 1.0;
    cs.add(LinearBand(std::move(a), p.ic[i] - p.delta, p.ic[i] + p.delta), "ic");
  }
  const MassLaw law = mass_law(p);
  const double delta = p.delta;
  for (int k = 1; k < p.grid.n_t; ++k) {
    for (double sign : {1.0, -1.0}) {
      cs.add(SmoothScalar::trusted(
                 d, [law, k, sign, delta](const Vec& x) { return sign * law.defect(x, k) - delta; },
                 [law, k, sign](const Vec& x) -> Vec { return sign * law.defect_gradient(x, k); }),
             "cl");
    }
  }
  return cs;
}

namespace {

template <class SetFor>
RdMetrics metrics_impl(const std::vector<Vec>& generated, const std::vector<Vec>& reference,
                       SetFor&& set_for) {
  if (generated.size() < 2 || reference.size() < 2)
    throw DomainError("rd_metrics: need at least two generated and two reference fields");
  const Eigen::Index d = generated.front().size();
  auto moments = [d](const std::vector<Vec>& batch) {
    Vec mean = Vec::Zero(d);
    for (const Vec& x : batch) {
      if (x.size() != d) throw DimensionError("rd_metrics: field size mismatch");
      mean += x;
    }
    mean /= static_cast<double>(batch.size());
    Vec var = Vec::Zero(d);
    for (const Vec& x : batch) var.array() += (x - mean).array().square();
    var /= static_cast<double>(batch.size() - 1);
    return std::pair{mean, Vec(var.array().sqrt())};
  };
  const auto [mean_g, std_g] = moments(generated);
  const auto [mean_r, std_r] = moments(reference);

  RdMetrics m;
  m.mmse = (mean_g - mean_r).squaredNorm() / static_cast<double>(d);
  m.smse = (std_g - std_r).squaredNorm() / static_cast<double>(d);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const ConstraintSet& cs = set_for(i);
    if (cs.dim() != d) throw DimensionError("rd_metrics: constraint set dimension mismatch");
    m.cv_ic = std::max(m.cv_ic, max_violation(cs, generated[i], "ic"));
    m.cv_cl = std::max(m.cv_cl, max_violation(cs, generated[i], "cl"));
  }
  return m;
}

}  // namespace

RdMetrics rd_metrics(const std::vector<Vec>& generated, const std::vector<Vec>& reference,
                     const ConstraintSet& cs) {
  return metrics_impl(generated, reference, [&](std::size_t) -> const ConstraintSet& { return cs; });
}

RdMetrics rd_metrics(const std::vector<Vec>& generated, const std::vector<Vec>& reference,
                     const std::vector<ConstraintSet>& sets) {
  if (sets.size() != generated.size()) throw DimensionError("rd_metrics: need one constraint set per field");
  return metrics_impl(generated, reference, [&](std::size_t i) -> const ConstraintSet& { return sets[i]; });
}

}  // namespace ccfm

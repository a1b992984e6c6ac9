#include "ccfm/oracle_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ccfm/experiment.hpp"
#include "ccfm/pde_rd.hpp"
#include "ccfm/verify.hpp"

namespace ccfm {

namespace fs = std::filesystem;

namespace {

constexpr long kMcTrials = 200'000;

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

CriterionResult named(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

double uniform(SeededRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vec orthogonal_part(const Vec& w, const Vec& a) { return w - (a.dot(w) / a.squaredNorm()) * a; }

// ---------------------------------------------------------------------------
// 1. Linear reformulation is exact on its boundary.
CriterionResult soundness() {
  CriterionResult r = named(1, "chance soundness (linear boundary)");
  SeededRng rng(101, 0);
  const double times[] = {0.2, 0.5, 0.8};
  const double probs[] = {0.9, 0.95, 0.99};
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index d = 2 + i % 3;
    const Vec a = sample_std_normal(rng, d);
    const double b = uniform(rng, -1.0, 1.0);
    const double t = times[i % 3];
    const double p = probs[(i / 3) % 3];
    const TightenedConstraint tc = tighten_linear(LinearIneq(a, b), t, p);
    const Vec x_t = (tc.rhs / a.squaredNorm()) * a + orthogonal_part(sample_std_normal(rng, d), a);
    const McEstimate est = mc_chance(LinearIneq(a, b), x_t, t, kMcTrials, rng);
    const double z = std::abs(est.p_hat - p) / est.std_error;
    worst = std::max(worst, z);
    if (z <= 3.0) ++ok;
  }
  r.pass = ok == 50;
  r.detail = std::to_string(ok) + "/50 within 3 stderr, worst |z| = " + fmt(worst);
  return r;
}

// 2. Quadratic band: conservative everywhere, tight at a.x_t = 0 when the band
//    has shrunk to that single level (the critical time).
CriterionResult conservativeness() {
  CriterionResult r = named(2, "chance conservativeness and tightness (quadratic band)");
  SeededRng rng(202, 0);
  const double probs[] = {0.9, 0.95, 0.99};
  int checked = 0, ok = 0, tight_ok = 0;
  double worst_cons = 0.0, worst_tight = 0.0;
  const int instances = 20;
  for (int i = 0; i < instances; ++i) {
    const Eigen::Index d = 2 + i % 3;
    const Vec a = sample_std_normal(rng, d);
    const double b = uniform(rng, 0.25, 4.0);
    const double p = probs[i % 3];
    const QuadIneq q(a, b);
    const double z = normal_quantile(0.5 * (1.0 + p));
    const double sigma_star = std::sqrt(b) / (a.norm() * z);
    const double t_star = 1.0 / (1.0 + sigma_star);

    for (double frac : {0.25, 0.5, 0.75}) {
      const double t = t_star + frac * (1.0 - t_star);
      const TightenedConstraint tc = tighten_quadratic(q, t, p);
      if (tc.kind != TightenedKind::quadratic_band) {
        r.detail = "band unexpectedly inactive above the critical time";
        return r;
      }
      for (double level : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        const Vec x_t = (level * tc.rhs / a.squaredNorm()) * a + orthogonal_part(sample_std_normal(rng, d), a);
        const McEstimate est = mc_chance(q, x_t, t, kMcTrials, rng);
        const double shortfall = (p - est.p_hat) / std::max(est.std_error, 1e-12);
        worst_cons = std::max(worst_cons, shortfall);
        ++checked;
        if (est.p_hat >= p - 3.0 * est.std_error) ++ok;
      }
    }
    const Vec x_t = orthogonal_part(sample_std_normal(rng, d), a);
    const McEstimate est = mc_chance(q, x_t, t_star, kMcTrials, rng);
    const double dev = std::abs(est.p_hat - p) / est.std_error;
    worst_tight = std::max(worst_tight, dev);
    if (dev <= 3.0) ++tight_ok;
  }
  r.pass = ok == checked && tight_ok == instances;
  r.detail = "conservative " + std::to_string(ok) + "/" + std::to_string(checked) + " (worst shortfall " +
             fmt(worst_cons) + " stderr), tight at critical t " + std::to_string(tight_ok) + "/" +
             std::to_string(instances) + " (worst |z| " + fmt(worst_tight) + ")";
  return r;
}

// Every set contains a random anchor point, so the intersection is nonempty.
ConstraintSet random_linear_set(SeededRng& rng, Eigen::Index d, double box = 1.0) {
  ConstraintSet cs(d);
  const int count = 1 + static_cast<int>(rng.next_u64() % 3);
  const Vec anchor = box * sample_std_normal(rng, d);
  for (int k = 0; k < count; ++k) {
    const Vec a = sample_std_normal(rng, d);
    const double c = a.dot(anchor);
    if (rng.uniform() < 0.5) cs.add(LinearIneq(a, c + uniform(rng, 0.0, box)));
    else cs.add(LinearBand(a, c - uniform(rng, 0.1, 1.0), c + uniform(rng, 0.1, 1.0)));
  }
  return cs;
}

// 3. Degeneration at t = 1.
CriterionResult degeneration() {
  CriterionResult r = named(3, "degeneration at t = 1");
  SeededRng rng(303, 0);
  int rhs_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 1 + i % 5;
    const Vec a = sample_std_normal(rng, d);
    const double b = uniform(rng, -2.0, 2.0);
    const double p = uniform(rng, 0.5, 0.999999);
    if (tighten_linear(LinearIneq(a, b), 1.0, p).rhs != b) ++rhs_bad;
    const double bq = std::abs(b) + 0.1;
    const TightenedConstraint tq = tighten_quadratic(QuadIneq(a, bq), 1.0, p);
    if (tq.kind != TightenedKind::quadratic_band || tq.rhs != std::sqrt(bq)) ++rhs_bad;
    ConstraintSet band(d);
    band.add(LinearBand(a, b - 0.5, b + 0.5));
    const ConstraintSet tb = tighten_set(band, 1.0, Scheduler(0.5), EnforcementMode::marginal);
    const auto& lb = std::get<LinearBand>(tb[0]);
    if (lb.lo != b - 0.5 || lb.hi != b + 0.5) ++rhs_bad;
  }

  double worst = 0.0;
  SamplerConfig marginal;
  SamplerConfig pathwise;
  pathwise.mode = EnforcementMode::pathwise;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 2 + i % 4;
    const ConstraintSet cs = random_linear_set(rng, d);
    const Vec x = 3.0 * sample_std_normal(rng, d);
    const Vec x0 = sample_std_normal(rng, d);
    const Vec plain = project_pocs(x, cs).x_out;
    worst = std::max(worst, (ccfm_project(x, cs, 1.0, marginal, x0) - plain).cwiseAbs().maxCoeff());
    worst = std::max(worst, (ccfm_project(x, cs, 1.0, pathwise, x0) - plain).cwiseAbs().maxCoeff());
  }
  r.pass = rhs_bad == 0 && worst <= 1e-12;
  r.detail = std::to_string(rhs_bad) + " rhs mismatches in 3000; max projection difference " + fmt(worst);
  return r;
}

Constraint random_constraint(SeededRng& rng, Eigen::Index d, int kind) {
  switch (kind) {
    case 0:
      return LinearIneq(sample_std_normal(rng, d), uniform(rng, -1, 1));
    case 1:
      return LinearBand(sample_std_normal(rng, d), -uniform(rng, 0, 1), uniform(rng, 0, 1));
    case 2:
      return QuadIneq(sample_std_normal(rng, d), uniform(rng, 0.1, 2));
    case 3:
      return MinDistance(sample_std_normal(rng, d), uniform(rng, 0.2, 1.5));
    default: {
      const Vec w = sample_std_normal(rng, d);
      return SmoothScalar(
          d, [w](const Vec& x) { return std::sin(w.dot(x)) + 0.5 * x.squaredNorm() - 1.0; },
          [w](const Vec& x) -> Vec { return std::cos(w.dot(x)) * w + x; });
    }
  }
}

// 4. g(M_t(x_t)) = g(x1) along linear paths.
CriterionResult propagation() {
  CriterionResult r = named(4, "constraint propagation along linear paths");
  SeededRng rng(404, 0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 2 + i % 4;
    const Constraint c = random_constraint(rng, d, i % 5);
    const Vec x0 = sample_std_normal(rng, d);
    const Vec x1 = 2.0 * sample_std_normal(rng, d);
    const double g1 = constraint_value(c, x1);
    for (int k = 1; k <= 10; ++k) {
      const double t = k / 10.0;
      const Vec x_t = interpolate(x0, x1, t);
      worst = std::max(worst, std::abs(constraint_value(c, affine_map_Mt(x_t, x0, t)) - g1));
    }
  }
  r.pass = worst <= 1e-12;
  r.detail = "max |g(M_t(x_t)) - g(x1)| = " + fmt(worst) + " over 10000 points";
  return r;
}

// Exact projection onto {y : A y <= c} by enumerating active sets. Small only.
Vec enumerate_projection(const Vec& x, const Mat& A, const Vec& c) {
  const Eigen::Index m = A.rows();
  Vec best = x;
  double best_dist = std::numeric_limits<double>::infinity();
  if (((A * x - c).array() <= 0.0).all()) return x;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    Mat As(static_cast<Eigen::Index>(rows.size()), A.cols());
    Vec cs(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      As.row(static_cast<Eigen::Index>(k)) = A.row(rows[k]);
      cs[static_cast<Eigen::Index>(k)] = c[rows[k]];
    }
    const Eigen::FullPivLU<Mat> lu(As * As.transpose());
    if (!lu.isInvertible()) continue;
    const Vec y = x - As.transpose() * lu.solve(As * x - cs);
    if (((A * y - c).array() > 1e-10).any()) continue;
    const double dist = (y - x).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  }
  return best;
}

void to_rows(const ConstraintSet& cs, Mat& A, Vec& c) {
  std::vector<std::pair<Vec, double>> rows;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (const auto* k = std::get_if<LinearIneq>(&cs[i])) {
      rows.emplace_back(k->a, k->b);
    } else {
      const auto& band = std::get<LinearBand>(cs[i]);
      rows.emplace_back(band.a, band.hi);
      rows.emplace_back(-band.a, -band.lo);
    }
  }
  A.resize(static_cast<Eigen::Index>(rows.size()), cs.dim());
  c.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = rows[i].first.transpose();
    c[static_cast<Eigen::Index>(i)] = rows[i].second;
  }
}

// 5. Decomposed projection equals direct projection onto (1 - t) x0 + t C1.
CriterionResult commutation() {
  CriterionResult r = named(5, "decomposed projection commutes");
  SeededRng rng(505, 0);
  GnConfig gn;
  double worst_convex = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 2 + i % 4;
    const ConstraintSet cs = random_linear_set(rng, d);
    const Vec x0 = sample_std_normal(rng, d);
    const double t = uniform(rng, 0.05, 1.0);
    const Vec x = 3.0 * sample_std_normal(rng, d);
    const ConstraintSet shifted = tighten_set(cs, t, Scheduler(0.5), EnforcementMode::pathwise, x0);
    Mat A;
    Vec c;
    to_rows(shifted, A, c);
    const Vec direct = enumerate_projection(x, A, c);
    worst_convex = std::max(worst_convex, (project_decomposed(x, x0, t, cs, gn) - direct).norm());
  }

  BruteForceConfig oracle;
  GnConfig tight;
  tight.max_iters = 100;
  tight.tol = 1e-14;
  double worst_ring = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec center = sample_std_normal(rng, 2);
    const double radius = uniform(rng, 0.3, 0.8);
    ConstraintSet cs(2);
    cs.add(MinDistance(center, radius));
    const Vec x0 = sample_std_normal(rng, 2);
    const double t = uniform(rng, 0.3, 1.0);
    Vec dir = sample_std_normal(rng, 2);
    dir /= dir.norm();
    const Vec inside = center + uniform(rng, 0.3, 0.9) * radius * dir;
    const Vec x = interpolate(x0, inside, t);
    const ConstraintSet shifted = tighten_set(cs, t, Scheduler(0.5), EnforcementMode::pathwise, x0);
    oracle.box_radius = t * radius;
    const Vec brute = brute_force_project(x, shifted, oracle);
    worst_ring = std::max(worst_ring, (project_decomposed(x, x0, t, cs, tight) - brute).norm());
  }
  r.pass = worst_convex <= 1e-9 && worst_ring <= 2.0 * oracle.h;
  r.detail = "convex max error " + fmt(worst_convex) + " (1000 instances); min-distance max error " +
             fmt(worst_ring) + " vs lattice 2h = " + fmt(2.0 * oracle.h) + " (50 instances)";
  return r;
}

std::vector<fs::path> shipped_configs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".cfg") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// 6. Every CCFM sample feasible after refinement on the shipped benchmarks.
CriterionResult feasibility(const SuiteOptions& opts) {
  CriterionResult r = named(6, "CCFM feasibility on shipped benchmarks");
  std::ostringstream detail;
  bool pass = true;
  for (const char* name : {"mixture_halfspace.cfg", "rd_ccfm.cfg"}) {
    ExperimentConfig cfg = load_config(opts.config_dir / name);
    cfg.algorithms = {Algorithm::ccfm};
    RunOptions ro;
    ro.threads = opts.threads;
    const auto started = std::chrono::steady_clock::now();
    const ExperimentResult res = execute(cfg, ro);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto& records = res.runs.front().records;
    std::size_t ok = 0;
    double worst = 0.0;
    for (const SampleRecord& s : records) {
      if (!s.failure.empty()) continue;
      worst = std::max(worst, s.final_violation);
      if (s.final_violation <= 1e-8) ++ok;
    }
    const double per100 = secs * 100.0 / static_cast<double>(records.size());
    pass = pass && ok == records.size() && per100 < 120.0;
    detail << name << ": " << ok << "/" << records.size() << " feasible, max violation " << fmt(worst) << ", "
           << fmt(per100) << " s per 100 samples; ";
  }
  r.pass = pass;
  r.detail = detail.str();
  return r;
}

// 7. CCFM distorts less than repeated projection.
CriterionResult fidelity(const SuiteOptions& opts) {
  CriterionResult r = named(7, "fidelity ordering vs repeated projection");
  ExperimentConfig cfg = load_config(opts.config_dir / "mixture_halfspace.cfg");
  cfg.algorithms = {Algorithm::ccfm, Algorithm::repeated};
  cfg.sampler.samples = 200;
  double w2[2] = {0, 0}, moves[2] = {0, 0};
  for (int s = 0; s < 5; ++s) {
    RunOptions ro;
    ro.threads = opts.threads;
    ro.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const ExperimentResult res = execute(cfg, ro);
    for (int k = 0; k < 2; ++k) {
      w2[k] += res.runs[static_cast<std::size_t>(k)].row.sliced_w2 / 5.0;
      double total = 0.0;
      for (const SampleRecord& rec : res.runs[static_cast<std::size_t>(k)].records)
        for (double m : rec.projection_moves) total += m;
      moves[k] += total / static_cast<double>(res.runs[static_cast<std::size_t>(k)].records.size()) / 5.0;
    }
  }
  r.pass = w2[0] <= w2[1] && moves[0] < moves[1];
  r.detail = "sliced W2 ccfm " + fmt(w2[0], 4) + " vs repeated " + fmt(w2[1], 4) + "; mean move ccfm " +
             fmt(moves[0], 4) + " vs repeated " + fmt(moves[1], 4);
  return r;
}

// 8. Gauss-Newton: closed-form agreement and superlinear local convergence.
CriterionResult gauss_newton() {
  CriterionResult r = named(8, "Gauss-Newton contract");
  SeededRng rng(808, 0);
  GnConfig one;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 1 + i % 5;
    const LinearIneq c(sample_std_normal(rng, d).normalized(), uniform(rng, -1, 1));
    ConstraintSet cs(d);
    cs.add(c);
    const Vec x = 3.0 * sample_std_normal(rng, d);
    worst = std::max(worst, (gauss_newton_project(x, cs, one).x_out - project_linear(x, c)).norm());
  }

  // exp(x0) + x1^2 + x2^2 <= 2, started outside.
  ConstraintSet smooth(3);
  smooth.add(SmoothScalar(
      3, [](const Vec& x) { return std::exp(x[0]) + x[1] * x[1] + x[2] * x[2] - 2.0; },
      [](const Vec& x) -> Vec { return Vec{{std::exp(x[0]), 2.0 * x[1], 2.0 * x[2]}}; }));
  GnConfig many;
  many.lambda = 1e-12;
  many.max_iters = 30;
  many.tol = 1e-15;
  const ProjectionReport rep = gauss_newton_project(Vec{{1.5, 1.0, -1.0}}, smooth, many);
  const auto& h = rep.violation_history;
  int pairs = 0;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] > 0.1 || h[k + 1] <= 1e-13) continue;
    worst_ratio = std::max(worst_ratio, h[k + 1] / (h[k] * h[k]));
    ++pairs;
  }
  r.pass = worst <= 1e-5 && pairs >= 2 && worst_ratio <= 10.0;
  r.detail = "single-step vs closed form " + fmt(worst) + "; " + std::to_string(pairs) +
             " asymptotic steps with max r_{k+1}/r_k^2 = " + fmt(worst_ratio);
  return r;
}

// 9. Simulator satisfies its own constraints; heat mode decays at the right rate.
CriterionResult rd_consistency() {
  CriterionResult r = named(9, "reaction-diffusion self-consistency");
  SeededRng rng(909, 0);
  RdProblem p;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    p.ic = random_ic(p.grid, rng);
    std::tie(p.g_left, p.g_right) = random_fluxes(rng);
    worst = std::max(worst, max_violation(rd_constraints(p), flatten(simulate_rd(p))));
  }

  RdProblem heat;
  heat.rho = 0.0;
  const int n = heat.grid.n_s;
  const double k = 2.0 * M_PI;
  Vec mode(n);
  for (int i = 0; i < n; ++i) mode[i] = std::cos(k * i * heat.grid.h());
  heat.ic = Vec::Constant(n, 0.5) + 0.1 * mode;
  const Mat field = simulate_rd(heat);
  const Vec w = heat.grid.quadrature();
  const double norm = w.dot(mode.cwiseProduct(mode));
  double worst_rel = 0.0;
  for (int f = 1; f < heat.grid.n_t; ++f) {
    const Vec v = field.row(f).transpose();
    const double amp = w.dot(mode.cwiseProduct(v)) / norm / 0.1;
    const double exact = std::exp(-heat.nu * k * k * f * heat.grid.dt);
    worst_rel = std::max(worst_rel, std::abs(amp / exact - 1.0));
  }
  r.pass = worst <= 1e-8 && worst_rel <= 0.05;
  r.detail = "max simulator violation " + fmt(worst) + " (20 fields); heat-mode max relative error " + fmt(worst_rel);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Byte-identical reruns across thread counts.
CriterionResult determinism(const SuiteOptions& opts) {
  CriterionResult r = named(10, "determinism across reruns and thread counts");
  const auto configs = shipped_configs(opts.config_dir);
  if (configs.empty()) {
    r.detail = "no shipped configs found in " + opts.config_dir.string();
    return r;
  }
  bool pass = true;
  std::ostringstream detail;
  for (const fs::path& cfg : configs) {
    const fs::path a = opts.scratch_dir / "det_a" / cfg.stem();
    const fs::path b = opts.scratch_dir / "det_b" / cfg.stem();
    fs::remove_all(a);
    fs::remove_all(b);
    RunOptions ra, rb;
    ra.out_dir = a;
    ra.threads = 1;
    rb.out_dir = b;
    rb.threads = std::max(2, opts.threads);
    const int ea = run_experiment(cfg, ra);
    const int eb = run_experiment(cfg, rb);
    std::size_t files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      if (fs::exists(b / e.path().filename()) && slurp(e.path()) == slurp(b / e.path().filename())) ++same;
    }
    const bool ok = ea == eb && ea != kExitConfig && files > 0 && same == files;
    pass = pass && ok;
    detail << cfg.filename().string() << ": " << same << "/" << files << " files identical (exit " << ea << "); ";
  }
  r.pass = pass;
  r.detail = detail.str();
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(const SuiteOptions& opts) {
  static const std::map<int, double> kTimeLimits = {{1, 30.0}, {2, 30.0}, {7, 60.0}};
  const std::vector<std::function<CriterionResult()>> checks = {
      soundness,
      conservativeness,
      degeneration,
      propagation,
      commutation,
      [&] { return feasibility(opts); },
      [&] { return fidelity(opts); },
      gauss_newton,
      rd_consistency,
      [&] { return determinism(opts); },
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!opts.only.empty() && !opts.only.count(id)) continue;
    const auto started = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = checks[i]();
    } catch (const std::exception& e) {
      res.id = id;
      res.name = "criterion " + std::to_string(id);
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (const auto it = kTimeLimits.find(id); it != kTimeLimits.end() && res.seconds > it->second) {
      res.pass = false;
      res.detail += " exceeded the " + fmt(it->second) + " s budget";
    }
    out.push_back(res);
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  return "CRITERION " + std::to_string(r.id) + ": " + (r.pass ? "PASS " : "FAIL ") + r.name + " [" +
         fmt(r.seconds, 3) + "s] " + r.detail;
}

}  // namespace ccfm

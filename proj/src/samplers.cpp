#include "ccfm/samplers.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace ccfm {

namespace {

using Clock = std::chrono::steady_clock;

double grid_time(int k, int steps) { return static_cast<double>(k) / static_cast<double>(steps); }

// Heun's corrector at t = 1 is skipped for empirical targets: their exact
// velocity is singular there, and the clamped query at 1 - 1e-9 vanishes on an
// atom, which would halve the last step.
Vec advance(const FlowModel& model, Stepper stepper, const Vec& x, double t, double t_next) {
  const double dt = t_next - t;
  const bool singular_end = t_next >= 1.0 && model.target().kind == TargetKind::empirical;
  if (stepper == Stepper::heun && !singular_end) return heun_step(model, x, t, dt);
  return euler_step(model, x, t, dt);
}

// Runs `fn(x)`; at the measure-zero MinDistance center, retries once from a
// point nudged by 1e-8 in a seeded random direction.
template <class Fn>
auto with_singular_retry(const Vec& x, SeededRng& rng, Fn&& fn) {
  try {
    return fn(x);
  } catch (const SingularGradientError&) {
    Vec dir = sample_std_normal(rng, x.size());
    return fn(Vec(x + 1e-8 * dir / dir.norm()));
  }
}

SampleRecord start_record(const FlowModel& model, const SamplerConfig& cfg, std::size_t index,
                          SeededRng& rng) {
  cfg.validate();
  SampleRecord rec;
  rec.index = index;
  rec.x0 = sample_std_normal(rng, model.dim());
  rec.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  rec.states.push_back(rec.x0);
  rec.per_step_violation.reserve(static_cast<std::size_t>(cfg.steps));
  rec.projection_moves.reserve(static_cast<std::size_t>(cfg.steps));
  return rec;
}

void finish_record(SampleRecord& rec, const ConstraintSet* cs, const SamplerConfig& cfg,
                   SeededRng& rng, bool refine, Clock::time_point started) {
  Vec x = rec.states.back();
  if (cs != nullptr && !cs->empty()) {
    if (refine) {
      const ProjectionReport rep = with_singular_retry(x, rng, [&](const Vec& y) {
        return final_refine(y, *cs, cfg.final_budget, cfg.gn.lambda, cfg.refine_tol);
      });
      x = rep.x_out;
      rec.refine_iterations = rep.iterations;
    }
    rec.final_violation = max_violation(*cs, x);
    rec.feasible = rec.final_violation <= cs->tolerance();
  }
  require_finite(x, "final sample");
  rec.states.back() = x;
  rec.x1 = x;
  rec.wall_time = Clock::now() - started;
}

// Shared loop for vanilla / repeated / CCFM: advance, then apply `correct`.
template <class Correct>
SampleRecord integrate(const FlowModel& model, const ConstraintSet* cs, const SamplerConfig& cfg,
                       std::size_t index, bool refine, Correct&& correct) {
  const auto started = Clock::now();
  SeededRng rng(cfg.seed, index);
  SampleRecord rec = start_record(model, cfg, index, rng);
  Vec x = rec.x0;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = grid_time(k, cfg.steps);
    const double t_next = grid_time(k + 1, cfg.steps);
    const Vec proposed = advance(model, cfg.stepper, x, t, t_next);
    require_finite(proposed, "sampler state");
    x = with_singular_retry(proposed, rng, [&](const Vec& y) { return correct(y, t_next, rec.x0); });
    rec.projection_moves.push_back((x - proposed).norm());
    rec.per_step_violation.push_back(cs != nullptr ? max_violation(*cs, x) : 0.0);
    if (cfg.record_proposals) rec.proposals.push_back(proposed);
    rec.states.push_back(x);
  }
  finish_record(rec, cs, cfg, rng, refine, started);
  return rec;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::vanilla:
      return "vanilla";
    case Algorithm::repeated:
      return "repeated";
    case Algorithm::eci:
      return "eci";
    case Algorithm::ccfm:
      return "ccfm";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::vanilla, Algorithm::repeated, Algorithm::eci, Algorithm::ccfm})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown algorithm '" + name + "'");
}

void SamplerConfig::validate() const {
  if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
  if (final_budget < 0) throw ConfigError("sampler: final_budget must be >= 0");
  if (!(refine_tol > 0.0)) throw ConfigError("sampler: refine_tol must be > 0");
  if (samples < 1) throw ConfigError("sampler: samples must be >= 1");
  if (eci_mixing_events < 0) throw ConfigError("sampler: eci_mixing_events must be >= 0");
  if (!(gn.lambda > 0.0) || !(gn.tol > 0.0) || gn.max_iters < 0)
    throw ConfigError("sampler: invalid Gauss-Newton settings");
}

Vec euler_step(const VelocityField& u, const Vec& x, double t, double dt) {
  if (dt == 0.0) return x;
  return x + dt * u(x, t);
}

Vec heun_step(const VelocityField& u, const Vec& x, double t, double dt) {
  if (dt == 0.0) return x;
  const Vec u0 = u(x, t);
  const Vec predicted = x + dt * u0;
  const Vec u1 = u(predicted, std::min(t + dt, kVelocityTimeCap));
  return x + (0.5 * dt) * (u0 + u1);
}

Vec euler_step(const FlowModel& model, const Vec& x, double t, double dt) {
  return euler_step([&](const Vec& y, double s) { return exact_velocity(model, y, s); }, x, t, dt);
}

Vec heun_step(const FlowModel& model, const Vec& x, double t, double dt) {
  return heun_step([&](const Vec& y, double s) { return exact_velocity(model, y, s); }, x, t, dt);
}

Vec ccfm_project(const Vec& x, const ConstraintSet& cs, double t, const SamplerConfig& cfg,
                 const Vec& x0) {
  if (cs.empty()) return x;
  if (cfg.mode == EnforcementMode::marginal) {
    const ConstraintSet tightened = tighten_set(cs, t, cfg.scheduler, EnforcementMode::marginal);
    if (tightened.empty()) return x;
    return project_pocs(x, tightened, cfg.pocs_max_cycles, cfg.pocs_tol).x_out;
  }
  if (phi(cfg.scheduler, t) < kMinSatisfyProb) return x;
  return project_decomposed(x, x0, t, cs, cfg.gn);
}

SampleRecord sample_vanilla(const FlowModel& model, const SamplerConfig& cfg, std::size_t index) {
  return integrate(model, nullptr, cfg, index, false,
                   [](const Vec& y, double, const Vec&) { return y; });
}

SampleRecord sample_repeated(const FlowModel& model, const ConstraintSet& cs,
                             const SamplerConfig& cfg, std::size_t index) {
  return integrate(model, &cs, cfg, index, true, [&](const Vec& y, double, const Vec&) {
    return cs.empty() ? y : project_onto(y, cs, cfg.gn).x_out;
  });
}

SampleRecord sample_ccfm(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                         std::size_t index) {
  if (cfg.mode == EnforcementMode::marginal && !cs.empty())
    (void)tighten_set(cs, 1.0, cfg.scheduler, EnforcementMode::marginal);  // rejects unsupported kinds
  return integrate(model, &cs, cfg, index, true, [&](const Vec& y, double t, const Vec& x0) {
    return ccfm_project(y, cs, t, cfg, x0);
  });
}

SampleRecord sample_eci(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                        std::size_t index) {
  const auto started = Clock::now();
  SeededRng rng(cfg.seed, index);
  SampleRecord rec = start_record(model, cfg, index, rng);
  const int period =
      cfg.eci_mixing_events > 0 ? (cfg.steps + cfg.eci_mixing_events - 1) / cfg.eci_mixing_events : 0;
  Vec noise = rec.x0;
  Vec x = rec.x0;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = grid_time(k, cfg.steps);
    const double t_next = grid_time(k + 1, cfg.steps);
    // Extrapolate to t = 1, correct on the clean set, interpolate back.
    const Vec predicted = x + (1.0 - t) * exact_velocity(model, x, t);
    require_finite(predicted, "eci prediction");
    const Vec corrected =
        cs.empty() ? predicted
                   : with_singular_retry(predicted, rng, [&](const Vec& y) {
                       return project_onto(y, cs, cfg.gn).x_out;
                     });
    if (period > 0 && (k + 1) % period == 0) noise = sample_std_normal(rng, model.dim());
    x = interpolate(noise, corrected, t_next);
    rec.projection_moves.push_back(t_next * (corrected - predicted).norm());
    rec.per_step_violation.push_back(cs.empty() ? 0.0 : max_violation(cs, x));
    if (cfg.record_proposals) rec.proposals.push_back(interpolate(noise, predicted, t_next));
    rec.states.push_back(x);
  }
  finish_record(rec, &cs, cfg, rng, true, started);
  return rec;
}

SampleRecord run_sampler(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                         std::size_t index) {
  switch (cfg.algorithm) {
    case Algorithm::vanilla: {
      SampleRecord rec = sample_vanilla(model, cfg, index);
      if (!cs.empty()) {
        rec.final_violation = max_violation(cs, rec.x1);
        rec.feasible = rec.final_violation <= cs.tolerance();
        for (std::size_t k = 0; k < rec.per_step_violation.size(); ++k)
          rec.per_step_violation[k] = max_violation(cs, rec.states[k + 1]);
      }
      return rec;
    }
    case Algorithm::repeated:
      return sample_repeated(model, cs, cfg, index);
    case Algorithm::eci:
      return sample_eci(model, cs, cfg, index);
    case Algorithm::ccfm:
      return sample_ccfm(model, cs, cfg, index);
  }
  throw ConfigError("run_sampler: unknown algorithm");
}

namespace {

template <class SetFor>
std::vector<SampleRecord> parallel_batch(const FlowModel& model, SetFor&& set_for,
                                         const SamplerConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.samples);
  std::vector<SampleRecord> records(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        records[i] = run_sampler(model, set_for(i), cfg, i);
      } catch (const std::exception& e) {
        records[i] = SampleRecord{};
        records[i].index = i;
        records[i].feasible = false;
        records[i].failure = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return records;
}

}  // namespace

std::vector<SampleRecord> run_batch(const FlowModel& model, const ConstraintSet& cs,
                                    const SamplerConfig& cfg, int threads) {
  return parallel_batch(model, [&](std::size_t) -> const ConstraintSet& { return cs; }, cfg, threads);
}

std::vector<SampleRecord> run_batch(const FlowModel& model, const std::vector<ConstraintSet>& sets,
                                    const SamplerConfig& cfg, int threads) {
  if (sets.size() != static_cast<std::size_t>(cfg.samples))
    throw DimensionError("run_batch: need one constraint set per sample");
  return parallel_batch(model, [&](std::size_t i) -> const ConstraintSet& { return sets[i]; }, cfg,
                        threads);
}

}  // namespace ccfm

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccfm/chance.hpp"
#include "ccfm/flow_model.hpp"
#include "ccfm/projection.hpp"

namespace ccfm {

enum class Algorithm { vanilla, repeated, eci, ccfm };
enum class Stepper { euler, heun };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct SamplerConfig {
  Algorithm algorithm = Algorithm::ccfm;
  Stepper stepper = Stepper::euler;
  int steps = 100;
  Scheduler scheduler{0.5};
  EnforcementMode mode = EnforcementMode::marginal;
  GnConfig gn;
  int final_budget = 30;
  /// Violation at which final refinement stops early. Feasibility is still
  /// judged against the constraint set's tolerance.
  double refine_tol = 1e-12;
  std::uint64_t seed = 0;
  int samples = 1;
  /// ECI noise-resampling events; 0 disables mixing.
  int eci_mixing_events = 2;
  /// Keep pre-projection states (for trajectory figures).
  bool record_proposals = false;
  int pocs_max_cycles = 100000;
  double pocs_tol = 1e-12;

  void validate() const;
};

struct SampleRecord {
  std::size_t index = 0;
  Vec x0;
  std::vector<Vec> states;  ///< N + 1 states; states.front() == x0, states.back() == x1
  Vec x1;
  std::vector<double> per_step_violation;  ///< clean-constraint violation after each step
  std::vector<double> projection_moves;    ///< ||x' - x|| of each step's correction
  std::vector<Vec> proposals;              ///< pre-correction states, when recorded
  int refine_iterations = 0;
  double final_violation = 0.0;
  bool feasible = true;
  std::string failure;
  std::chrono::duration<double> wall_time{0};
};

using VelocityField = std::function<Vec(const Vec&, double)>;

Vec euler_step(const VelocityField& u, const Vec& x, double t, double dt);
/// Predictor-corrector; the corrector time is clamped to kVelocityTimeCap.
Vec heun_step(const VelocityField& u, const Vec& x, double t, double dt);
Vec euler_step(const FlowModel& model, const Vec& x, double t, double dt);
Vec heun_step(const FlowModel& model, const Vec& x, double t, double dt);

/// The CCFM per-step correction of a state at time t (the time of the state
/// being corrected). Returns x unchanged when nothing is active.
Vec ccfm_project(const Vec& x, const ConstraintSet& cs, double t, const SamplerConfig& cfg,
                 const Vec& x0);

SampleRecord sample_vanilla(const FlowModel& model, const SamplerConfig& cfg, std::size_t index = 0);
SampleRecord sample_repeated(const FlowModel& model, const ConstraintSet& cs,
                             const SamplerConfig& cfg, std::size_t index = 0);
SampleRecord sample_eci(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                        std::size_t index = 0);
SampleRecord sample_ccfm(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                         std::size_t index = 0);

/// Dispatch on cfg.algorithm. Vanilla records still carry the final violation
/// against `cs`.
SampleRecord run_sampler(const FlowModel& model, const ConstraintSet& cs, const SamplerConfig& cfg,
                         std::size_t index);

/// cfg.samples independent samples, sample i on stream (cfg.seed, i). Output
/// is ordered by index and does not depend on `threads`. Exceptions inside a
/// sample are caught and reported through SampleRecord::failure.
std::vector<SampleRecord> run_batch(const FlowModel& model, const ConstraintSet& cs,
                                    const SamplerConfig& cfg, int threads = 1);

/// Sample i is conditioned on its own constraint set `sets[i]`
/// (sets.size() == cfg.samples).
std::vector<SampleRecord> run_batch(const FlowModel& model, const std::vector<ConstraintSet>& sets,
                                    const SamplerConfig& cfg, int threads = 1);

}  // namespace ccfm

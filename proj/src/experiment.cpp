#include "ccfm/experiment.hpp"

#include <spdlog/spdlog.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ccfm/figures.hpp"
#include "ccfm/matrix_io.hpp"
#include "ccfm/verify.hpp"

namespace ccfm {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

// Stream ids above every sample index.
constexpr std::uint64_t kReferenceStream = 1ULL << 40;
constexpr std::uint64_t kTrainStream = 1ULL << 41;
constexpr std::uint64_t kTestStream = (1ULL << 41) + 1;
constexpr std::uint64_t kSliceStream = 1ULL << 42;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw ConfigError(where + ": " + msg);
}

double to_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const std::string s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    bad(where, "expected a finite number, got '" + text + "'");
  return v;
}

long long to_int(const std::string& text, const std::string& where) {
  long long v = 0;
  const std::string s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    bad(where, "expected an integer, got '" + text + "'");
  return v;
}

std::uint64_t to_u64(const std::string& text, const std::string& where) {
  std::uint64_t v = 0;
  const std::string s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    bad(where, "expected a non-negative integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& text, const std::string& where) {
  const std::string s = trim(text);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  bad(where, "expected true or false, got '" + text + "'");
}

Vec to_vec(const std::string& text, const std::string& where) {
  const auto items = words(text);
  if (items.empty()) bad(where, "expected a list of numbers");
  Vec v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(items[i], where);
  return v;
}

// Rows separated by ';'.
Mat to_mat(const std::string& text, const std::string& where) {
  const auto rows = split(text, ';');
  std::vector<Vec> parsed;
  for (const auto& r : rows)
    if (!r.empty()) parsed.push_back(to_vec(r, where));
  if (parsed.empty()) bad(where, "expected rows of numbers separated by ';'");
  Mat m(static_cast<Eigen::Index>(parsed.size()), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != m.cols()) bad(where, "rows have different lengths");
    m.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
  }
  return m;
}

int to_positive(const std::string& text, const std::string& where, long long min = 1) {
  const long long v = to_int(text, where);
  if (v < min || v > 100'000'000) bad(where, "must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

double to_positive_real(const std::string& text, const std::string& where) {
  const double v = to_double(text, where);
  if (!(v > 0.0)) bad(where, "must be > 0");
  return v;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment", {"id", "seed"}},
      {"model", {"kind", "means", "scales", "weights", "data"}},
      {"rd", {"n_s", "n_t", "t_final", "nu", "rho", "delta", "train_ics", "train_fluxes"}},
      {"sampler",
       {"algorithms", "stepper", "steps", "scheduler_n", "mode", "gn_lambda", "gn_max_iters", "gn_step_cap",
        "final_budget", "refine_tol", "samples", "eci_mixing_events", "tolerance"}},
      {"metrics", {"reference_size", "reference", "sliced_projections"}},
      {"output", {"csv", "samples", "figures", "figure_trajectories"}},
      {"constraint", {"kind", "a", "b", "lo", "hi", "center", "radius", "subset"}},
  };
  return s;
}

void parse_section(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                   const std::string& value) {
  const std::string where = "[" + section + "] " + key;
  if (section == "experiment") {
    if (key == "id") {
      cfg.id = trim(value);
      if (cfg.id.empty() || cfg.id.find_first_of(",\"/\\ ") != std::string::npos)
        bad(where, "must be non-empty without commas, quotes, slashes or spaces");
    } else {
      cfg.seed = to_u64(value, where);
    }
  } else if (section == "model") {
    if (key == "kind") {
      const std::string k = trim(value);
      if (k == "gaussian_mixture") cfg.model = ModelKind::gaussian_mixture;
      else if (k == "empirical") cfg.model = ModelKind::empirical;
      else if (k == "reaction_diffusion") cfg.model = ModelKind::reaction_diffusion;
      else bad(where, "unknown model kind '" + k + "'");
    } else if (key == "means") {
      cfg.means = to_mat(value, where);
    } else if (key == "scales") {
      cfg.scales = to_vec(value, where);
    } else if (key == "weights") {
      cfg.weights = to_vec(value, where);
    } else {
      cfg.data = trim(value);
    }
  } else if (section == "rd") {
    RdSettings& rd = cfg.rd;
    if (key == "n_s") rd.n_s = to_positive(value, where, 4);
    else if (key == "n_t") rd.n_t = to_positive(value, where, 2);
    else if (key == "t_final") rd.t_final = to_positive_real(value, where);
    else if (key == "nu") rd.nu = to_positive_real(value, where);
    else if (key == "rho") rd.rho = to_positive_real(value, where);
    else if (key == "delta") rd.delta = to_positive_real(value, where);
    else if (key == "train_ics") rd.train_ics = to_positive(value, where);
    else rd.train_fluxes = to_positive(value, where);
  } else if (section == "sampler") {
    SamplerConfig& s = cfg.sampler;
    if (key == "algorithms") {
      cfg.algorithms.clear();
      for (const auto& name : words(value)) {
        try {
          cfg.algorithms.push_back(parse_algorithm(name));
        } catch (const ConfigError& e) {
          bad(where, e.what());
        }
      }
      if (cfg.algorithms.empty()) bad(where, "list at least one algorithm");
    } else if (key == "stepper") {
      const std::string v = trim(value);
      if (v == "euler") s.stepper = Stepper::euler;
      else if (v == "heun") s.stepper = Stepper::heun;
      else bad(where, "expected euler or heun");
    } else if (key == "steps") {
      s.steps = to_positive(value, where);
    } else if (key == "scheduler_n") {
      s.scheduler = Scheduler(to_positive_real(value, where));
    } else if (key == "mode") {
      const std::string v = trim(value);
      if (v == "marginal") s.mode = EnforcementMode::marginal;
      else if (v == "pathwise") s.mode = EnforcementMode::pathwise;
      else bad(where, "expected marginal or pathwise");
    } else if (key == "gn_lambda") {
      s.gn.lambda = to_positive_real(value, where);
    } else if (key == "gn_max_iters") {
      s.gn.max_iters = to_positive(value, where, 0);
    } else if (key == "gn_step_cap") {
      s.gn.step_cap = to_positive_real(value, where);
    } else if (key == "final_budget") {
      s.final_budget = to_positive(value, where, 0);
    } else if (key == "refine_tol") {
      s.refine_tol = to_positive_real(value, where);
    } else if (key == "samples") {
      s.samples = to_positive(value, where);
    } else if (key == "eci_mixing_events") {
      s.eci_mixing_events = to_positive(value, where, 0);
    } else {
      cfg.tolerance = to_positive_real(value, where);
    }
  } else if (section == "metrics") {
    if (key == "reference_size") cfg.reference_size = to_positive(value, where, 2);
    else if (key == "reference") cfg.reference = trim(value);
    else cfg.sliced_projections = to_positive(value, where);
  } else if (section == "output") {
    if (key == "csv") {
      cfg.csv = trim(value);
      if (cfg.csv.empty()) bad(where, "must not be empty");
    } else if (key == "samples") {
      cfg.write_samples = to_bool(value, where);
    } else if (key == "figures") {
      cfg.figures = to_bool(value, where);
    } else {
      cfg.figure_trajectories = to_positive(value, where);
    }
  }
}

ConstraintBlock parse_constraint(const std::string& name, const pt::ptree& sec) {
  ConstraintBlock c;
  c.name = name;
  const std::string prefix = "[constraint:" + name + "] ";
  auto need = [&](const char* key) -> std::string {
    const auto v = sec.get_optional<std::string>(key);
    if (!v) bad(prefix + key, "missing");
    return *v;
  };
  c.kind = trim(need("kind"));
  if (c.kind == "linear") {
    c.a = to_vec(need("a"), prefix + "a");
    c.b = to_double(need("b"), prefix + "b");
  } else if (c.kind == "band") {
    c.a = to_vec(need("a"), prefix + "a");
    c.lo = to_double(need("lo"), prefix + "lo");
    c.hi = to_double(need("hi"), prefix + "hi");
  } else if (c.kind == "quadratic") {
    c.a = to_vec(need("a"), prefix + "a");
    c.b = to_double(need("b"), prefix + "b");
  } else if (c.kind == "min_distance") {
    c.center = to_vec(need("center"), prefix + "center");
    c.radius = to_double(need("radius"), prefix + "radius");
    if (const auto s = sec.get_optional<std::string>("subset"))
      for (const auto& w : words(*s)) c.subset.push_back(static_cast<Eigen::Index>(to_int(w, prefix + "subset")));
  } else {
    bad(prefix + "kind", "unknown constraint kind '" + c.kind + "'");
  }
  return c;
}

fs::path resolve(const ExperimentConfig& cfg, const fs::path& p) {
  if (p.empty() || p.is_absolute() || cfg.source.empty()) return p;
  return cfg.source.parent_path() / p;
}

void check_consistency(ExperimentConfig& cfg) {
  const bool rd = cfg.model == ModelKind::reaction_diffusion;
  if (rd && !cfg.constraints.empty())
    throw ConfigError("[constraint:*] blocks are not allowed for reaction_diffusion; its constraints come from [rd]");
  if (cfg.model == ModelKind::gaussian_mixture) {
    if (cfg.means.size() == 0) throw ConfigError("[model] means: required for gaussian_mixture");
    const Eigen::Index m = cfg.means.rows();
    if (cfg.scales.size() != m) throw ConfigError("[model] scales: need one scale per mean");
    if (cfg.weights.size() == 0) cfg.weights = Vec::Constant(m, 1.0 / static_cast<double>(m));
    if (cfg.weights.size() != m) throw ConfigError("[model] weights: need one weight per mean");
  }
  if (cfg.model == ModelKind::empirical) {
    if (cfg.data.empty()) throw ConfigError("[model] data: required for empirical targets");
    if (!fs::exists(resolve(cfg, cfg.data))) throw ConfigError("[model] data: file not found: " + cfg.data.string());
  }
  if (!cfg.reference.empty() && !fs::exists(resolve(cfg, cfg.reference)))
    throw ConfigError("[metrics] reference: file not found: " + cfg.reference.string());
  if (cfg.sampler.mode == EnforcementMode::marginal)
    for (const auto& c : cfg.constraints)
      if (c.kind == "min_distance")
        throw ConfigError("[constraint:" + c.name + "]: min_distance needs mode = pathwise");
  if (rd && cfg.sampler.mode == EnforcementMode::marginal)
    for (Algorithm a : cfg.algorithms)
      if (a == Algorithm::ccfm) throw ConfigError("[sampler] mode: reaction_diffusion CCFM needs mode = pathwise");
  if (cfg.sampler.samples < 2) throw ConfigError("[sampler] samples: metrics need at least 2 samples");
  cfg.sampler.validate();
}

Constraint build_constraint(const ConstraintBlock& b, Eigen::Index d) {
  const std::string where = "[constraint:" + b.name + "]";
  auto check_dim = [&](const Vec& v, const char* what) {
    if (v.size() != d)
      bad(where, std::string(what) + " has " + std::to_string(v.size()) + " entries, model dimension is " +
                     std::to_string(d));
  };
  try {
    if (b.kind == "linear") {
      check_dim(b.a, "a");
      return LinearIneq(b.a, b.b);
    }
    if (b.kind == "band") {
      check_dim(b.a, "a");
      return LinearBand(b.a, b.lo, b.hi);
    }
    if (b.kind == "quadratic") {
      check_dim(b.a, "a");
      return QuadIneq(b.a, b.b);
    }
    if (b.subset.empty()) check_dim(b.center, "center");
    for (Eigen::Index i : b.subset)
      if (i < 0 || i >= d) bad(where, "subset index out of range");
    return MinDistance(b.center, b.radius, b.subset);
  } catch (const DomainError& e) {
    bad(where, e.what());
  } catch (const DimensionError& e) {
    bad(where, e.what());
  }
}

std::string fmt9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Everything execute() needs besides the config.
struct Setup {
  std::optional<FlowModel> model;
  std::optional<ConstraintSet> cs;     // shared set (mixture / empirical)
  std::vector<ConstraintSet> sets;     // per-sample sets (reaction-diffusion)
  std::vector<Vec> reference;
};

Setup build_mixture_like(const ExperimentConfig& cfg, std::uint64_t seed) {
  Setup s;
  try {
    Target target = cfg.model == ModelKind::gaussian_mixture
                        ? Target::gaussian_mixture(cfg.means, cfg.scales, cfg.weights)
                        : Target::empirical(load_matrix(resolve(cfg, cfg.data)),
                                            cfg.weights.size() ? cfg.weights : Vec());
    s.model.emplace(std::move(target));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[model]: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("[model]: ") + e.what());
  }
  const Eigen::Index d = s.model->dim();
  s.cs.emplace(d, cfg.tolerance);
  for (const auto& b : cfg.constraints) s.cs->add(build_constraint(b, d), b.name);

  if (!cfg.reference.empty()) {
    const Mat ref = load_matrix(resolve(cfg, cfg.reference));
    if (ref.cols() != d) throw ConfigError("[metrics] reference: wrong dimension");
    for (Eigen::Index i = 0; i < ref.rows(); ++i) s.reference.push_back(ref.row(i).transpose());
    return s;
  }
  // Rejection sampling from the feasible-conditioned target.
  SeededRng rng(seed, kReferenceStream);
  const long max_draws = 1000L * cfg.reference_size;
  for (long draw = 0; draw < max_draws && static_cast<int>(s.reference.size()) < cfg.reference_size; ++draw) {
    Vec x = s.model->sample_target(rng);
    if (max_violation(*s.cs, x) <= 0.0) s.reference.push_back(std::move(x));
  }
  if (static_cast<int>(s.reference.size()) < cfg.reference_size)
    throw ConfigError("[constraint:*]: the feasible region holds too little target mass for a reference batch");
  return s;
}

Setup build_rd(const ExperimentConfig& cfg, std::uint64_t seed) {
  Setup s;
  const RdSettings& rd = cfg.rd;
  RdProblem base;
  try {
    base.grid = RdGrid(rd.n_s, rd.n_t, rd.t_final);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[rd]: ") + e.what());
  }
  base.nu = rd.nu;
  base.rho = rd.rho;
  base.delta = rd.delta;

  SeededRng train(seed, kTrainStream);
  std::vector<Vec> ics;
  std::vector<std::pair<double, double>> fluxes;
  for (int i = 0; i < rd.train_ics; ++i) ics.push_back(random_ic(base.grid, train));
  for (int j = 0; j < rd.train_fluxes; ++j) fluxes.push_back(random_fluxes(train));
  Mat atoms(static_cast<Eigen::Index>(ics.size() * fluxes.size()), base.grid.dim());
  Eigen::Index row = 0;
  for (const Vec& ic : ics)
    for (const auto& [gl, gr] : fluxes) {
      RdProblem p = base;
      p.ic = ic;
      p.g_left = gl;
      p.g_right = gr;
      atoms.row(row++) = flatten(simulate_rd(p)).transpose();
    }
  s.model.emplace(Target::empirical(atoms));

  SeededRng test(seed, kTestStream);
  for (int i = 0; i < cfg.sampler.samples; ++i) {
    RdProblem p = base;
    p.ic = random_ic(base.grid, test);
    std::tie(p.g_left, p.g_right) = random_fluxes(test);
    s.sets.push_back(rd_constraints(p, cfg.tolerance));
    s.reference.push_back(flatten(simulate_rd(p)));
  }
  return s;
}

ResultRow summarize(const ExperimentConfig& cfg, std::uint64_t seed, Algorithm alg, const Setup& setup,
                    const std::vector<SampleRecord>& records) {
  ResultRow row;
  row.experiment_id = cfg.id;
  row.algorithm = to_string(alg);
  row.steps = cfg.sampler.steps;
  row.scheduler_n = cfg.sampler.scheduler.exponent;
  row.seed = seed;
  row.mmse = row.smse = row.cv_ic = row.cv_cl = kNaN;

  std::vector<Vec> finals;
  std::vector<ConstraintSet> final_sets;
  std::size_t feasible = 0;
  for (const SampleRecord& r : records) {
    if (!r.failure.empty()) continue;
    const ConstraintSet& cs = setup.cs ? *setup.cs : setup.sets[r.index];
    if (max_violation(cs, r.x1) <= cs.tolerance()) ++feasible;
    finals.push_back(r.x1);
    if (!setup.cs) final_sets.push_back(cs);
  }
  row.feasibility_rate = static_cast<double>(feasible) / static_cast<double>(records.size());
  if (finals.size() >= 2) {
    SeededRng slices(seed, kSliceStream);
    row.sliced_w2 = sliced_w2(finals, setup.reference, cfg.sliced_projections, slices);
    if (!setup.cs) {
      const RdMetrics m = rd_metrics(finals, setup.reference, final_sets);
      row.mmse = m.mmse;
      row.smse = m.smse;
      row.cv_ic = m.cv_ic;
      row.cv_cl = m.cv_cl;
    }
  } else {
    row.sliced_w2 = kNaN;
  }
  return row;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

const char* const kCsvHeader =
    "experiment_id,algorithm,steps,scheduler_n,seed,feasibility_rate,sliced_w2,mmse,smse,cv_ic,cv_cl,wall_time";

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const ResultRow& r : rows) {
    out += r.experiment_id + "," + r.algorithm + "," + std::to_string(r.steps) + "," + fmt9(r.scheduler_n) + "," +
           std::to_string(r.seed) + "," + fmt9(r.feasibility_rate) + "," + fmt9(r.sliced_w2) + "," +
           fmt9(r.mmse) + "," + fmt9(r.smse) + "," + fmt9(r.cv_ic) + "," + fmt9(r.cv_cl) + "," +
           fmt9(r.wall_time) + "\n";
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text, const fs::path& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.source = source;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    const bool is_constraint = section.rfind("constraint:", 0) == 0;
    const std::string kind = is_constraint ? "constraint" : section;
    const auto it = schema().find(kind);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("[" + section + "]: unknown key '" + key + "'");
      if (!is_constraint) parse_section(cfg, section, key, value.data());
    }
    if (is_constraint) {
      const std::string name = section.substr(std::string("constraint:").size());
      if (name.empty()) throw ConfigError("[constraint:] needs a name");
      cfg.constraints.push_back(parse_constraint(name, body));
    }
  }
  check_consistency(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

ExperimentResult execute(const ExperimentConfig& cfg, const RunOptions& opts) {
  const std::uint64_t seed = opts.seed.value_or(cfg.seed);
  spdlog::info("experiment '{}' seed {}", cfg.id, seed);
  const Setup setup =
      cfg.model == ModelKind::reaction_diffusion ? build_rd(cfg, seed) : build_mixture_like(cfg, seed);
  spdlog::debug("model dimension {}, reference batch {}", setup.model->dim(), setup.reference.size());

  ExperimentResult result;
  for (Algorithm alg : cfg.algorithms) {
    SamplerConfig sc = cfg.sampler;
    sc.algorithm = alg;
    sc.seed = seed;
    sc.record_proposals = cfg.figures && setup.model->dim() == 2;
    const auto started = std::chrono::steady_clock::now();
    std::vector<SampleRecord> records = setup.cs ? run_batch(*setup.model, *setup.cs, sc, opts.threads)
                                                 : run_batch(*setup.model, setup.sets, sc, opts.threads);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

    for (const SampleRecord& r : records) {
      const bool bad_sample = !r.failure.empty() || (alg != Algorithm::vanilla && !r.feasible);
      if (!r.failure.empty())
        spdlog::error("{}: sample {} failed: {}", to_string(alg), r.index, r.failure);
      else if (bad_sample)
        spdlog::error("{}: sample {} infeasible after refinement (max violation {:.3g})", to_string(alg), r.index,
                      r.final_violation);
      if (bad_sample) result.numerical_failure = true;
    }
    ResultRow row = summarize(cfg, seed, alg, setup, records);
    row.wall_time = opts.wall_time ? elapsed.count() : 0.0;
    spdlog::info("{}: feasibility {:.4f}, sliced W2 {:.4g}", row.algorithm, row.feasibility_rate, row.sliced_w2);
    result.runs.push_back({alg, std::move(records), row});
  }
  return result;
}

int run_experiment(const fs::path& config_path, const RunOptions& opts) {
  ExperimentConfig cfg;
  ExperimentResult result;
  try {
    cfg = load_config(config_path);
    result = execute(cfg, opts);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  }

  std::vector<ResultRow> rows;
  for (const auto& run : result.runs) rows.push_back(run.row);
  try {
    fs::create_directories(opts.out_dir);
    write_text(opts.out_dir / cfg.csv, format_csv(rows));
    for (const auto& run : result.runs) {
      const std::string stem = cfg.id + "_" + to_string(run.algorithm);
      if (cfg.write_samples) {
        const Eigen::Index d = run.records.front().x0.size() ? run.records.front().x0.size() : 0;
        Mat finals = Mat::Constant(static_cast<Eigen::Index>(run.records.size()), d, kNaN);
        for (std::size_t i = 0; i < run.records.size(); ++i)
          if (run.records[i].failure.empty()) finals.row(static_cast<Eigen::Index>(i)) = run.records[i].x1.transpose();
        save_matrix(opts.out_dir / (stem + "_samples.txt"), finals);
      }
      if (cfg.figures) {
        std::vector<SampleRecord> shown;
        for (const SampleRecord& r : run.records)
          if (r.failure.empty() && static_cast<int>(shown.size()) < cfg.figure_trajectories) shown.push_back(r);
        if (shown.empty()) continue;
        if (shown.front().x0.size() == 2)
          emit_figure(shown, FigureKind::trajectory_2d, opts.out_dir / (stem + "_trajectories.svg"), stem);
        emit_figure(shown, FigureKind::violation_curve, opts.out_dir / (stem + "_violation.svg"), stem);
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("output: {}", e.what());
    return kExitConfig;
  }
  spdlog::info("wrote {}", (opts.out_dir / cfg.csv).string());
  return result.numerical_failure ? kExitNumerical : kExitOk;
}

}  // namespace ccfm

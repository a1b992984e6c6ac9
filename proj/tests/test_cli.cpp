#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "ccfm/experiment.hpp"
#include "ccfm/figures.hpp"

using namespace ccfm;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = fs::path(CCFM_TEST_DIR) / "golden";

// Small 2-D run used for the golden CSV.
const char* const kPinned = R"([experiment]
id = pinned
seed = 5

[model]
kind = gaussian_mixture
means = -1 0; 1 0.5
scales = 0.4 0.3

[constraint:wall]
kind = linear
a = 1 1
b = 0.5

[constraint:strip]
kind = band
a = 0 1
lo = -1
hi = 0.8

[sampler]
algorithms = ccfm repeated eci vanilla
steps = 20
samples = 16

[metrics]
reference_size = 200
sliced_projections = 16

[output]
csv = pinned.csv
figure_trajectories = 4
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ccfm_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("golden CSV for the pinned config") {
  const fs::path dir = scratch("golden");
  const fs::path cfg = write_file(dir / "pinned.cfg", kPinned);
  RunOptions opts;
  opts.out_dir = dir / "out";
  REQUIRE(run_experiment(cfg, opts) == kExitOk);
  const std::string csv = read_file(opts.out_dir / "pinned.csv");
  CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
  CHECK(csv == read_file(kGolden / "pinned.csv"));
  for (const char* alg : {"ccfm", "repeated", "eci", "vanilla"}) {
    CHECK(fs::exists(opts.out_dir / (std::string("pinned_") + alg + "_samples.txt")));
    CHECK(fs::exists(opts.out_dir / (std::string("pinned_") + alg + "_trajectories.svg")));
    CHECK(fs::exists(opts.out_dir / (std::string("pinned_") + alg + "_violation.svg")));
  }

  // Rerun, with more threads: byte-identical artifacts.
  RunOptions again = opts;
  again.out_dir = dir / "again";
  again.threads = 3;
  REQUIRE(run_experiment(cfg, again) == kExitOk);
  for (const auto& entry : fs::directory_iterator(opts.out_dir))
    CHECK(read_file(entry.path()) == read_file(again.out_dir / entry.path().filename()));
}

TEST_CASE("header and number formatting") {
  CHECK(std::string(kCsvHeader) ==
        "experiment_id,algorithm,steps,scheduler_n,seed,feasibility_rate,sliced_w2,mmse,smse,cv_ic,cv_cl,wall_time");
  ResultRow row;
  row.experiment_id = "x";
  row.algorithm = "ccfm";
  row.steps = 100;
  row.scheduler_n = 0.5;
  row.seed = 3;
  row.feasibility_rate = 2.0 / 3.0;
  row.sliced_w2 = 1e-20;
  row.mmse = std::numeric_limits<double>::quiet_NaN();
  const std::string csv = format_csv({row});
  CHECK(csv.substr(csv.find('\n') + 1) == "x,ccfm,100,0.5,3,0.666666667,1e-20,nan,0,0,0,0\n");
}

TEST_CASE("seed override") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_file(dir / "pinned.cfg", kPinned);
  RunOptions opts;
  opts.out_dir = dir / "out";
  opts.seed = 99;
  REQUIRE(run_experiment(cfg, opts) == kExitOk);
  const std::string csv = read_file(opts.out_dir / "pinned.csv");
  CHECK(csv.find(",99,") != std::string::npos);
}

TEST_CASE("malformed configs exit 2 and write nothing") {
  const fs::path dir = scratch("bad");
  const std::vector<std::string> broken = {
      std::string(kPinned) + "\n[sampler2]\nsteps = 3\n",
      std::regex_replace(std::string(kPinned), std::regex("steps = 20"), "steps = twenty"),
      std::regex_replace(std::string(kPinned), std::regex("a = 1 1"), "a = 1 1 1"),
      std::regex_replace(std::string(kPinned), std::regex("kind = band"), "kind = circle"),
      std::regex_replace(std::string(kPinned), std::regex("samples = 16"), "samples = 16\ncolour = red"),
      std::regex_replace(std::string(kPinned), std::regex("kind = linear"), "kind = min_distance\ncenter = 0 0\nradius = 1"),
      "[experiment\nid = x\n",
  };
  for (std::size_t i = 0; i < broken.size(); ++i) {
    CAPTURE(i);
    const fs::path cfg = write_file(dir / ("bad" + std::to_string(i) + ".cfg"), broken[i]);
    RunOptions opts;
    opts.out_dir = dir / ("out" + std::to_string(i));
    CHECK(run_experiment(cfg, opts) == kExitConfig);
    CHECK_FALSE(fs::exists(opts.out_dir / "pinned.csv"));
  }
  RunOptions opts;
  opts.out_dir = dir / "missing";
  CHECK(run_experiment(dir / "does_not_exist.cfg", opts) == kExitConfig);
  CHECK_THROWS_AS(parse_config("[model]\nkind = gaussian_mixture\n"), ConfigError);
}

TEST_CASE("infeasible constraints exit 3") {
  const fs::path dir = scratch("numerical");
  write_file(dir / "ref.txt", "0 0\n0.1 0\n");
  const std::string text = R"([experiment]
id = clash

[model]
kind = gaussian_mixture
means = 0 0
scales = 1

[constraint:left]
kind = linear
a = 1 0
b = -1

[constraint:right]
kind = linear
a = -1 0
b = -1

[sampler]
algorithms = repeated
steps = 5
samples = 2

[metrics]
reference = ref.txt
)";
  const fs::path cfg = write_file(dir / "clash.cfg", text);
  RunOptions opts;
  opts.out_dir = dir / "out";
  CHECK(run_experiment(cfg, opts) == kExitNumerical);
  CHECK(fs::exists(opts.out_dir / "results.csv"));
}

TEST_CASE("trajectory figure structure") {
  SampleRecord rec;
  for (int k = 0; k < 4; ++k) {
    Vec s(2);
    s << 0.1 * k, -0.2 * k;
    rec.states.push_back(s);
  }
  const std::string svg = render_figure({rec}, FigureKind::trajectory_2d, "three steps");
  const std::smatch m = [&] {
    std::smatch out;
    std::regex_search(svg, out, std::regex("<polyline[^>]*points=\"([^\"]*)\""));
    return out;
  }();
  REQUIRE(m.size() == 2);
  const std::string pts = m[1];
  CHECK(std::count(pts.begin(), pts.end(), ',') == 4);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(svg.find("stroke-dasharray") == std::string::npos);

  rec.proposals = {rec.states[1], rec.states[2] * 1.5, rec.states[3]};
  const std::string dashed = render_figure({rec}, FigureKind::trajectory_2d);
  CHECK(dashed.find("stroke-dasharray") != std::string::npos);

  SampleRecord three_d;
  three_d.states = {Vec::Zero(3), Vec::Ones(3)};
  CHECK_THROWS_AS(render_figure({three_d}, FigureKind::trajectory_2d), ConfigError);
}

TEST_CASE("empty record list writes no figure") {
  const fs::path dir = scratch("empty");
  CHECK_THROWS_AS(emit_figure({}, FigureKind::violation_curve, dir / "v.svg"), ConfigError);
  CHECK_FALSE(fs::exists(dir / "v.svg"));
}

TEST_CASE("violation curve passes the per-step data through") {
  SampleRecord rec;
  rec.per_step_violation = {0.5, 0.25, 0.0, 0.0};
  const auto data = violation_curve_data(rec);
  REQUIRE(data.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(data[k].first == (k + 1) / 4.0);
    CHECK(data[k].second == rec.per_step_violation[k]);
  }
  CHECK(render_figure({rec}, FigureKind::violation_curve).find("<polyline") != std::string::npos);
}

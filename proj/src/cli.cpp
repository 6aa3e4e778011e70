#include "branchou/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "branchou/errors.hpp"
#include "branchou/experiments.hpp"
#include "branchou/io.hpp"
#include "branchou/theory.hpp"

namespace branchou::cli {

namespace fs = std::filesystem;

namespace {

// Upper limit on particle-generations simulated by one sweep.
constexpr double kSweepBudget = 4294967296.0;  // 2^32

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::optional<double> b, gamma;
  std::optional<int> dim, generations;
  std::optional<std::size_t> reps;
  std::uint64_t seed = 1;
  bool quick = false;
  RunOptions run;

  std::size_t replicates(std::size_t standard) const {
    if (reps) return *reps;
    return quick ? std::max<std::size_t>(standard / 10, 10) : standard;
  }
  ModelParams params(double b0, double gamma0, int dim0 = 1) const {
    ModelParams p;
    p.b = b.value_or(b0);
    p.gamma = gamma.value_or(gamma0);
    p.dim = dim.value_or(dim0);
    p.seed = seed;
    return p;
  }
  RunOptions options(std::size_t standard) const {
    RunOptions o = run;
    o.replicates = replicates(standard);
    return o;
  }
};

using Reports = std::vector<ExperimentReport>;

struct Preset {
  const char* summary;
  std::function<Reports(const VerifyOptions&)> run;
};

Reports slln_preset(const VerifyOptions& v, double b, double gamma) {
  Reports out;
  const std::vector<int> dims = v.dim ? std::vector<int>{*v.dim} : std::vector<int>{1, 2};
  for (int d : dims) {
    VerifyOptions w = v;
    w.dim = d;
    out.push_back(slln_test(w.params(b, gamma), v.generations.value_or(13), w.options(100)));
  }
  return out;
}

OccupationCell sweep_cell(double b, double gamma, int dim, int generations, std::size_t reps, std::uint64_t seed,
                          std::size_t cell, int jobs) {
  ModelParams p;
  p.b = b;
  p.gamma = gamma;
  p.dim = dim;
  p.seed = RngStream(seed).purpose(cell).bits(0);
  RunOptions o;
  o.replicates = reps;
  o.jobs = jobs;
  return occupation_cell(p, generations, o);
}

void write_sweep_csv(const std::vector<OccupationCell>& cells, std::ostream& out) {
  out << "b,gamma,replicates,generations,mean_unit_ball_fraction,zero_occupation_fraction,occupation_decay_rate\n";
  for (const OccupationCell& c : cells) {
    out << io::format_double(c.b) << ',' << io::format_double(c.gamma) << ',' << c.replicates << ','
        << c.generations << ',' << io::format_double(c.mean_unit_ball_fraction) << ','
        << io::format_double(c.zero_occupation_fraction) << ','
        << (std::isfinite(c.occupation_decay_rate) ? io::format_double(c.occupation_decay_rate) : "nan") << '\n';
  }
}

struct SweepGrid {
  std::vector<double> b, gamma;
  int dim = 1;
  int generations = 10;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
};

void check_sweep_budget(const SweepGrid& g) {
  if (g.b.empty() || g.gamma.empty()) throw ArgumentError("sweep needs non-empty b and gamma grids");
  if (g.generations < 2) throw ArgumentError("sweep needs at least 2 generations");
  const double work = static_cast<double>(g.b.size() * g.gamma.size()) * static_cast<double>(g.reps) *
                      std::ldexp(1.0, std::min(g.generations, 60) + 1) * g.dim;
  if (work > kSweepBudget) {
    throw ResourceError("sweep grid needs about " + io::format_double(work) +
                        " particle-generations, above the budget of 2^32");
  }
}

std::vector<OccupationCell> run_sweep(const SweepGrid& g, int jobs) {
  check_sweep_budget(g);
  std::vector<OccupationCell> cells;
  std::size_t index = 0;
  for (double b : g.b) {
    for (double gamma : g.gamma) cells.push_back(sweep_cell(b, gamma, g.dim, g.generations, g.reps, g.seed, index++, jobs));
  }
  return cells;
}

const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table{
      {"case1_slln",
       {"SLLN for the relative system, b=0.5, gamma=0.5, m=13, 100 seeds, d=1 and d=2",
        [](const VerifyOptions& v) { return slln_preset(v, 0.5, 0.5); }}},
      {"noninteractive_ou",
       {"SLLN for the non-interacting branching O-U process, gamma=0, b=1, m=13",
        [](const VerifyOptions& v) { return slln_preset(v, 1.0, 0.0); }}},
      {"case2_watanabe",
       {"Watanabe scaling trend, b=0.5, gamma=-0.5, n=8..14, 200 replicates",
        [](const VerifyOptions& v) {
          const ModelParams p = v.params(0.5, -0.5);
          const int n_hi = v.generations.value_or(14);
          const Box box{Eigen::VectorXd::Constant(p.dim, -1.0), Eigen::VectorXd::Constant(p.dim, 1.0)};
          return Reports{watanabe_scaling_test(p, n_hi - 6, n_hi, box, v.options(200))};
        }}},
      {"case4_extinction",
       {"Local extinction, b=-1, gamma=0.5, m=12, 200 replicates, unit ball",
        [](const VerifyOptions& v) {
          return Reports{extinction_test(v.params(-1.0, 0.5), v.generations.value_or(12), 1.0, v.options(200))};
        }}},
      {"com_inward",
       {"Center-of-mass variance, b=1, gamma=0.5, m=10, 10^4 replicates",
        [](const VerifyOptions& v) {
          return Reports{com_convergence_test(v.params(1.0, 0.5), v.generations.value_or(10), v.options(10000))};
        }}},
      {"com_escape",
       {"Escape law of e^{bm} Zbar_m, b=-1, m=15, 10^4 replicates",
        [](const VerifyOptions& v) {
          return Reports{escape_test(v.params(-1.0, 0.5), v.generations.value_or(15), v.options(10000))};
        }}},
      {"delta_equiv",
       {"Law equivalence of (b, gamma) pairs with equal gamma + b, m=10, 10^4 replicates",
        [](const VerifyOptions& v) {
          const int m = v.generations.value_or(10);
          const RunOptions o = v.options(10000);
          Reports out;
          if (v.b || v.gamma) {
            const ModelParams p = v.params(1.0, 0.5);
            out.push_back(delta_equivalence_test(p, theory::delta_transform(p, -p.b), m, o));
          } else {
            const ModelParams p1 = v.params(1.0, 0.5);
            const ModelParams p2 = v.params(-1.0, 1.0);
            out.push_back(delta_equivalence_test(p1, theory::delta_transform(p1, -1.0), m, o));
            out.push_back(delta_equivalence_test(p2, theory::delta_transform(p2, 1.0), m, o));
          }
          return out;
        }}},
      {"covariance_mrca",
       {"Pair covariance by split time, gamma=1, m=6, 10^5 replicates, classes 0, 3, 5",
        [](const VerifyOptions& v) {
          const int m = v.generations.value_or(6);
          std::vector<int> classes;
          for (int a : {0, 3, 5}) {
            if (a < m) classes.push_back(a);
          }
          return Reports{covariance_mrca_test(v.params(0.0, 1.0), m, classes, v.options(100000))};
        }}},
      {"bounded_drift",
       {"Bounded drift 1.5 + 0.4 tanh(x), m=20, 200 replicates, Euler h=1/4",
        [](const VerifyOptions& v) {
          ModelParams p = v.params(0.0, 0.5);
          p.bounded = BoundedDrift{};
          const StepperConfig cfg{StepperConfig::Mode::Euler, 0.25};
          return Reports{bounded_drift_test(p, v.generations.value_or(20), cfg, v.options(200))};
        }}},
      {"case3_explore",
       {"Exploratory occupation sweep for b>0, b+gamma<0 (no pass/fail)", nullptr}},
  };
  return table;
}

int cmd_verify(const std::string& name, const VerifyOptions& v, const std::string& out_flag, std::ostream& out) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ArgumentError("unknown preset '" + name + "'");
  const fs::path dir = output_dir(out_flag);
  ensure_dir(dir);

  if (name == "case3_explore") {
    SweepGrid g;
    g.b = {v.b.value_or(0.5)};
    g.gamma = v.gamma ? std::vector<double>{*v.gamma} : std::vector<double>{-0.7, -0.9, -1.2, -1.5};
    g.dim = v.dim.value_or(1);
    g.generations = v.generations.value_or(12);
    g.reps = v.replicates(50);
    g.seed = v.seed;
    const fs::path path = dir / "case3_explore.csv";
    std::ofstream file(path);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    write_sweep_csv(run_sweep(g, v.run.jobs), file);
    if (!file) throw IoError("write failed for " + path.string());
    out << "case3_explore: wrote " << path.string() << " (exploratory, no pass/fail)\n";
    return kPass;
  }

  const Reports reports = it->second.run(v);
  bool all = true;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const std::string stem = reports.size() == 1 ? name : name + "_" + std::to_string(k + 1);
    const fs::path path = dir / (stem + ".json");
    io::write_report(reports[k], path);
    const bool ok = reports[k].passed();
    all = all && ok;
    out << stem << ": " << (ok ? "PASS" : "FAIL") << " (" << path.string() << ")\n";
    for (const Statistic& s : reports[k].statistics) {
      out << "  " << s.name << " observed=" << s.observed << " theoretical=" << s.theoretical
          << (s.pass ? "" : "  <- failed") << '\n';
    }
  }
  return all ? kPass : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// theory

struct TheoryArgs {
  double b = 0.0, gamma = 0.0, t = 1.0, c = theory::kCovarianceBoundC, rho = 0.0, sigma2 = 1.0;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  int m = 1, a = 0, n = 1, d = 1;
  std::vector<double> y;
};

const std::vector<std::string>& theory_quantities() {
  static const std::vector<std::string> names{
      "com-time-change", "terminal-variance", "relative-variance", "relative-variance-closed",
      "noise-covariance", "pair-covariance", "class-covariance", "covariance-bound",
      "limit-density", "limit-box-mass", "watanabe-scale", "indicator-covariance"};
  return names;
}

int cmd_theory(const std::string& q, const TheoryArgs& a, std::ostream& out) {
  const double g = a.gamma + a.b;
  theory::TheoryValue v;
  if (q == "com-time-change") v = theory::com_time_change(a.t, a.b);
  else if (q == "terminal-variance") v = theory::terminal_variance(a.b);
  else if (q == "relative-variance") v = theory::relative_variance(a.m, g);
  else if (q == "relative-variance-closed") v = theory::relative_variance_closed(a.m, g);
  else if (q == "noise-covariance") v = theory::noise_covariance(a.n, g);
  else if (q == "pair-covariance") v = theory::pair_covariance(a.m, a.a, g);
  else if (q == "class-covariance") v = theory::class_covariance(a.m, a.a, g);
  else if (q == "covariance-bound") v = theory::covariance_bound(a.m, a.a, g, a.c);
  else if (q == "limit-density") {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(a.d);
    if (!a.y.empty()) y = Eigen::Map<const Eigen::VectorXd>(a.y.data(), static_cast<Eigen::Index>(a.y.size()));
    v = theory::limit_density(y, g, static_cast<int>(y.size()));
  } else if (q == "limit-box-mass") {
    v = theory::limit_box_mass(Eigen::VectorXd::Constant(a.d, a.lo), Eigen::VectorXd::Constant(a.d, a.hi), g);
  } else if (q == "watanabe-scale") v = theory::watanabe_scale(a.n, a.d);
  else if (q == "indicator-covariance") v = theory::indicator_cov_gaussian(a.rho, a.sigma2, {a.lo, a.hi});
  else throw ArgumentError("unknown quantity '" + q + "'");

  nlohmann::ordered_json j;
  j["quantity"] = q;
  j["value"] = v.value;
  j["formula"] = std::string(theory::formula_name(v.formula));
  j["singular_handled"] = v.singular_handled;
  out << j.dump() << '\n';
  return kPass;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config, out, run_id = "run", mode;
  std::optional<double> b, gamma, step;
  std::optional<int> dim, generations;
  std::optional<std::uint64_t> seed;
  bool bounded = false;
  bool final_only = false;
};

int cmd_simulate(const SimulateArgs& s, std::ostream& out) {
  io::RunConfig cfg = s.config.empty() ? io::RunConfig{} : io::read_config(s.config);
  if (s.b) cfg.params.b = *s.b;
  if (s.gamma) cfg.params.gamma = *s.gamma;
  if (s.dim) cfg.params.dim = *s.dim;
  if (s.generations) cfg.params.horizon_m = *s.generations;
  if (s.seed) cfg.params.seed = *s.seed;
  if (s.bounded) cfg.params.bounded = BoundedDrift{};
  if (s.mode == "euler") cfg.stepper.mode = StepperConfig::Mode::Euler;
  else if (s.mode == "exact") cfg.stepper.mode = StepperConfig::Mode::ExactGeneration;
  if (s.step) {
    if (cfg.stepper.mode != StepperConfig::Mode::Euler) throw ArgumentError("--step requires --mode euler");
    cfg.stepper.h = *s.step;
  }
  if (cfg.params.bounded && cfg.stepper.mode != StepperConfig::Mode::Euler) {
    throw ArgumentError("bounded drift requires --mode euler");
  }
  cfg.params.validate();
  cfg.stepper.validate();

  io::Trajectory traj;
  traj.run_id = s.run_id;
  const ModelParams& p = cfg.params;
  simulate(p, cfg.stepper, RngStream(p.seed).replicate(0), [&](const Generation& g) {
    if (!s.final_only || (g.m == p.horizon_m && g.at_end())) traj.snapshots.push_back(g);
  });

  fs::path path = s.out.empty() ? output_dir("") / (s.run_id + ".csv") : fs::path(s.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  io::write_snapshot(traj, path);
  out << "wrote " << traj.snapshots.size() << " snapshots to " << path.string() << '\n';
  return kPass;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, preset] : presets()) names.push_back(name);
  return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Branching O-U particle systems with attraction: simulation and verification"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one run and write snapshots as CSV");
  simulate_cmd->add_option("--config", sim.config, "JSON run configuration");
  simulate_cmd->add_option("--seed", sim.seed, "Root seed");
  simulate_cmd->add_option("--generations", sim.generations, "Last generation m (2^m final particles)");
  simulate_cmd->add_option("--b", sim.b, "O-U parameter b");
  simulate_cmd->add_option("--gamma", sim.gamma, "Attraction parameter gamma");
  simulate_cmd->add_option("--dim", sim.dim, "Spatial dimension");
  simulate_cmd->add_option("--mode", sim.mode, "Stepper")->check(CLI::IsMember({"euler", "exact"}));
  simulate_cmd->add_option("--step", sim.step, "Euler step, a power of 1/2");
  simulate_cmd->add_flag("--bounded", sim.bounded, "Use the bounded drift 1.5 + 0.4 tanh(x)");
  simulate_cmd->add_flag("--final-only", sim.final_only, "Write only the last snapshot");
  simulate_cmd->add_option("--run-id", sim.run_id, "run_id column value");
  simulate_cmd->add_option("--out", sim.out, "Output CSV path");

  VerifyOptions ver;
  std::string preset, verify_out;
  std::optional<std::uint64_t> verify_seed;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification preset and write its JSON report");
  verify_cmd->add_option("preset", preset, "Preset name")->required();
  verify_cmd->add_option("--b", ver.b);
  verify_cmd->add_option("--gamma", ver.gamma);
  verify_cmd->add_option("--dim", ver.dim);
  verify_cmd->add_option("--generations", ver.generations);
  verify_cmd->add_option("--reps", ver.reps, "Replicates (default per preset)");
  verify_cmd->add_option("--seed", verify_seed);
  verify_cmd->add_option("--jobs", ver.run.jobs, "Worker threads")->check(CLI::PositiveNumber);
  verify_cmd->add_flag("--quick", ver.quick, "1/10 replicates with wider tolerances");
  verify_cmd->add_option("--out", verify_out, "Report directory");

  TheoryArgs th;
  std::string quantity;
  auto* theory_cmd = app.add_subcommand("theory", "Print a closed-form quantity as JSON");
  theory_cmd->add_option("quantity", quantity, "Quantity name")->required()->check(CLI::IsMember(theory_quantities()));
  theory_cmd->add_option("--b", th.b);
  theory_cmd->add_option("--gamma", th.gamma, "gamma (gamma + b is the effective rate)");
  theory_cmd->add_option("--t", th.t);
  theory_cmd->add_option("--m", th.m);
  theory_cmd->add_option("--a", th.a);
  theory_cmd->add_option("--n", th.n);
  theory_cmd->add_option("--d", th.d);
  theory_cmd->add_option("--c", th.c);
  theory_cmd->add_option("--rho", th.rho);
  theory_cmd->add_option("--sigma2", th.sigma2);
  theory_cmd->add_option("--lo", th.lo);
  theory_cmd->add_option("--hi", th.hi);
  theory_cmd->add_option("--y", th.y)->delimiter(',');

  SweepGrid grid;
  grid.b = {};
  std::string sweep_config, sweep_out;
  int sweep_jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Occupation statistics over a (b, gamma) grid as CSV");
  sweep_cmd->add_option("--b-grid", grid.b, "Comma-separated b values")->delimiter(',');
  sweep_cmd->add_option("--gamma-grid", grid.gamma, "Comma-separated gamma values")->delimiter(',');
  sweep_cmd->add_option("--dim", grid.dim);
  sweep_cmd->add_option("--generations", grid.generations);
  sweep_cmd->add_option("--reps", grid.reps);
  sweep_cmd->add_option("--seed", grid.seed);
  sweep_cmd->add_option("--jobs", sweep_jobs)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--config", sweep_config, "JSON grid: {b, gamma, dim, generations, replicates, seed}");
  sweep_cmd->add_option("--out", sweep_out, "Output CSV path (default: sweep.csv in the output directory)");

  std::vector<std::string> argv_store{"branchou"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*verify_cmd) {
      if (verify_seed) ver.seed = *verify_seed;
      if (ver.quick) ver.run.thresholds = Thresholds::quick();
      return cmd_verify(preset, ver, verify_out, out);
    }
    if (*theory_cmd) return cmd_theory(quantity, th, out);
    if (*sweep_cmd) {
      if (!sweep_config.empty()) {
        std::ifstream in(sweep_config);
        if (!in) throw IoError("cannot open " + sweep_config);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
          grid.b = j.at("b").get<std::vector<double>>();
          grid.gamma = j.at("gamma").get<std::vector<double>>();
          grid.dim = j.value("dim", grid.dim);
          grid.generations = j.value("generations", grid.generations);
          grid.reps = j.value("replicates", grid.reps);
          grid.seed = j.value("seed", grid.seed);
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(sweep_config + ": " + e.what());
        }
      }
      check_sweep_budget(grid);
      const fs::path path = sweep_out.empty() ? output_dir("") / "sweep.csv" : fs::path(sweep_out);
      if (path.has_parent_path()) ensure_dir(path.parent_path());
      const std::vector<OccupationCell> cells = run_sweep(grid, sweep_jobs);
      std::ofstream file(path);
      if (!file) throw IoError("cannot open " + path.string() + " for writing");
      write_sweep_csv(cells, file);
      if (!file) throw IoError("write failed for " + path.string());
      out << "wrote " << cells.size() << " cells to " << path.string() << '\n';
      return kPass;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kResource;
  }
  return kUsage;
}

}  // namespace branchou::cli

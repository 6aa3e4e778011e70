#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "branchou/cli.hpp"
#include "branchou/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = branchou::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("branchou_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_runtime(const std::string& json) {
  return std::regex_replace(json, std::regex("\"runtime_seconds\": [^\\n]*"), "");
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("theory quantities") {
    Result r = cli({"theory", "terminal-variance", "--b", "-1"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j["value"].get<double>() - 0.46371) < 1e-5);

    r = cli({"theory", "relative-variance", "--gamma", "1", "--m", "2"});
    CHECK(r.code == 0);
    CHECK(std::abs(nlohmann::json::parse(r.out)["value"].get<double>() - 0.216166) < 1e-6);

    r = cli({"theory", "terminal-variance", "--b", "1"});
    CHECK(r.code == branchou::cli::kDomain);
    CHECK(r.err.find("b < 0") != std::string::npos);

    CHECK(cli({"theory", "no-such-quantity"}).code == branchou::cli::kUsage);
    CHECK(cli({"theory", "watanabe-scale", "--n", "4", "--d", "1"}).code == 0);
  }

  TEST_CASE("usage errors") {
    CHECK(cli({}).code == branchou::cli::kUsage);
    CHECK(cli({"frobnicate"}).code == branchou::cli::kUsage);
    CHECK(cli({"verify", "no_such_preset"}).code == branchou::cli::kUsage);
    CHECK(cli({"simulate", "--mode", "euler", "--step", "0.3", "--out", "/tmp/x.csv"}).code == branchou::cli::kUsage);
    CHECK(cli({"simulate", "--mode", "rk4"}).code == branchou::cli::kUsage);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("simulate writes 2^m final particles deterministically") {
    const fs::path dir = scratch("simulate");
    const std::vector<std::string> base{"simulate", "--b", "1", "--gamma", "0.5", "--generations", "10", "--seed", "7"};
    auto with_out = [&](const std::string& name) {
      auto a = base;
      a.insert(a.end(), {"--out", (dir / name).string()});
      return a;
    };
    REQUIRE(cli(with_out("a.csv")).code == 0);
    REQUIRE(cli(with_out("b.csv")).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    const branchou::io::Trajectory t = branchou::io::read_snapshot(dir / "a.csv");
    REQUIRE_FALSE(t.snapshots.empty());
    CHECK(t.snapshots.back().size() == 1024);
    CHECK(t.snapshots.back().t == 11.0);

    auto euler = with_out("euler.csv");
    euler.insert(euler.end(), {"--mode", "euler", "--step", "0.25", "--final-only"});
    euler[6] = "3";
    CHECK(cli(euler).code == 0);
    CHECK(branchou::io::read_snapshot(dir / "euler.csv").snapshots.size() == 1);

    std::ofstream(dir / "cfg.json") << R"({"b": 0.5, "gamma": 1, "horizon_m": 2, "seed": 3})";
    CHECK(cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", (dir / "c.csv").string()}).code == 0);
    CHECK(branchou::io::read_snapshot(dir / "c.csv").snapshots.back().size() == 4);
    std::ofstream(dir / "bad.json") << R"({"bogus": 1})";
    CHECK(cli({"simulate", "--config", (dir / "bad.json").string()}).code == branchou::cli::kUsage);
    CHECK(cli({"simulate", "--config", (dir / "missing.json").string()}).code == branchou::cli::kResource);
    CHECK(cli({"simulate", "--generations", "30", "--out", (dir / "big.csv").string()}).code == branchou::cli::kResource);
  }

  TEST_CASE("verify writes a report and maps the outcome to the exit code") {
    const fs::path dir = scratch("verify");
    const Result r = cli({"verify", "com_escape", "--b", "-1", "--quick", "--out", dir.string()});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "com_escape.json"));
    CHECK(j["experiment"] == "com_escape");
    bool found = false;
    for (const auto& s : j["statistics"]) {
      if (s["name"] == "variance_coord0") {
        found = true;
        CHECK(std::abs(s["theoretical"].get<double>() - 0.46371) < 1e-5);
      }
    }
    CHECK(found);

    // Inward drift never goes extinct, so the extinction preset fails.
    const Result fail = cli({"verify", "case4_extinction", "--b", "1", "--generations", "6", "--reps", "20",
                             "--out", dir.string()});
    CHECK(fail.code == branchou::cli::kVerificationFailed);
    CHECK(fail.out.find("FAIL") != std::string::npos);
    // Out-of-regime override is a domain error.
    CHECK(cli({"verify", "com_escape", "--b", "1", "--out", dir.string()}).code == branchou::cli::kDomain);
  }

  TEST_CASE("reports are identical for any number of jobs") {
    const fs::path one = scratch("jobs1");
    const fs::path three = scratch("jobs3");
    for (const auto& [dir, jobs] : {std::pair{one, "1"}, std::pair{three, "3"}}) {
      REQUIRE(cli({"verify", "covariance_mrca", "--reps", "3000", "--jobs", jobs, "--out", dir.string()}).code == 0);
    }
    const std::string a = slurp(one / "covariance_mrca.json");
    CHECK_FALSE(a.empty());
    CHECK(without_runtime(a) == without_runtime(slurp(three / "covariance_mrca.json")));
  }

  TEST_CASE("output directory falls back to the environment") {
    const fs::path dir = scratch("env");
    ::setenv(branchou::cli::kOutputDirEnv, dir.string().c_str(), 1);
    const Result r = cli({"verify", "com_inward", "--reps", "200"});
    ::unsetenv(branchou::cli::kOutputDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "com_inward.json"));
  }

  TEST_CASE("sweep emits one row per cell and enforces its budget") {
    const fs::path dir = scratch("sweep");
    const fs::path csv = dir / "grid.csv";
    Result r = cli({"sweep", "--b-grid", "1,-1,0.5", "--gamma-grid", "0.5,1,-1", "--reps", "100",
                    "--generations", "7", "--out", csv.string()});
    CHECK(r.code == 0);
    std::ifstream in(csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 10);
    CHECK(rows[0] == "b,gamma,replicates,generations,mean_unit_ball_fraction,zero_occupation_fraction,occupation_decay_rate");

    r = cli({"sweep", "--b-grid", "1,2", "--gamma-grid", "1,2", "--reps", "100000", "--generations", "20",
             "--out", csv.string()});
    CHECK(r.code == branchou::cli::kResource);

    std::ofstream(dir / "grid.json") << R"({"b": [1], "gamma": [0.5, 1], "replicates": 20, "generations": 5})";
    r = cli({"sweep", "--config", (dir / "grid.json").string(), "--out", (dir / "cfg.csv").string()});
    CHECK(r.code == 0);
    CHECK(cli({"sweep", "--gamma-grid", "1", "--out", csv.string()}).code == branchou::cli::kUsage);
  }

  TEST_CASE("every preset name is listed") {
    const auto names = branchou::cli::preset_names();
    for (const char* n : {"case1_slln", "case2_watanabe", "case3_explore", "case4_extinction", "com_inward",
                          "com_escape", "delta_equiv", "covariance_mrca", "bounded_drift", "noninteractive_ou"}) {
      CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
  }
}

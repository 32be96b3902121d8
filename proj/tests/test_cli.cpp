#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splitflow/cli.hpp"

using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path make_temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("splitflow_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

// small, fast sweep config shared by the CLI tests
const char* kSmallSweep = R"({
  "model": {"kind": "dirichlet", "K": 64, "sigma_E": -0.3, "beta": 0.0},
  "grid": {"T": 1.0, "n": [4, 8, 16, 32, 64], "m": 64},
  "norm": {"alpha": 0.0, "gamma": 0.0, "p": 2.0},
  "mc": {"M": 8, "seed": 99},
  "slope_band": [0.0, 1.0]
})";

} // namespace

TEST_CASE("selftest subcommand") {
    CHECK(splitflow::cli::run({"selftest"}) == 0);
}

TEST_CASE("unknown flags exit with code 2") {
    CHECK(splitflow::cli::run({"ms-sweep", "--no-such-flag"}) == 2);
    CHECK(splitflow::cli::run({"not-a-subcommand"}) == 2);
}

TEST_CASE("malformed config exits with code 2") {
    const fs::path dir = make_temp_dir("badcfg");
    write_text(dir / "bad.json", "{ this is not json");
    CHECK(splitflow::cli::run({"--config", (dir / "bad.json").string(), "ms-sweep"}) == 2);
}

TEST_CASE("infeasible parameters exit with code 2") {
    const fs::path dir = make_temp_dir("infeasible");
    write_text(dir / "cfg.json", R"({
      "model": {"kind": "dirichlet", "K": 8, "sigma_E": -0.2},
      "grid": {"n": [4, 8, 16], "m": 16},
      "norm": {"alpha": 0.35, "gamma": 0.0},
      "mc": {"M": 4, "seed": 1}
    })");
    CHECK(splitflow::cli::run({"--config", (dir / "cfg.json").string(), "--out",
                               (dir / "out").string(), "heat-demo"}) == 2);
}

TEST_CASE("ms-sweep writes CSV and summary, byte-identical across runs") {
    const fs::path dir = make_temp_dir("mssweep");
    write_text(dir / "cfg.json", kSmallSweep);
    const auto args = std::vector<std::string>{"--config", (dir / "cfg.json").string(),
                                               "--out", (dir / "out").string(), "ms-sweep"};
    REQUIRE(splitflow::cli::run(args) == 0);
    const std::string first = read_file(dir / "out" / "ms_sweep.csv");
    CHECK(first.rfind("# splitflow-v1", 0) == 0);
    REQUIRE(splitflow::cli::run(args) == 0);
    CHECK(read_file(dir / "out" / "ms_sweep.csv") == first);

    SECTION("summary has the required keys") {
        const auto summary =
            nlohmann::json::parse(read_file(dir / "out" / "ms_sweep_summary.json"));
        for (const char* key : {"experiment", "theta_max", "slope", "r2", "pass", "runtime_s"}) {
            CHECK(summary.contains(key));
        }
        CHECK(summary["experiment"] == "ms-sweep");
    }

    SECTION("emitted rows round-trip through the fit subcommand") {
        CHECK(splitflow::cli::run({"--out", (dir / "out").string(), "fit",
                                   (dir / "out" / "ms_sweep.csv").string()}) == 0);
        const auto summary =
            nlohmann::json::parse(read_file(dir / "out" / "fit_summary.json"));
        CHECK(summary["slope"].get<double>() > 0.0);
    }
}

TEST_CASE("fit recovers an exact power law to 1e-12") {
    const fs::path dir = make_temp_dir("fit");
    std::ostringstream csv;
    csv << "# splitflow-v1\nn,error\n";
    for (double n : {4.0, 8.0, 16.0, 32.0}) {
        char line[64];
        std::snprintf(line, sizeof(line), "%g,%.17g\n", n, 2.0 * std::pow(n, -0.5));
        csv << line;
    }
    write_text(dir / "table.csv", csv.str());
    REQUIRE(splitflow::cli::run({"--out", dir.string(), "fit",
                                 (dir / "table.csv").string()}) == 0);
    const auto summary = nlohmann::json::parse(read_file(dir / "fit_summary.json"));
    CHECK(summary["slope"].get<double>() == Approx(0.5).epsilon(1e-12));
    CHECK(summary["r2"].get<double>() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("path-sweep runs a small config and dumps a path") {
    const fs::path dir = make_temp_dir("pathsweep");
    write_text(dir / "cfg.json", R"({
      "model": {"kind": "dirichlet", "K": 16, "sigma_E": -0.3},
      "grid": {"n": [4, 8, 16], "m": 32},
      "norm": {"alpha": 0.0, "gamma": 0.1},
      "mc": {"M": 6, "seed": 7},
      "slope_band": [0.0, 2.0]
    })");
    const fs::path dump = dir / "path.bin";
    REQUIRE(splitflow::cli::run({"--config", (dir / "cfg.json").string(), "--out",
                                 (dir / "out").string(), "path-sweep", "--dump-path",
                                 dump.string()}) == 0);
    REQUIRE(fs::exists(dump));
    std::ifstream is(dump, std::ios::binary);
    const splitflow::FinePath path = splitflow::load_fine_path(is);
    CHECK(path.grid.m == 32);
    CHECK(path.dbeta.size() == 16);

    SECTION("seed flag changes output, env variable matches the same seed") {
        const auto base_args = std::vector<std::string>{
            "--config", (dir / "cfg.json").string(), "--out", (dir / "a").string(),
            "--seed", "1234", "path-sweep"};
        REQUIRE(splitflow::cli::run(base_args) == 0);
        setenv("SPLITFLOW_SEED", "1234", 1);
        REQUIRE(splitflow::cli::run({"--config", (dir / "cfg.json").string(), "--out",
                                     (dir / "b").string(), "path-sweep"}) == 0);
        unsetenv("SPLITFLOW_SEED");
        CHECK(read_file(dir / "a" / "path_sweep.csv") ==
              read_file(dir / "b" / "path_sweep.csv"));
    }
}

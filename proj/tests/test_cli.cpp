#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psilab/cli.hpp"

using namespace psilab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("psilab-test-cli-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> csv_lines(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        REQUIRE(!line.empty());
        REQUIRE(line.back() == '\r');
        line.pop_back();
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        out.push_back(cells);
    }
    return out;
}

int run_shell(const std::string& cmd, const fs::path& log) {
    const int rc = std::system((cmd + " > " + log.string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_exe(const std::string& args, const fs::path& log) { return run_shell(std::string(PSILAB_EXE) + " " + args, log); }

}  // namespace

TEST_CASE("grid and budget arguments") {
    RunConfig cfg = default_config();
    CHECK_NOTHROW(validate(cfg));
    apply_grid_arg(cfg, "deviation=0,0.25,0.5");
    CHECK(cfg.grids.at("deviation") == std::vector<double>{0.0, 0.25, 0.5});
    apply_budget_arg(cfg, "pairs=400");
    CHECK(cfg.budgets.at("pairs") == 400.0);

    CHECK_THROWS_AS(apply_grid_arg(cfg, "nosuch=0.1"), ConfigError);
    CHECK_THROWS_AS(apply_grid_arg(cfg, "deviation"), ConfigError);
    CHECK_THROWS_AS(apply_grid_arg(cfg, "deviation=0.1,,0.2"), ConfigError);
    CHECK_THROWS_AS(apply_grid_arg(cfg, "deviation=0.1,abc"), ConfigError);
    CHECK_THROWS_AS(apply_budget_arg(cfg, "nosuch=1"), ConfigError);
    CHECK_THROWS_AS(apply_budget_arg(cfg, "pairs=-1"), ConfigError);
    CHECK_THROWS_AS(apply_budget_arg(cfg, "pairs=inf"), ConfigError);
}

TEST_CASE("validation") {
    RunConfig cfg = default_config();
    cfg.n = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.n = 9;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = default_config();
    cfg.radius_cap = 1.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = default_config();
    cfg.format = "xml";
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = default_config();
    apply_grid_arg(cfg, "deviation_r=0");
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = default_config();
    apply_grid_arg(cfg, "deviation=1.0");
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    // Grid values may not exceed the radius cap of the kernel model.
    cfg = default_config();
    cfg.radius_cap = 0.9;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    apply_grid_arg(cfg, "diag=0,0.5,0.9");
    CHECK_NOTHROW(validate(cfg));

    cfg = default_config();
    apply_grid_arg(cfg, "smvp_s=-1,2");
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("config embedding") {
    const RunConfig cfg = default_config();
    const auto j = nlohmann::json::parse(config_to_json(cfg));
    CHECK(j["n"] == 1);
    CHECK(j["seed"] == 7);
    CHECK(j["grids"]["volume"].size() == 8);
    CHECK(j["budgets"]["volume_samples"] == 100000);
    bool seen = false;
    for (const auto& [k, v] : config_rows(cfg)) seen = seen || (k == "grid.cutoff_delta" && v == "0.04 0.02");
    CHECK(seen);
}

TEST_CASE("verify metric writes a report and is reproducible") {
    RunConfig cfg = default_config();
    cfg.n = 2;
    cfg.output_dir = scratch("metric").string();
    std::ostringstream console;
    CHECK(cmd_verify("metric", cfg, console) == 0);
    CHECK(console.str().find("PASS") != std::string::npos);
    const fs::path file = fs::path(cfg.output_dir) / "metric.json";
    const std::string first = slurp(file);
    const auto j = nlohmann::json::parse(first);
    CHECK(j["pass"] == true);
    CHECK(j["config"]["n"] == 2);
    CHECK(j["values"].contains("hessian_algebra.det_max_rel_residual"));

    std::ostringstream again;
    CHECK(cmd_verify("metric", cfg, again) == 0);
    CHECK(slurp(file) == first);
    CHECK(again.str() == console.str());

    cfg.format = "csv";
    CHECK(cmd_verify("metric", cfg, console) == 0);
    CHECK(slurp(fs::path(cfg.output_dir) / "metric.csv").rfind("section,key,value\r\n", 0) == 0);
}

TEST_CASE("verify error paths") {
    RunConfig cfg = default_config();
    cfg.output_dir = scratch("errors").string();
    std::ostringstream console;
    CHECK(cmd_verify("nosuch", cfg, console) == 2);
    CHECK(console.str().rfind("error: ", 0) == 0);
    cfg.output_dir = "/proc/psilab-cannot-write";
    CHECK(cmd_verify("metric", cfg, console) == 2);
    CHECK_THROWS_AS(run_module("nosuch", default_config()), ConfigError);
}

TEST_CASE("summary line") {
    VerificationReport r;
    r.suite_name = "x";
    r.n = 2;
    r.pass = true;
    r.fitted_constants = FittedConstants{0.5, 0.25};
    const std::string s = summary_line(r);
    CHECK(s.find("x n=2 PASS") == 0);
    CHECK(s.find("epsilon_hat=0.25") != std::string::npos);
}

TEST_CASE("radial distance table") {
    const auto rows = csv_lines(make_table("radial_distance", default_config()));
    REQUIRE(rows.size() == 21);
    CHECK(rows[0] == std::vector<std::string>{"t", "radial_distance", "lower_bound", "upper_bound"});
    CHECK(rows[1][0] == "0");
    CHECK(std::stod(rows[1][1]) == 0.0);
    CHECK(rows.back()[0] == "0.95");
    for (std::size_t i = 2; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][1]) > std::stod(rows[i - 1][1]));
        CHECK(std::stod(rows[i][2]) <= std::stod(rows[i][1]));
        CHECK(std::stod(rows[i][1]) <= std::stod(rows[i][3]));
    }
}

TEST_CASE("diag ratio table") {
    const auto rows = csv_lines(make_table("diag_ratio", default_config()));
    REQUIRE(rows.size() == 21);
    CHECK(rows.back()[0] == "0.95");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double v = std::stod(rows[i][1]);
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
}

TEST_CASE("volume scaling table footer") {
    RunConfig cfg = default_config();
    cfg.n = 2;
    apply_budget_arg(cfg, "volume_samples=20000");
    const auto rows = csv_lines(make_table("volume_scaling", cfg));
    REQUIRE(rows.size() == 10);
    CHECK(rows[0].size() == 7);
    const auto& footer = rows.back();
    CHECK(footer[0] == "slope");
    CHECK(std::stod(footer[2]) == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("offdiag scatter table") {
    RunConfig cfg = default_config();
    apply_budget_arg(cfg, "pairs=20");
    apply_budget_arg(cfg, "bracket_budget=5");
    const auto rows = csv_lines(make_table("offdiag_scatter", cfg));
    REQUIRE(rows.size() == 21);
    CHECK(rows[0] == std::vector<std::string>{"z", "w", "d_lower", "d_upper", "y"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][2]) <= std::stod(rows[i][3]));
}

TEST_CASE("executable exit codes") {
    const fs::path dir = scratch("exe");
    fs::create_directories(dir);
    const fs::path log = dir / "log.txt";
    const std::string out = " --out " + (dir / "reports").string();

    CHECK(run_exe("verify metric --n 2 --seed 7" + out, log) == 0);
    CHECK(fs::exists(dir / "reports" / "metric.json"));
    CHECK(run_exe("verify --suite metric" + out, log) == 0);
    CHECK(run_exe("verify nosuch" + out, log) == 2);
    CHECK(run_exe("verify metric --n 9" + out, log) == 2);
    CHECK(run_exe("verify metric --budget nosuch=1" + out, log) == 2);
    CHECK(run_exe("verify metric --format xml" + out, log) == 2);
    CHECK(run_exe("verify metric --out /proc/psilab-cannot-write", log) == 2);
    CHECK(run_exe("table nosuch" + out, log) == 2);
    CHECK(run_exe("--help", log) == 0);
    CHECK(run_exe("", log) == 2);

    CHECK(run_exe("verify kernel --n 1 --radius-cap 0.99 --budget kernel_terms_limit=1024" + out, log) == 2);
    CHECK(slurp(log).find("radius_cap too aggressive for K_max limit") != std::string::npos);

    CHECK(run_exe("table radial_distance" + out, log) == 0);
    CHECK(fs::exists(dir / "reports" / "radial_distance.csv"));

    // Environment overrides apply, flags win over them.
    const std::string exe = " " + std::string(PSILAB_EXE) + " verify metric" + out;
    CHECK(run_shell("env PSILAB_N=9" + exe, log) == 2);
    CHECK(run_shell("env PSILAB_N=9" + exe + " --n 2", log) == 0);
    CHECK(run_shell("env PSILAB_BUDGET='nosuch=1'" + exe, log) == 2);
    CHECK(run_shell("env PSILAB_FORMAT=csv" + exe, log) == 0);
    CHECK(fs::exists(dir / "reports" / "metric.csv"));
    fs::remove_all(dir);
}

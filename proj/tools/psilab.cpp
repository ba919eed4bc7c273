#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psilab/cli.hpp"

namespace {

struct Flags {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double radius_cap = 0.0;
    std::vector<std::string> grids;
    std::vector<std::string> budgets;
    std::string out;
    std::string format;
};

void add_common(CLI::App* cmd, Flags& f, const psilab::RunConfig& d) {
    f.n = d.n;
    f.seed = d.seed;
    f.radius_cap = d.radius_cap;
    f.out = d.output_dir;
    f.format = d.format;
    cmd->add_option("--n", f.n, "complex dimension")->envname("PSILAB_N")->capture_default_str();
    cmd->add_option("--seed", f.seed, "master seed")->envname("PSILAB_SEED")->capture_default_str();
    cmd->add_option("--radius-cap", f.radius_cap, "largest |z| the kernel model must cover")
        ->envname("PSILAB_RADIUS_CAP")
        ->capture_default_str();
    cmd->add_option("--grid", f.grids, "name=v1,v2,... (repeatable)");
    cmd->add_option("--budget", f.budgets, "key=value (repeatable)");
    cmd->add_option("--out", f.out, "output directory")->envname("PSILAB_OUT")->capture_default_str();
    cmd->add_option("--format", f.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->envname("PSILAB_FORMAT")
        ->capture_default_str();
}

// Semicolon-separated assignments from an environment variable.
std::vector<std::string> env_list(const char* name) {
    std::vector<std::string> out;
    const char* v = std::getenv(name);
    if (!v) return out;
    std::string s(v), cur;
    for (char c : s) {
        if (c == ';') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

psilab::RunConfig to_config(const Flags& f) {
    psilab::RunConfig cfg = psilab::default_config();
    cfg.n = f.n;
    cfg.seed = f.seed;
    cfg.radius_cap = f.radius_cap;
    cfg.output_dir = f.out;
    cfg.format = f.format;
    // Environment first, flags second, so flags win.
    for (const auto& g : env_list("PSILAB_GRID")) psilab::apply_grid_arg(cfg, g);
    for (const auto& b : env_list("PSILAB_BUDGET")) psilab::apply_budget_arg(cfg, b);
    for (const auto& g : f.grids) psilab::apply_grid_arg(cfg, g);
    for (const auto& b : f.budgets) psilab::apply_budget_arg(cfg, b);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    const psilab::RunConfig defaults = psilab::default_config();
    CLI::App app{"Numerical checks for the weighted Bergman kernel of exp(-1/(1-|z|^2)) on the unit ball"};
    app.require_subcommand(1);

    Flags vf, tf;
    std::string suite, suite_flag, quantity;
    auto* verify = app.add_subcommand("verify", "run verification suites and write reports");
    verify->add_option("target", suite, "metric | geometry | kernel | estimates | all (default all)");
    verify->add_option("--suite", suite_flag, "same as the positional argument");
    add_common(verify, vf, defaults);

    auto* table = app.add_subcommand("table", "write a CSV data table");
    table->add_option("quantity", quantity, "diag_ratio | offdiag_scatter | volume_scaling | radial_distance")
        ->required();
    add_common(table, tf, defaults);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*verify) {
            if (!suite_flag.empty()) {
                if (!suite.empty() && suite != suite_flag) throw psilab::ConfigError("conflicting suite names");
                suite = suite_flag;
            }
            if (suite.empty()) suite = "all";
            return psilab::cmd_verify(suite, to_config(vf), std::cout);
        }
        return psilab::cmd_table(quantity, to_config(tf), std::cout);
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << '\n';
        return 2;
    }
}

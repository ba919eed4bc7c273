#include "psilab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "psilab/estimates.hpp"
#include "psilab/geometry.hpp"
#include "psilab/kernel.hpp"
#include "psilab/metric.hpp"

namespace psilab {

namespace {

// i / 20 for i = 0..count-1, each correctly rounded (no accumulated drift).
std::vector<double> twentieths(int count) {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(static_cast<double>(i) / 20.0);
    return v;
}

double parse_number(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ConfigError("not a number in " + what + ": '" + s + "'");
    return v;
}

std::pair<std::string, std::string> split_assignment(const std::string& arg, const char* flag) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(std::string(flag) + " expects key=value, got '" + arg + "'");
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::size_t count(const RunConfig& cfg, const std::string& key) {
    return static_cast<std::size_t>(cfg.budgets.at(key));
}

const std::vector<double>& grid(const RunConfig& cfg, const std::string& key) { return cfg.grids.at(key); }

CVec on_axis(std::size_t n, double t) { return t * CVec::unit(n, 0); }

std::string tag(const std::string& name, std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s = name + "[";
    bool first = true;
    for (const auto& [k, v] : kv) {
        s += (first ? "" : ",") + std::string(k) + "=" + format_double(v);
        first = false;
    }
    return s + "]";
}

VerificationReport module_report(const std::string& name, std::size_t n) {
    VerificationReport r;
    r.suite_name = name;
    r.n = n;
    r.pass = true;
    return r;
}

void fold(VerificationReport& into, VerificationReport part, const std::string& name = "") {
    if (!name.empty()) part.suite_name = name;
    if (part.fitted_constants) into.fitted_constants = part.fitted_constants;
    merge_report(into, part);
}

KernelModel kernel_for(const RunConfig& cfg) {
    std::size_t terms = count(cfg, "kernel_terms");
    if (terms == 0) terms = default_kernel_terms(cfg.n);
    return build_kernel_model(cfg.n, terms, 1e-13, cfg.radius_cap, count(cfg, "kernel_terms_limit"));
}

VerificationReport run_metric(const RunConfig& cfg) {
    VerificationReport rep = module_report("metric", cfg.n);
    fold(rep, hessian_algebra_suite(cfg.n, count(cfg, "hessian_samples"), cfg.seed));
    fold(rep, hessian_fd_suite(cfg.n, count(cfg, "fd_points"), cfg.seed));
    return rep;
}

VerificationReport run_geometry(const RunConfig& cfg) {
    const std::size_t n = cfg.n;
    const int budget = static_cast<int>(cfg.budgets.at("bracket_budget"));
    VerificationReport rep = module_report("geometry", n);
    fold(rep, radial_geodesic_suite(n, count(cfg, "radial_points"), budget));
    fold(rep, lipschitz_suite(n, count(cfg, "lipschitz_pairs"), cfg.seed, budget));
    for (double t : grid(cfg, "carleson"))
        for (double r : grid(cfg, "carleson_r")) {
            fold(rep, carleson_box_check(on_axis(n, t), r, count(cfg, "carleson_samples"), cfg.seed),
                 tag("carleson_box", {{"z", t}, {"r", r}}));
            fold(rep, carleson_polycylinder_check(on_axis(n, t), r, count(cfg, "carleson_samples"), cfg.seed),
                 tag("carleson_polycylinder", {{"z", t}, {"r", r}}));
        }
    for (double t : grid(cfg, "inclusion"))
        for (double r : grid(cfg, "inclusion_r"))
            fold(rep,
                 inclusion_check(on_axis(n, t), r, count(cfg, "inclusion_samples"), cfg.seed,
                                 static_cast<int>(cfg.budgets.at("inclusion_budget"))),
                 tag("inclusion", {{"z", t}, {"r", r}}));
    for (double r : grid(cfg, "volume_r"))
        fold(rep, volume_scaling_suite(n, grid(cfg, "volume"), r, count(cfg, "volume_samples"), cfg.seed),
             tag("volume_scaling", {{"r", r}}));
    return rep;
}

VerificationReport run_kernel(const RunConfig& cfg, const KernelModel& model) {
    VerificationReport rep = module_report("kernel", cfg.n);
    VerificationReport build = module_report("kernel_build", cfg.n);
    build.set_value("K_max", static_cast<double>(model.K_max));
    build.set_value("truncation_gap", model.truncation_gap);
    build.set_value("radius_cap", model.radius_cap);
    build.observe(model.truncation_gap);
    build.pass = model.truncation_gap < kTruncationTolerance;
    if (!build.pass) ++build.violations;
    fold(rep, build);
    if (cfg.n == 1)
        fold(rep, reproducing_suite(model));
    else
        rep.add_note("reproducing", "skipped: the tensor-quadrature check is implemented for n = 1");
    fold(rep, diag_suite(model, grid(cfg, "diag")));
    return rep;
}

VerificationReport run_estimates(const RunConfig& cfg, const KernelModel& model) {
    const std::size_t n = cfg.n;
    VerificationReport rep = module_report("estimates", n);
    fold(rep, identity_suite(n, count(cfg, "identity_samples"), cfg.seed));
    for (double r : grid(cfg, "deviation_r")) {
        fold(rep, imp_ineq_suite(n, r, grid(cfg, "deviation"), count(cfg, "deviation_samples"), cfg.seed),
             tag("imp_ineq", {{"r", r}}));
        fold(rep, test_function_suite(n, r, grid(cfg, "deviation"), count(cfg, "deviation_samples"), cfg.seed),
             tag("test_function", {{"r", r}}));
    }
    for (double r : grid(cfg, "smvp_r")) {
        SmvpOptions o;
        o.r = r;
        o.s_values = grid(cfg, "smvp_s");
        o.z_radii = grid(cfg, "smvp");
        o.trials_per_radius = count(cfg, "smvp_trials");
        o.mc_samples = count(cfg, "smvp_mc");
        o.degree = count(cfg, "smvp_degree");
        fold(rep, smvp_suite(n, o, cfg.seed), tag("smvp", {{"r", r}}));
    }
    fold(rep, bump_derivative_check(count(cfg, "bump_grid")));
    const auto& deltas = grid(cfg, "cutoff_delta");
    for (double t : grid(cfg, "cutoff")) {
        std::vector<double> cs;
        for (double d : deltas) {
            VerificationReport c = cutoff_suite(on_axis(n, t), d, count(cfg, "cutoff_samples"), cfg.seed);
            cs.push_back(c.value("C_gradient"));
            fold(rep, std::move(c), tag("cutoff", {{"z", t}, {"delta", d}}));
        }
        // The gradient constant should not depend on delta.
        if (cs.size() >= 2) {
            const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
            const double spread = *lo > 0.0 ? *hi / *lo : INFINITY;
            rep.set_value(tag("cutoff", {{"z", t}}) + ".C_gradient_spread", spread);
            if (!(spread < 4.0)) {
                ++rep.violations;
                rep.pass = false;
            }
        }
    }
    MainTheoremOptions mo;
    mo.pairs = count(cfg, "pairs");
    mo.budget = static_cast<int>(cfg.budgets.at("bracket_budget"));
    fold(rep, main_theorem_suite(model, mo, cfg.seed));
    return rep;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
    if (!f.flush()) throw ConfigError("cannot write " + path.string());
}

std::filesystem::path prepare_output_dir(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output directory unusable: " + cfg.output_dir);
    return dir;
}

bool within_inconclusive_budget(const VerificationReport& r, const RunConfig& cfg) {
    if (r.samples == 0) return r.inconclusive == 0;
    return static_cast<double>(r.inconclusive) <= cfg.budgets.at("inconclusive_fraction") * static_cast<double>(r.samples);
}

std::string format_cvec(const CVec& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) s += ';';
        s += format_double(v[j].real());
        s += std::signbit(v[j].imag()) ? "-" : "+";
        s += format_double(std::abs(v[j].imag())) + "i";
    }
    return s;
}

void csv_row(std::ostringstream& os, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) os << ',';
        os << csv_field(f);
        first = false;
    }
    os << "\r\n";
}

}  // namespace

std::map<std::string, std::vector<double>> default_grids() {
    return {
        {"carleson", {0.0, 0.5, 0.9}},
        {"carleson_r", {0.2}},
        {"cutoff", {0.0, 0.5, 0.9}},
        {"cutoff_delta", {0.04, 0.02}},
        {"deviation", {0.0, 0.5, 0.9, 0.98}},
        {"deviation_r", {0.05}},
        {"diag", twentieths(20)},
        {"inclusion", {0.0, 0.5, 0.9}},
        {"inclusion_r", {0.02, 0.05, 0.08}},
        {"radial", twentieths(20)},
        {"smvp", {0.5, 0.6, 0.7, 0.8, 0.9}},
        {"smvp_r", {0.05}},
        {"smvp_s", {0.0, 1.0, -1.0}},
        {"volume", {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95}},
        {"volume_r", {0.05}},
    };
}

std::map<std::string, double> default_budgets() {
    return {
        {"bracket_budget", 50},     {"bump_grid", 10000},        {"carleson_samples", 10000},
        {"cutoff_samples", 2000},   {"deviation_samples", 10000}, {"fd_points", 100},
        {"hessian_samples", 1000},  {"identity_samples", 10000},  {"inclusion_budget", 200},
        {"inclusion_samples", 10000}, {"inconclusive_fraction", 0.01}, {"kernel_terms", 0},
        {"kernel_terms_limit", static_cast<double>(kKernelHardLimit)}, {"lipschitz_pairs", 1000},
        {"pairs", 300},             {"radial_points", 50},        {"smvp_degree", 6},
        {"smvp_mc", 100000},        {"smvp_trials", 2},           {"volume_samples", 100000},
    };
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.grids = default_grids();
    cfg.budgets = default_budgets();
    return cfg;
}

void apply_grid_arg(RunConfig& cfg, const std::string& arg) {
    const auto [name, list] = split_assignment(arg, "--grid");
    if (!cfg.grids.count(name)) throw ConfigError("unknown grid '" + name + "'");
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        values.push_back(parse_number(item, "grid " + name));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    cfg.grids[name] = std::move(values);
}

void apply_budget_arg(RunConfig& cfg, const std::string& arg) {
    const auto [key, value] = split_assignment(arg, "--budget");
    if (!cfg.budgets.count(key)) throw ConfigError("unknown budget key '" + key + "'");
    const double v = parse_number(value, "budget " + key);
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("budget " + key + " must be finite and >= 0");
    cfg.budgets[key] = v;
}

void validate(const RunConfig& cfg) {
    if (cfg.n < 1 || cfg.n > kMaxDim) throw ConfigError("--n must be between 1 and " + std::to_string(kMaxDim));
    if (!(cfg.radius_cap > 0.0 && cfg.radius_cap < 1.0)) throw ConfigError("--radius-cap must lie in (0, 1)");
    if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("--format must be json or csv");
    const auto defaults = default_grids();
    for (const auto& [name, unused] : defaults) {
        const auto it = cfg.grids.find(name);
        if (it == cfg.grids.end() || it->second.empty()) throw ConfigError("grid '" + name + "' is empty");
    }
    const auto budgets = default_budgets();
    for (const auto& [key, unused] : budgets)
        if (!cfg.budgets.count(key)) throw ConfigError("budget '" + key + "' missing");
    for (const auto& [name, values] : cfg.grids) {
        const bool is_radius_list = name.ends_with("_r") || name == "cutoff_delta";
        for (double v : values) {
            if (name == "smvp_s") continue;
            if (is_radius_list) {
                if (!(v > 0.0 && v < 1.0)) throw ConfigError("grid '" + name + "' values must lie in (0, 1)");
            } else if (!(v >= 0.0 && v < 1.0)) {
                throw ConfigError("grid '" + name + "' values must lie in [0, 1)");
            }
        }
    }
    for (double v : cfg.grids.at("diag"))
        if (v > cfg.radius_cap) throw ConfigError("grid 'diag' value " + format_double(v) + " exceeds --radius-cap");
}

std::string config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    j["radius_cap"] = cfg.radius_cap;
    auto& g = j["grids"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.grids) g[k] = v;
    auto& b = j["budgets"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.budgets) b[k] = v;
    j["output_dir"] = cfg.output_dir;
    j["format"] = cfg.format;
    return j.dump();
}

std::vector<std::pair<std::string, std::string>> config_rows(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("n", std::to_string(cfg.n));
    rows.emplace_back("seed", std::to_string(cfg.seed));
    rows.emplace_back("radius_cap", format_double(cfg.radius_cap));
    for (const auto& [k, v] : cfg.grids) {
        std::string joined;
        for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? " " : "") + format_double(v[i]);
        rows.emplace_back("grid." + k, joined);
    }
    for (const auto& [k, v] : cfg.budgets) rows.emplace_back("budget." + k, format_double(v));
    rows.emplace_back("output_dir", cfg.output_dir);
    rows.emplace_back("format", cfg.format);
    return rows;
}

VerificationReport run_module(const std::string& module, const RunConfig& cfg) {
    validate(cfg);
    if (module == "metric") return run_metric(cfg);
    if (module == "geometry") return run_geometry(cfg);
    if (module == "kernel") return run_kernel(cfg, kernel_for(cfg));
    if (module == "estimates") return run_estimates(cfg, kernel_for(cfg));
    throw ConfigError("unknown suite '" + module + "'");
}

std::string summary_line(const VerificationReport& r) {
    std::ostringstream os;
    os << r.suite_name << " n=" << r.n << ' ' << (r.pass ? "PASS" : "FAIL") << " samples=" << r.samples
       << " violations=" << r.violations << " inconclusive=" << r.inconclusive << " extrema=["
       << format_double(r.extrema_min) << ", " << format_double(r.extrema_max) << "]";
    if (r.fitted_constants)
        os << " C_hat=" << format_double(r.fitted_constants->C)
           << " epsilon_hat=" << format_double(r.fitted_constants->epsilon);
    return os.str();
}

int cmd_verify(const std::string& suite, const RunConfig& cfg, std::ostream& console) {
    try {
        validate(cfg);
        std::vector<std::string> modules;
        if (suite == "all")
            modules = {"metric", "geometry", "kernel", "estimates"};
        else if (suite == "metric" || suite == "geometry" || suite == "kernel" || suite == "estimates")
            modules = {suite};
        else
            throw ConfigError("unknown suite '" + suite + "'");
        const auto dir = prepare_output_dir(cfg);

        std::optional<KernelModel> model;
        bool all_pass = true;
        for (const auto& m : modules) {
            VerificationReport rep;
            if (m == "kernel" || m == "estimates") {
                if (!model) model = kernel_for(cfg);
                rep = m == "kernel" ? run_kernel(cfg, *model) : run_estimates(cfg, *model);
            } else {
                rep = run_module(m, cfg);
            }
            if (!within_inconclusive_budget(rep, cfg)) {
                rep.pass = false;
                rep.add_note("inconclusive_budget", "exceeded");
            }
            // A report never claims pass alongside violations.
            if (rep.violations > 0) rep.pass = false;
            const std::string text = cfg.format == "json" ? report_to_json(rep, config_to_json(cfg))
                                                          : report_to_csv(rep, config_rows(cfg));
            write_file(dir / (m + "." + cfg.format), text);
            console << summary_line(rep) << '\n';
            all_pass = all_pass && rep.pass;
        }
        return all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        console << "error: " << e.what() << '\n';
        return 2;
    }
}

std::string make_table(const std::string& quantity, const RunConfig& cfg) {
    validate(cfg);
    std::ostringstream os;
    if (quantity == "radial_distance") {
        csv_row(os, {"t", "radial_distance", "lower_bound", "upper_bound"});
        for (double t : grid(cfg, "radial"))
            csv_row(os, {format_double(t), format_double(radial_distance(t)), format_double(radial_distance_lower(t)),
                         format_double(radial_distance_upper(t))});
    } else if (quantity == "diag_ratio") {
        const KernelModel m = kernel_for(cfg);
        csv_row(os, {"t", "diag_ratio", "laplacian_ratio"});
        for (double t : grid(cfg, "diag")) {
            const CVec z = on_axis(cfg.n, t);
            csv_row(os, {format_double(t), format_double(diag_ratio(m, z)), format_double(laplacian_ratio(m, z))});
        }
    } else if (quantity == "offdiag_scatter") {
        const KernelModel m = kernel_for(cfg);
        const auto pairs = sample_decay_pairs(m, count(cfg, "pairs"), cfg.seed, 0.9,
                                              static_cast<int>(cfg.budgets.at("bracket_budget")));
        csv_row(os, {"z", "w", "d_lower", "d_upper", "y"});
        for (const auto& p : pairs)
            csv_row(os, {format_cvec(p.z), format_cvec(p.w), format_double(p.d_lower), format_double(p.d_upper),
                         format_double(p.y)});
    } else if (quantity == "volume_scaling") {
        const double r = grid(cfg, "volume_r").front();
        const auto rows = volume_scaling_rows(cfg.n, grid(cfg, "volume"), r, count(cfg, "volume_samples"), cfg.seed);
        csv_row(os, {"t", "log_weight", "vol_polycylinder", "stderr_polycylinder", "vol_ball", "stderr_ball",
                     "ball_unknown_fraction"});
        std::vector<double> x, lp, lb;
        for (const auto& row : rows) {
            csv_row(os, {format_double(row.t), format_double(row.log_weight), format_double(row.poly.estimate),
                         format_double(row.poly.stderr_), format_double(row.ball.estimate),
                         format_double(row.ball.stderr_), format_double(row.ball.unknown_fraction)});
            x.push_back(row.log_weight);
            lp.push_back(std::log(row.poly.estimate));
            lb.push_back(std::log(row.ball.estimate));
        }
        // Footer: regression slopes of log volume on log(1 - |z|^2).
        csv_row(os, {"slope", "", format_double(ls_slope(x, lp)), "", format_double(ls_slope(x, lb)), "", ""});
    } else {
        throw ConfigError("unknown table quantity '" + quantity + "'");
    }
    return os.str();
}

int cmd_table(const std::string& quantity, const RunConfig& cfg, std::ostream& console) {
    try {
        validate(cfg);
        bool known = false;
        for (const auto& q : kTableQuantities) known = known || q == quantity;
        if (!known) throw ConfigError("unknown table quantity '" + quantity + "'");
        const auto dir = prepare_output_dir(cfg);
        const std::string text = make_table(quantity, cfg);
        const auto path = dir / (quantity + ".csv");
        write_file(path, text);
        console << "table " << quantity << " -> " << path.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        console << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace psilab

// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "psilab/estimates.hpp"
#include "psilab/geometry.hpp"
#include "psilab/kernel.hpp"
#include "psilab/metric.hpp"

using namespace psilab;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
    bool pass = true;
    std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += what + (ok ? "" : " [FAILED]");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<double> grid_to(double last, int steps) {
    std::vector<double> g;
    for (int i = 0; i <= steps; ++i) g.push_back(last * i / steps);
    return g;
}

const KernelModel& model(std::size_t n) {
    static std::map<std::size_t, KernelModel> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_kernel_model(n)).first;
    return it->second;
}

Outcome hessian_algebra() {
    Outcome o;
    // 1000 points split over n = 1, 2, 3.
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto r = hessian_algebra_suite(n, n == 1 ? 334 : 333, kSeed, 0.95);
        double worst = 0.0;
        for (const auto& [k, v] : r.values)
            if (k != "pass") worst = std::max(worst, v);
        note(o, r.pass && r.violations == 0 && worst <= 1e-10, "n=" + std::to_string(n) + " max residual " + fmt(worst));
    }
    return o;
}

Outcome finite_differences() {
    Outcome o;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto r = hessian_fd_suite(n, 100, kSeed);
        const double e = r.value("max_rel_error");
        note(o, r.pass && e <= 1e-5, "n=" + std::to_string(n) + " max rel error " + fmt(e));
    }
    return o;
}

Outcome radial_geodesic() {
    Outcome o;
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto r = radial_geodesic_suite(n, 50, 50);
        const double e = r.value("optimizer_max_rel_error");
        note(o, r.pass && e <= 1e-3 && r.value("sandwich_min_slack") >= 0.0,
             "n=" + std::to_string(n) + " optimizer rel error " + fmt(e));
    }
    return o;
}

Outcome lipschitz() {
    Outcome o;
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto r = lipschitz_suite(n, 1000, kSeed, 50, 0.95);
        note(o, r.pass && r.violations == 0 && r.samples == 1000,
             "n=" + std::to_string(n) + " violations " + std::to_string(r.violations) + ", max gap/(2 upper) " +
                 fmt(r.value("max_gap_over_twice_upper")));
    }
    return o;
}

Outcome inclusion() {
    Outcome o;
    std::size_t cells = 0, violations = 0;
    double worst_inconclusive = 0.0;
    for (std::size_t n = 1; n <= 2; ++n)
        for (double t : {0.0, 0.5, 0.9})
            for (double r : {0.02, 0.05, 0.08}) {
                CVec z(n);
                z[0] = t;
                const auto rep = inclusion_check(z, r, 10000, kSeed + cells, 200);
                ++cells;
                violations += rep.violations;
                const double inc = rep.value("inconclusive_fraction");
                worst_inconclusive = std::max(worst_inconclusive, inc);
                o.pass = o.pass && rep.violations == 0 && inc <= 0.01 && rep.samples == 2 * 10000;  // both directions
            }
    o.detail = std::to_string(cells) + " cells, violations " + std::to_string(violations) +
               ", max inconclusive " + fmt(worst_inconclusive);
    return o;
}

Outcome volume_scaling() {
    Outcome o;
    const std::vector<double> grid{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto r = volume_scaling_suite(n, grid, 0.05, 100000, kSeed);
        const double slope = r.value("slope_polycylinder");
        const double ratio = r.value("ratio_max_over_min");
        const double target = 2.0 * n + 1.0;
        note(o, std::abs(slope - target) <= 0.02 * target && ratio < 2.0,
             "n=" + std::to_string(n) + " slope " + fmt(slope) + ", B/D spread " + fmt(ratio));
    }
    return o;
}

Outcome reproducing() {
    Outcome o;
    const auto r = reproducing_suite(model(1));
    const double e = r.value("max_abs_error"), origin = r.value("origin_rel_error");
    note(o, r.pass && e <= 1e-6 && origin <= 1e-8, "max abs error " + fmt(e) + ", K(0,0) rel error " + fmt(origin));
    return o;
}

Outcome diagonal() {
    Outcome o;
    const std::vector<double> grid = grid_to(0.95, 19);
    for (std::size_t n = 1; n <= 2; ++n) {
        const auto r = diag_suite(model(n), grid);
        bool finite = true;
        for (double v : r.series_of("diag_ratio")) finite = finite && std::isfinite(v) && v > 0.0;
        std::string d = "n=" + std::to_string(n) + " truncation change " + fmt(r.value("truncation_change"));
        bool ok = r.pass && finite && r.value("truncation_change") < 1e-6;
        if (n == 2) {
            d += ", laplacian tail/max " + fmt(r.value("laplacian_tail_over_max")) + ", diag max/min " +
                 fmt(r.value("diag_ratio_max_over_min"));
            ok = ok && r.value("laplacian_tail_over_max") < 0.25 && r.value("diag_ratio_max_over_min") < 10.0;
        }
        note(o, ok, d);
    }
    return o;
}

Outcome main_theorem() {
    Outcome o;
    for (std::size_t n = 1; n <= 2; ++n) {
        MainTheoremOptions opts;
        opts.pairs = 300;
        const auto r = main_theorem_suite(model(n), opts, kSeed);
        const double eps = r.fitted_constants ? r.fitted_constants->epsilon : 0.0;
        const bool ok = r.pass && eps > 0.0 && eps < std::sqrt(2.0) && r.value("envelope_violations") == 0.0 &&
                        r.value("cauchy_schwarz_violations") == 0.0;
        note(o, ok, "n=" + std::to_string(n) + " epsilon_hat " + fmt(eps) + ", C_hat " +
                        fmt(r.fitted_constants ? r.fitted_constants->C : 0.0));
    }
    return o;
}

Outcome identities() {
    Outcome o;
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto r = identity_suite(n, 10000, kSeed, 0.95);
        const double a = r.value("automorphism_max_rel_residual"), d = r.value("difference_max_rel_residual");
        note(o, r.pass && a <= 1e-12 && d <= 1e-10,
             "n=" + std::to_string(n) + " automorphism " + fmt(a) + ", difference " + fmt(d));
    }
    return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        out[e.path().filename().string()] = os.str();
    }
    return out;
}

Outcome determinism() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "psilab-acceptance-determinism";
    fs::remove_all(dir);
    const std::string cmd = std::string(PSILAB_EXE) + " verify all --n 1 --seed 7 --out " + dir.string() + " > " +
                            (fs::temp_directory_path() / "psilab-acceptance.log").string() + " 2>&1";
    const int first = std::system(cmd.c_str());
    const auto a = snapshot(dir);
    const int second = std::system(cmd.c_str());
    const auto b = snapshot(dir);
    note(o, WIFEXITED(first) && WEXITSTATUS(first) == 0 && WIFEXITED(second) && WEXITSTATUS(second) == 0,
         "exit codes " + std::to_string(WEXITSTATUS(first)) + "/" + std::to_string(WEXITSTATUS(second)));
    note(o, a.size() == 4 && a == b, std::to_string(a.size()) + " reports, byte-identical " + (a == b ? "yes" : "no"));
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"hessian algebra", 5, hessian_algebra},
        {"finite-difference hessian", 5, finite_differences},
        {"radial geodesic", 60, radial_geodesic},
        {"exhaustion lipschitz bound", 600, lipschitz},
        {"polycylinder / metric ball inclusion", 1800, inclusion},
        {"volume scaling", 600, volume_scaling},
        {"kernel reproducing property", 300, reproducing},
        {"diagonal bound", 300, diagonal},
        {"off-diagonal decay", 1800, main_theorem},
        {"identities", 10, identities},
        {"determinism", 1800, determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // The kernel model is shared; its one-off build is charged to the first user.
        const bool in_time = secs <= c.limit_s;
        const bool ok = o.pass && in_time;
        if (!ok) ++failed;
        std::printf("criterion %2zu %-38s %s  %s  [%.2f s, limit %.0f s%s]\n", i + 1, c.name, ok ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

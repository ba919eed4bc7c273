#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psilab/geometry.hpp"
#include "psilab/parallel.hpp"

namespace psilab {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope needs two equal-length samples");
    const double N = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= N;
    my /= N;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("ls_slope: x has no spread");
    return sxy / sxx;
}

VerificationReport radial_geodesic_suite(std::size_t n, std::size_t grid_points, int budget) {
    struct Row {
        double t = 0, d = 0, lo = 0, hi = 0, upper = 0;
    };
    const auto rows = parallel_map<Row>(grid_points, [&](std::size_t k) {
        Row r;
        r.t = 0.95 * static_cast<double>(k + 1) / static_cast<double>(grid_points);
        r.d = radial_distance(r.t);
        r.lo = radial_distance_lower(r.t);
        r.hi = radial_distance_upper(r.t);
        r.upper = distance_bracket(CVec::zero(n), r.t * CVec::unit(n, 0), budget).upper;
        return r;
    });
    VerificationReport rep;
    rep.suite_name = "radial_geodesic";
    rep.n = n;
    rep.samples = grid_points;
    rep.set_param("budget", budget);
    std::vector<double> ts, ds, rel;
    double worst = 0.0, sandwich_slack = INFINITY;
    for (const auto& r : rows) {
        const double e = std::abs(r.upper - r.d) / r.d;
        ts.push_back(r.t);
        ds.push_back(r.d);
        rel.push_back(e);
        worst = std::max(worst, e);
        sandwich_slack = std::min({sandwich_slack, r.d - r.lo, r.hi - r.d});
        rep.observe(r.d);
        if (!(r.lo <= r.d && r.d <= r.hi) || !(e <= 1e-3)) ++rep.violations;
    }
    for (std::size_t i = 1; i < ds.size(); ++i)
        if (!(ds[i] > ds[i - 1])) ++rep.violations;
    rep.set_series("t", ts);
    rep.set_series("radial_distance", ds);
    rep.set_series("optimizer_rel_error", rel);
    rep.set_value("optimizer_max_rel_error", worst);
    rep.set_value("sandwich_min_slack", sandwich_slack);
    rep.pass = rep.violations == 0;
    return rep;
}

VerificationReport lipschitz_suite(std::size_t n, std::size_t pairs, std::uint64_t seed, int budget,
                                   double max_radius) {
    struct Row {
        double gap = 0, upper = 0;
    };
    const auto rows = parallel_map<Row>(pairs, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("lipschitz"), i);
        const CVec z = max_radius * uniform_in_unit_ball(rng, n);
        const CVec w = max_radius * uniform_in_unit_ball(rng, n);
        return Row{std::abs(std::log(1.0 - w.norm_sq()) - std::log(1.0 - z.norm_sq())),
                   distance_bracket(z, w, budget).upper};
    });
    VerificationReport rep;
    rep.suite_name = "lipschitz";
    rep.n = n;
    rep.samples = pairs;
    rep.set_param("budget", budget);
    rep.set_param("max_radius", max_radius);
    rep.set_param("seed", static_cast<double>(seed));
    double worst = 0.0;
    for (const auto& r : rows) {
        const double ratio = r.upper > 0.0 ? r.gap / (2.0 * r.upper) : 0.0;
        worst = std::max(worst, ratio);
        rep.observe(ratio);
        if (!(r.gap <= 2.0 * r.upper)) ++rep.violations;
    }
    rep.set_value("max_gap_over_twice_upper", worst);
    rep.pass = rep.violations == 0;
    return rep;
}

std::vector<VolumeScalingRow> volume_scaling_rows(std::size_t n, const std::vector<double>& grid, double r,
                                                  std::size_t samples, std::uint64_t seed, int budget) {
    std::vector<VolumeScalingRow> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CVec z = grid[i] * CVec::unit(n, 0);
        VolumeScalingRow row;
        row.t = grid[i];
        row.log_weight = std::log(1.0 - grid[i] * grid[i]);
        row.poly = volume_estimate(PolyCylinder{Point(z), r}, samples, seed + 2 * i);
        row.ball = volume_estimate(GeodesicBall{Point(z), r}, samples, seed + 2 * i + 1, budget);
        rows.push_back(row);
    }
    return rows;
}

VerificationReport volume_scaling_suite(std::size_t n, const std::vector<double>& grid, double r,
                                        std::size_t samples, std::uint64_t seed, int budget) {
    const auto rows = volume_scaling_rows(n, grid, r, samples, seed, budget);
    VerificationReport rep;
    rep.suite_name = "volume_scaling";
    rep.n = n;
    rep.samples = samples * grid.size() * 2;
    rep.set_param("r", r);
    rep.set_param("samples_per_region", static_cast<double>(samples));
    rep.set_param("budget", budget);
    rep.set_param("seed", static_cast<double>(seed));
    std::vector<double> x, ly_poly, ly_ball, ratio;
    double unknown = 0.0;
    for (const auto& row : rows) {
        x.push_back(row.log_weight);
        ly_poly.push_back(std::log(row.poly.estimate));
        ly_ball.push_back(std::log(row.ball.estimate));
        ratio.push_back(row.ball.estimate / row.poly.estimate);
        unknown = std::max(unknown, row.ball.unknown_fraction);
        rep.observe(ratio.back());
    }
    const double expected = static_cast<double>(2 * n + 1);
    const double slope = ls_slope(x, ly_poly);
    const double ball_slope = ls_slope(x, ly_ball);
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    rep.set_series("z_grid", grid);
    rep.set_series("log_vol_polycylinder", ly_poly);
    rep.set_series("log_vol_ball", ly_ball);
    rep.set_series("ball_over_polycylinder", ratio);
    rep.set_value("slope_polycylinder", slope);
    rep.set_value("slope_ball", ball_slope);
    rep.set_value("slope_rel_error", std::abs(slope - expected) / expected);
    rep.set_value("ratio_max_over_min", *hi / *lo);
    rep.set_value("ball_max_unknown_fraction", unknown);
    if (!(std::abs(slope - expected) <= 0.02 * expected)) ++rep.violations;
    if (!(*hi / *lo < 2.0)) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace psilab

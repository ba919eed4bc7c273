#include "psilab/estimates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "psilab/geometry.hpp"
#include "psilab/metric.hpp"
#include "psilab/parallel.hpp"
#include "psilab/rng.hpp"

namespace psilab {

// ---------------------------------------------------------------- automorphism

CVec automorphism(const CVec& z, const CVec& w) {
    if (z.size() != w.size()) throw std::invalid_argument("automorphism: dimension mismatch");
    const double m = 1.0 - z.norm_sq();
    const CVec num = z - proj_P(z, w) - std::sqrt(m) * proj_Q(z, w);
    return (1.0 / (1.0 - inner(w, z))) * num;
}

double automorphism_identity_residual(const CVec& z, const CVec& w) {
    const double lhs = 1.0 - automorphism(z, w).norm_sq();
    const double rhs = (1.0 - z.norm_sq()) * (1.0 - w.norm_sq()) / std::norm(1.0 - inner(w, z));
    return std::abs(lhs - rhs) / rhs;
}

double deviation(const CVec& z, const CVec& w) {
    return 2.0 * (1.0 / (1.0 - inner(w, z))).real() - psi(z) - psi(w);
}

double eq_difference_residual(const CVec& z, const CVec& w) {
    const double lhs = deviation(z, w);
    const double den = std::norm(1.0 - inner(w, z));
    const double rhs = (z - w).norm_sq() / den - automorphism(z, w).norm_sq() * (psi(z) + psi(w));
    return std::abs(lhs - rhs);
}

VerificationReport identity_suite(std::size_t n, std::size_t samples, std::uint64_t seed, double max_radius) {
    struct Row {
        double aut = 0.0, diff = 0.0, invol = 0.0;
    };
    const auto rows = parallel_map<Row>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("identities"), i);
        const CVec z = max_radius * uniform_in_unit_ball(rng, n);
        const CVec w = max_radius * uniform_in_unit_ball(rng, n);
        Row r;
        r.aut = automorphism_identity_residual(z, w);
        r.diff = eq_difference_residual(z, w) / (1.0 + std::abs(deviation(z, w)));
        r.invol = (automorphism(z, automorphism(z, w)) - w).norm();
        return r;
    });
    VerificationReport rep;
    rep.suite_name = "identities";
    rep.n = n;
    rep.samples = samples;
    rep.set_param("max_radius", max_radius);
    rep.set_param("seed", static_cast<double>(seed));
    double aut = 0.0, diff = 0.0, invol = 0.0;
    for (const auto& r : rows) {
        aut = std::max(aut, r.aut);
        diff = std::max(diff, r.diff);
        invol = std::max(invol, r.invol);
        rep.observe(r.aut);
        if (!(r.aut <= 1e-12) || !(r.diff <= 1e-10)) ++rep.violations;
    }
    rep.set_value("automorphism_max_rel_residual", aut);
    rep.set_value("difference_max_rel_residual", diff);
    rep.set_value("involution_max_residual", invol);
    rep.pass = rep.violations == 0;
    return rep;
}

// ---------------------------------------------------------------- deviation scans

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman needs two equal-length samples");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double N = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / N;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / N;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

namespace {

struct DeviationScan {
    std::vector<double> max_abs;  // per grid point
    std::vector<double> min_signed, max_signed;
    double all_min_abs = std::numeric_limits<double>::infinity();
    double all_max_abs = 0.0;
};

DeviationScan scan_deviation(std::size_t n, double r, const std::vector<double>& grid,
                             std::size_t per_z, std::uint64_t seed) {
    if (!(r > 0.0 && r < 0.125)) throw std::invalid_argument("deviation suites need 0 < r < 1/8");
    if (grid.empty() || per_z == 0) throw std::invalid_argument("deviation suites need a grid and samples");
    for (double t : grid)
        if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("grid values must lie in [0, 1)");
    const auto g = parallel_map<double>(grid.size() * per_z, [&](std::size_t k) {
        const std::size_t gi = k / per_z;
        CVec z(n);
        z[0] = grid[gi];
        CounterRng rng(seed, stream_id("deviation-scan"), k);
        return deviation(z, sample_polycylinder({z, r}, rng));
    });
    DeviationScan s;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double mx = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < per_z; ++i) {
            const double v = g[gi * per_z + i];
            mx = std::max(mx, std::abs(v));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            s.all_min_abs = std::min(s.all_min_abs, std::abs(v));
        }
        s.max_abs.push_back(mx);
        s.min_signed.push_back(lo);
        s.max_signed.push_back(hi);
        s.all_max_abs = std::max(s.all_max_abs, mx);
    }
    return s;
}

VerificationReport deviation_report(const char* name, std::size_t n, double r, const std::vector<double>& grid,
                                    std::size_t per_z, std::uint64_t seed, const DeviationScan& s) {
    VerificationReport rep;
    rep.suite_name = name;
    rep.n = n;
    rep.samples = grid.size() * per_z;
    rep.set_param("r", r);
    rep.set_param("samples_per_z", static_cast<double>(per_z));
    rep.set_param("seed", static_cast<double>(seed));
    rep.set_series("z_grid", grid);
    rep.set_series("max_abs_deviation", s.max_abs);
    rep.observe(s.all_min_abs);
    rep.observe(s.all_max_abs);
    const auto [lo, hi] = std::minmax_element(s.max_abs.begin(), s.max_abs.end());
    const double spread = *hi / *lo;
    rep.set_value("max_over_min_across_grid", spread);
    rep.set_value("spearman_max_vs_abs_z", grid.size() >= 2 ? spearman(grid, s.max_abs) : 0.0);
    const bool ok = std::isfinite(*hi) && *lo > 0.0 && spread < 3.0;
    if (!ok) ++rep.violations;
    rep.pass = ok;
    return rep;
}

}  // namespace

VerificationReport imp_ineq_suite(std::size_t n, double r, const std::vector<double>& z_grid,
                                  std::size_t samples_per_z, std::uint64_t seed) {
    const DeviationScan s = scan_deviation(n, r, z_grid, samples_per_z, seed);
    return deviation_report("imp_ineq", n, r, z_grid, samples_per_z, seed, s);
}

VerificationReport test_function_suite(std::size_t n, double r, const std::vector<double>& z_grid,
                                       std::size_t samples_per_z, std::uint64_t seed) {
    const DeviationScan s = scan_deviation(n, r, z_grid, samples_per_z, seed);
    VerificationReport rep = deviation_report("test_function", n, r, z_grid, samples_per_z, seed, s);
    rep.set_series("min_log_F_weight", s.min_signed);
    rep.set_series("max_log_F_weight", s.max_signed);
    rep.set_value("C_r", s.all_max_abs);
    return rep;
}

// ---------------------------------------------------------------- sub-mean-value

std::vector<std::vector<unsigned>> polynomial_terms(std::size_t n, std::size_t d) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> e(n, 0);
    for (unsigned deg = 0; deg <= d; ++deg) {
        // All exponent vectors of total degree deg, lexicographically descending.
        auto rec = [&](auto&& self, std::size_t pos, unsigned left) -> void {
            if (pos + 1 == n) {
                e[pos] = left;
                out.push_back(e);
                return;
            }
            for (unsigned k = left + 1; k-- > 0;) {
                e[pos] = k;
                self(self, pos + 1, left - k);
            }
        };
        rec(rec, 0, deg);
    }
    return out;
}

namespace {

cplx eval_poly(const std::vector<std::vector<unsigned>>& terms, const std::vector<cplx>& coeffs, const CVec& w,
               std::size_t degree) {
    const std::size_t n = w.size();
    std::array<std::array<cplx, 16>, kMaxDim> pw{};
    for (std::size_t j = 0; j < n; ++j) {
        pw[j][0] = 1.0;
        for (std::size_t k = 1; k <= degree; ++k) pw[j][k] = pw[j][k - 1] * w[j];
    }
    cplx acc = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        cplx mono = coeffs[t];
        for (std::size_t j = 0; j < n; ++j) mono *= pw[j][terms[t][j]];
        acc += mono;
    }
    return acc;
}

struct MembershipCloud {
    std::vector<CVec> points;
    std::vector<Membership> state;
    double box_volume = 0.0;
};

// Uniform samples of the bounding box of D(z, 2r) with certified membership in B(z, r).
MembershipCloud membership_cloud(const CVec& z, double r, std::size_t samples, std::uint64_t seed,
                                 std::uint64_t tag, int budget) {
    const std::size_t n = z.size();
    const double t = z.norm();
    const double m = 1.0 - z.norm_sq();
    const bool origin = t == 0.0;
    const double rr = origin ? 2.0 * r : 2.0 * r * m * std::sqrt(m);
    const double rt = origin ? 2.0 * r : 2.0 * r * m;
    const CMat back = origin ? CMat::identity(n) : unitary_to_axis(z).adjoint();
    MembershipCloud c;
    c.box_volume = std::pow(2.0 * rr, 2.0) * std::pow(2.0 * rt, static_cast<double>(2 * n - 2));
    c.points.resize(samples);
    c.state = parallel_map<Membership>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("smvp-cloud") + tag, i);
        CVec u(n);
        u[0] = {(origin ? 0.0 : t) + rng.uniform(-rr, rr), rng.uniform(-rr, rr)};
        for (std::size_t j = 1; j < n; ++j) u[j] = {rng.uniform(-rt, rt), rng.uniform(-rt, rt)};
        const CVec w = back * u;
        c.points[i] = w;
        if (!(w.norm() <= kBoundaryGuard)) return Membership::out;
        return in_ball_certified({z, r}, w, budget);
    });
    return c;
}

SmvpValue smvp_from_cloud(const MembershipCloud& c, const CVec& z, double s,
                          const std::vector<std::vector<unsigned>>& terms, const std::vector<cplx>& coeffs,
                          std::size_t degree) {
    const std::size_t n = z.size();
    const double N = static_cast<double>(c.points.size());
    const double psi_z = psi(z);
    double sum_in = 0.0, sum_unk = 0.0, sum_mid = 0.0, sum_mid_sq = 0.0, unknown = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        if (c.state[i] == Membership::out) continue;
        const CVec& w = c.points[i];
        const double v = std::norm(eval_poly(terms, coeffs, w, degree)) * std::exp(-s * (psi(w) - psi_z));
        double wgt = 1.0;
        if (c.state[i] == Membership::in) {
            sum_in += v;
        } else {
            sum_unk += v;
            unknown += 1.0;
            wgt = 0.5;
        }
        sum_mid += wgt * v;
        sum_mid_sq += wgt * wgt * v * v;
    }
    const double m = 1.0 - z.norm_sq();
    const double num = std::norm(eval_poly(terms, coeffs, z, degree)) * std::pow(m, static_cast<double>(2 * n + 1));
    SmvpValue out;
    const double mean = sum_mid / N;
    out.integral = c.box_volume * mean;
    out.integral_stderr = c.box_volume * std::sqrt(std::max(0.0, sum_mid_sq / N - mean * mean) / N);
    out.ratio = num / out.integral;
    out.ratio_upper = num / (c.box_volume * sum_in / N);
    out.ratio_lower = num / (c.box_volume * (sum_in + sum_unk) / N);
    out.unknown_fraction = unknown / N;
    return out;
}

}  // namespace

SmvpValue smvp_ratio(const CVec& z, double r, double s, const std::vector<cplx>& coeffs, std::size_t coeff_degree,
                     std::size_t mc_samples, std::uint64_t seed, int budget) {
    check_boundary(z);
    if (coeff_degree > 15) throw std::invalid_argument("polynomial degree above 15");
    const auto terms = polynomial_terms(z.size(), coeff_degree);
    if (coeffs.size() != terms.size()) throw std::invalid_argument("coefficient count does not match the degree");
    const MembershipCloud cloud = membership_cloud(z, r, mc_samples, seed, 0, budget);
    return smvp_from_cloud(cloud, z, s, terms, coeffs, coeff_degree);
}

VerificationReport smvp_suite(std::size_t n, const SmvpOptions& o, std::uint64_t seed) {
    if (!(o.r > 0.0 && o.r < 1.0 / 12.0)) throw std::invalid_argument("smvp_suite needs 0 < r < 1/12");
    if (o.z_radii.empty() || o.trials_per_radius == 0 || o.s_values.empty())
        throw std::invalid_argument("smvp_suite needs radii, trials and weights");
    if (o.degree > 15) throw std::invalid_argument("polynomial degree above 15");
    const auto terms = polynomial_terms(n, o.degree);
    VerificationReport rep;
    rep.suite_name = "smvp";
    rep.n = n;
    rep.set_param("r", o.r);
    rep.set_param("mc_samples", static_cast<double>(o.mc_samples));
    rep.set_param("trials_per_radius", static_cast<double>(o.trials_per_radius));
    rep.set_param("degree", static_cast<double>(o.degree));
    rep.set_param("budget", o.budget);
    rep.set_param("seed", static_cast<double>(seed));
    rep.set_series("z_radii", o.z_radii);
    rep.set_series("s_values", o.s_values);

    const double smallest = *std::min_element(o.z_radii.begin(), o.z_radii.end());
    std::vector<double> max_base(o.s_values.size(), 0.0), max_all(o.s_values.size(), 0.0);
    std::vector<double> per_radius_max;
    double unknown_max = 0.0;
    std::size_t task = 0;
    for (double rad : o.z_radii) {
        double radius_max = 0.0;
        for (std::size_t trial = 0; trial < o.trials_per_radius; ++trial, ++task) {
            CounterRng rz(seed, stream_id("smvp-z"), task);
            const CVec z = rad * uniform_on_unit_sphere(rz, n);
            CounterRng rf(seed, stream_id("smvp-f"), task);
            std::vector<cplx> coeffs(terms.size());
            for (auto& c : coeffs) c = rf.complex_normal();
            const MembershipCloud cloud = membership_cloud(z, o.r, o.mc_samples, seed, task + 1, o.budget);
            for (std::size_t si = 0; si < o.s_values.size(); ++si) {
                const SmvpValue v = smvp_from_cloud(cloud, z, o.s_values[si], terms, coeffs, o.degree);
                rep.samples += o.mc_samples;
                unknown_max = std::max(unknown_max, v.unknown_fraction);
                if (!(v.integral_stderr <= 0.05 * v.integral)) {
                    ++rep.inconclusive;
                    continue;
                }
                // Conservative side: unknown samples counted outside the ball.
                const double R = v.ratio_upper;
                rep.observe(R);
                if (!std::isfinite(R)) ++rep.violations;
                max_all[si] = std::max(max_all[si], R);
                if (rad == smallest) max_base[si] = std::max(max_base[si], R);
                radius_max = std::max(radius_max, R);
            }
        }
        per_radius_max.push_back(radius_max);
    }
    rep.set_series("max_ratio_per_radius", per_radius_max);
    bool stable = true;
    for (std::size_t si = 0; si < o.s_values.size(); ++si) {
        const double growth = max_base[si] > 0.0 ? max_all[si] / max_base[si] : std::numeric_limits<double>::infinity();
        rep.set_value("growth_s=" + format_double(o.s_values[si]), growth);
        rep.set_value("max_ratio_s=" + format_double(o.s_values[si]), max_all[si]);
        if (!(growth < 2.0)) stable = false;
    }
    rep.set_value("max_unknown_fraction", unknown_max);
    if (!stable) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

// ---------------------------------------------------------------- bump and cutoff

double bump_f(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

double bump_eta(double x) {
    const double ax = std::abs(x);
    const double a = bump_f(2.0 - ax), b = bump_f(ax - 1.0);
    return a / (a + b);
}

double bump_eta_derivative(double x) {
    constexpr double h = 1e-6;
    return (bump_eta(x + h) - bump_eta(x - h)) / (2.0 * h);
}

VerificationReport bump_derivative_check(std::size_t grid_points) {
    if (grid_points < 2) throw std::invalid_argument("bump grid needs at least two points");
    VerificationReport rep;
    rep.suite_name = "bump";
    rep.n = 1;
    rep.samples = grid_points;
    rep.set_param("grid_points", static_cast<double>(grid_points));
    double c_sup = 0.0;
    std::size_t range = 0, plateau = 0, support = 0;
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double x = -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double e = bump_eta(x);
        rep.observe(e);
        if (!(e >= 0.0 && e <= 1.0)) ++range;
        if (std::abs(x) <= 1.0 && e != 1.0) ++plateau;
        if (std::abs(x) >= 2.0 && e != 0.0) ++support;
        if (e > 1e-12) {
            const double d = bump_eta_derivative(x);
            c_sup = std::max(c_sup, d * d / e);
        }
    }
    rep.violations = range + plateau + support;
    rep.set_value("range_violations", static_cast<double>(range));
    rep.set_value("plateau_violations", static_cast<double>(plateau));
    rep.set_value("support_violations", static_cast<double>(support));
    rep.set_value("C_derivative", c_sup);
    rep.fitted_constants = FittedConstants{c_sup, 0.0};
    if (!std::isfinite(c_sup)) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

namespace {

double cutoff_distance(const CVec& z, const CVec& zeta) { return distance_bracket(z, zeta, 0).upper; }

}  // namespace

double cutoff_chi(const CVec& z, const CVec& zeta, double delta, double scale) {
    return bump_eta(scale * cutoff_distance(z, zeta) / delta);
}

VerificationReport cutoff_suite(const CVec& z, double delta, std::size_t samples, std::uint64_t seed, double scale) {
    if (!(delta > 0.0 && delta < 1.0 / 12.0)) throw std::invalid_argument("cutoff_suite needs 0 < delta < 1/12");
    check_boundary(z);
    const std::size_t n = z.size();
    struct Row {
        int range = 0, plateau = 0, support = 0, inconclusive = 0;
        double chi = 0.0;
        double c = 0.0;
        bool has_c = false;
    };
    const auto rows = parallel_map<Row>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("cutoff"), i);
        // One sample in ten sits at the center itself.
        const CVec zeta = i % 10 == 0 ? z : sample_polycylinder({z, 2.0 * delta}, rng);
        const DistanceBracket b = distance_bracket(z, zeta, 0);
        Row row;
        row.chi = bump_eta(scale * b.upper / delta);
        if (!(row.chi >= 0.0 && row.chi <= 1.0)) row.range = 1;
        if (b.upper < 0.25 * delta && row.chi != 1.0) row.plateau = 1;
        if (b.lower > delta && row.chi != 0.0) row.support = 1;
        if (b.lower <= delta && b.upper > delta && row.chi != 0.0) row.inconclusive = 1;
        if (b.lower < 0.25 * delta && b.upper >= 0.25 * delta && row.chi != 1.0) row.inconclusive = 1;
        if (row.chi > 1e-10 && (zeta - z).norm_sq() > 0.0) {
            const double m = 1.0 - zeta.norm_sq();
            const double h = 1e-5 * delta * m * std::sqrt(m);
            FormValue dbar{FormKind::form01, CVec(n)};
            for (std::size_t j = 0; j < n; ++j) {
                CVec xp = zeta, xm = zeta, yp = zeta, ym = zeta;
                xp[j] += h;
                xm[j] -= h;
                yp[j] += cplx(0.0, h);
                ym[j] -= cplx(0.0, h);
                const double dx = (cutoff_chi(z, xp, delta, scale) - cutoff_chi(z, xm, delta, scale)) / (2.0 * h);
                const double dy = (cutoff_chi(z, yp, delta, scale) - cutoff_chi(z, ym, delta, scale)) / (2.0 * h);
                dbar.comps[j] = 0.5 * cplx(dx, dy);
            }
            const double norm = form_norm(zeta, dbar);
            row.c = norm * norm * delta * delta / row.chi;
            row.has_c = true;
        }
        return row;
    });
    VerificationReport rep;
    rep.suite_name = "cutoff";
    rep.n = n;
    rep.samples = samples;
    rep.set_param("delta", delta);
    rep.set_param("abs_z", z.norm());
    rep.set_param("scale", scale);
    rep.set_param("seed", static_cast<double>(seed));
    double c_sup = 0.0;
    std::size_t range = 0, plateau = 0, support = 0;
    for (const auto& r : rows) {
        rep.observe(r.chi);
        range += r.range;
        plateau += r.plateau;
        support += r.support;
        rep.inconclusive += r.inconclusive;
        if (r.has_c) c_sup = std::max(c_sup, r.c);
    }
    rep.violations = range + plateau + support;
    rep.set_value("range_violations", static_cast<double>(range));
    rep.set_value("plateau_violations", static_cast<double>(plateau));
    rep.set_value("support_violations", static_cast<double>(support));
    rep.set_value("C_gradient", c_sup);
    rep.fitted_constants = FittedConstants{c_sup, 0.0};
    if (!std::isfinite(c_sup)) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

// ---------------------------------------------------------------- main theorem

VerificationReport main_theorem_suite(const KernelModel& model, const MainTheoremOptions& o, std::uint64_t seed) {
    if (o.pairs < 200) throw std::invalid_argument("main_theorem_suite needs at least 200 pairs");
    const std::size_t n = model.dim;
    const auto pairs = sample_decay_pairs(model, o.pairs, seed, o.max_radius, o.budget);
    const DecayFit fit = offdiag_decay_fit(pairs);

    VerificationReport rep;
    rep.suite_name = "main_theorem";
    rep.n = n;
    rep.samples = pairs.size();
    rep.set_param("pairs", static_cast<double>(o.pairs));
    rep.set_param("max_radius", o.max_radius);
    rep.set_param("budget", o.budget);
    rep.set_param("K_max", static_cast<double>(model.K_max));
    rep.set_param("seed", static_cast<double>(seed));
    rep.fitted_constants = FittedConstants{fit.C_hat, fit.epsilon_hat};

    std::size_t envelope = 0, cauchy = 0;
    double cs_excess = -std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        rep.observe(p.y);
        if (fit.residuals[i] > 1e-9) ++envelope;
        const double excess = 2.0 * kernel_eval(model, p.z, p.w).log_magnitude - log_kernel_diag(model, p.z) -
                              log_kernel_diag(model, p.w);
        cs_excess = std::max(cs_excess, excess);
        if (excess > 1e-9) ++cauchy;
        dmin = std::min(dmin, p.d_upper);
        dmax = std::max(dmax, p.d_upper);
    }

    // Diagonal ratio on a radial grid, and its change when the series doubles.
    const KernelModel doubled = build_kernel_model(n, 2 * model.K_max, model.moment_tol, model.radius_cap);
    double diag_sup = 0.0, diag_inf = std::numeric_limits<double>::infinity(), trunc = 0.0;
    for (int i = 0; i <= 19; ++i) {
        const double t = 0.05 * i;
        if (t > model.radius_cap) break;
        CVec z(n);
        z[0] = t;
        const double a = diag_ratio(model, z), b = diag_ratio(doubled, z);
        diag_sup = std::max(diag_sup, a);
        diag_inf = std::min(diag_inf, a);
        trunc = std::max(trunc, std::abs(a - b) / a);
    }
    const bool diag_ok = std::isfinite(diag_sup) && trunc < 1e-6;

    rep.set_value("epsilon_ls", fit.epsilon_ls);
    rep.set_value("epsilon_hat", fit.epsilon_hat);
    rep.set_value("log_C_hat", fit.log_C_hat);
    rep.set_value("intercept_ls", fit.intercept_ls);
    rep.set_value("envelope_max_excess", fit.max_excess);
    rep.set_value("envelope_violations", static_cast<double>(envelope));
    rep.set_value("cauchy_schwarz_max_excess", cs_excess);
    rep.set_value("cauchy_schwarz_violations", static_cast<double>(cauchy));
    rep.set_value("d_upper_min", dmin);
    rep.set_value("d_upper_max", dmax);
    rep.set_value("diag_ratio_sup", diag_sup);
    rep.set_value("diag_ratio_inf", diag_inf);
    rep.set_value("diag_ratio_truncation_change", trunc);

    rep.violations = envelope + cauchy;
    const bool eps_ok = fit.epsilon_hat > 0.0 && fit.epsilon_hat < std::numbers::sqrt2;
    if (!eps_ok) ++rep.violations;
    if (!diag_ok) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace psilab

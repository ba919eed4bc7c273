#include "psilab/kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "psilab/geometry.hpp"
#include "psilab/metric.hpp"
#include "psilab/parallel.hpp"
#include "psilab/quadrature.hpp"
#include "psilab/report.hpp"
#include "psilab/rng.hpp"

namespace psilab {

std::size_t default_kernel_terms(std::size_t n) { return n <= 2 ? 512 : 768; }

double radial_moment_log(std::size_t k, std::size_t n, double tol) {
    if (n == 0) throw std::invalid_argument("dimension must be positive");
    const double p = static_cast<double>(2 * k + 2 * n - 1);
    auto g = [p](double r) { return p * std::log(r) - 1.0 / (1.0 - r * r); };
    // g'(r) = 0  <=>  p (1-u)^2 = 2u with u = r^2; start Newton at the exact root.
    double u = ((p + 1.0) - std::sqrt(2.0 * p + 1.0)) / p;
    for (int it = 0; it < 4; ++it) {
        const double h = p * (1.0 - u) * (1.0 - u) - 2.0 * u;
        const double dh = -2.0 * p * (1.0 - u) - 2.0;
        u -= h / dh;
    }
    const double rs = std::sqrt(u);
    const double peak = g(rs);
    const double q = 1.0 - rs * rs;
    const double curv = p / (rs * rs) + 2.0 / (q * q) + 8.0 * rs * rs / (q * q * q);
    const double sigma = 1.0 / std::sqrt(curv);

    std::vector<double> br = {0.0, 1.0, rs};
    for (double c : {-12.0, -4.0, 4.0, 12.0}) {
        const double x = rs + c * sigma;
        if (x > 0.0 && x < 1.0) br.push_back(x);
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    auto f = [&](double r) { return r < 1.0 ? std::exp(g(r) - peak) : 0.0; };
    const IntegrationResult res = integrate_adaptive(f, br, 0.0, tol, 40);
    return peak + std::log(res.value);
}

namespace {

std::vector<double> compute_log_coeffs(std::size_t n, std::size_t count, double tol) {
    const double base = std::log(2.0) + static_cast<double>(n) * std::log(std::numbers::pi);
    return parallel_map<double>(count, [&](std::size_t k) {
        double lg = 0.0;  // log Gamma(n+k) - log Gamma(k+1)
        for (std::size_t j = 1; j < n; ++j) lg += std::log(static_cast<double>(k + j));
        return lg - base - radial_moment_log(k, n, tol);
    });
}

// Positive series sum_{k<count} exp(lc[k] + k log s) in log form.
double log_positive_series(const std::vector<double>& lc, std::size_t count, double s) {
    if (s == 0.0) return lc[0];
    const double ls = std::log(s);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) mx = std::max(mx, lc[k] + static_cast<double>(k) * ls);
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) acc += std::exp(lc[k] + static_cast<double>(k) * ls - mx);
    return mx + std::log(acc);
}

}  // namespace

KernelModel build_kernel_model(std::size_t n, std::size_t K_max, double tol, double radius_cap,
                               std::size_t hard_limit) {
    if (n == 0 || n > kMaxDim) throw std::invalid_argument("dimension outside 1.." + std::to_string(kMaxDim));
    if (K_max < 16) throw std::invalid_argument("K_max must be at least 16");
    if (!(radius_cap > 0.0 && radius_cap < 1.0)) throw std::invalid_argument("radius_cap must lie in (0, 1)");
    const double s = radius_cap * radius_cap;
    std::vector<double> lc;
    for (std::size_t K = K_max; K <= hard_limit; K *= 2) {
        const std::size_t ext = K + (K + 3) / 4;
        if (lc.size() < ext + 1) {
            const std::vector<double> more = compute_log_coeffs(n, ext + 1, tol);
            lc = more;
        }
        const double gap = std::abs(log_positive_series(lc, ext + 1, s) - log_positive_series(lc, K + 1, s));
        if (gap < kTruncationTolerance) {
            KernelModel m;
            m.dim = n;
            m.K_max = K;
            m.log_coeffs.assign(lc.begin(), lc.begin() + static_cast<std::ptrdiff_t>(K + 1));
            m.moment_tol = tol;
            m.radius_cap = radius_cap;
            m.truncation_gap = gap;
            return m;
        }
    }
    throw KernelBuildError("radius_cap too aggressive for K_max limit");
}

KernelModel build_kernel_model(std::size_t n) { return build_kernel_model(n, default_kernel_terms(n)); }

KernelValue kernel_series(const KernelModel& m, cplx t) {
    const double s = std::abs(t);
    if (!(s < 1.0)) throw std::domain_error("kernel argument |<z,w>| must be below 1");
    if (s == 0.0) return {m.log_coeffs[0], 0.0};
    const double ls = std::log(s);
    const double theta = std::arg(t);
    double mx = -std::numeric_limits<double>::infinity();
    cplx acc = 0.0;
    for (std::size_t k = 0; k < m.log_coeffs.size(); ++k) {
        const double lt = m.log_coeffs[k] + static_cast<double>(k) * ls;
        if (lt > mx) {
            acc *= std::exp(mx - lt);
            mx = lt;
        }
        acc += std::polar(std::exp(lt - mx), static_cast<double>(k) * theta);
    }
    return {mx + std::log(std::abs(acc)), std::arg(acc)};
}

KernelValue kernel_eval(const KernelModel& m, const CVec& z, const CVec& w) {
    if (z.size() != m.dim || w.size() != m.dim) throw std::invalid_argument("kernel_eval: dimension mismatch");
    const double lim = m.radius_cap * (1.0 + 1e-12);
    if (z.norm() > lim || w.norm() > lim) throw std::domain_error("point beyond the kernel model radius_cap");
    return kernel_series(m, inner(z, w));
}

double log_kernel_diag(const KernelModel& m, const CVec& z) { return kernel_eval(m, z, z).log_magnitude; }

double diag_ratio_with_exponent(const KernelModel& m, const CVec& z, double exponent) {
    const double s = z.norm_sq();
    return std::exp(log_kernel_diag(m, z) - psi_of_norm_sq(s) + exponent * std::log1p(-s));
}

double diag_ratio(const KernelModel& m, const CVec& z) {
    return diag_ratio_with_exponent(m, z, static_cast<double>(2 * m.dim + 1));
}

double laplacian_ratio(const KernelModel& m, const CVec& z) {
    return diag_ratio_with_exponent(m, z, static_cast<double>(3 * m.dim));
}

double decay_statistic(const KernelModel& m, const CVec& z, const CVec& w) {
    const double sz = z.norm_sq(), sw = w.norm_sq();
    const double e = static_cast<double>(2 * m.dim + 1);
    return 2.0 * kernel_eval(m, z, w).log_magnitude - psi_of_norm_sq(sz) - psi_of_norm_sq(sw) +
           e * (std::log1p(-sz) + std::log1p(-sw));
}

std::vector<DecayPair> sample_decay_pairs(const KernelModel& m, std::size_t count, std::uint64_t seed,
                                          double max_radius, int budget) {
    if (!(max_radius > 0.0 && max_radius <= m.radius_cap))
        throw std::invalid_argument("pair radius must lie in (0, radius_cap]");
    const std::size_t n = m.dim;
    return parallel_map<DecayPair>(count, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("decay-pairs"), i);
        DecayPair p;
        p.z = max_radius * uniform_in_unit_ball(rng, n);
        if (i % 2 == 0) {
            p.w = max_radius * uniform_in_unit_ball(rng, n);
        } else {
            // Near pair: w in D(z, rho) with rho log-uniform in [0.01, 0.24].
            const double rho = 0.01 * std::pow(24.0, rng.uniform());
            do {
                p.w = sample_polycylinder({p.z, rho}, rng);
            } while (!(p.w.norm() <= max_radius));
        }
        const DistanceBracket b = distance_bracket(p.z, p.w, budget);
        p.d_lower = b.lower;
        p.d_upper = b.upper;
        p.y = decay_statistic(m, p.z, p.w);
        return p;
    });
}

DecayFit fit_decay(std::span<const double> y, std::span<const double> d_lower, std::span<const double> d_upper) {
    const std::size_t N = y.size();
    if (N < 2 || d_lower.size() != N || d_upper.size() != N)
        throw std::invalid_argument("fit_decay needs matching arrays of at least two samples");
    const auto [lo, hi] = std::minmax_element(d_upper.begin(), d_upper.end());
    if (*hi - *lo < 0.5) throw std::invalid_argument("insufficient distance spread");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        mx += d_upper[i];
        my += y[i];
    }
    mx /= static_cast<double>(N);
    my /= static_cast<double>(N);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        sxy += (d_upper[i] - mx) * (y[i] - my);
        sxx += (d_upper[i] - mx) * (d_upper[i] - mx);
    }
    DecayFit f;
    const double slope = sxy / sxx;
    f.epsilon_ls = -slope;
    f.intercept_ls = my - slope * mx;
    f.epsilon_hat = std::min(f.epsilon_ls, std::numbers::sqrt2 * (1.0 - 1e-3));
    f.log_C_hat = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) f.log_C_hat = std::max(f.log_C_hat, y[i] + f.epsilon_hat * d_lower[i]);
    f.C_hat = std::exp(f.log_C_hat);
    f.residuals.resize(N);
    f.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
        f.residuals[i] = y[i] - (f.log_C_hat - f.epsilon_hat * d_lower[i]);
        f.max_excess = std::max(f.max_excess, f.residuals[i]);
    }
    return f;
}

DecayFit offdiag_decay_fit(const std::vector<DecayPair>& pairs) {
    std::vector<double> y, dl, du;
    for (const auto& p : pairs) {
        y.push_back(p.y);
        dl.push_back(p.d_lower);
        du.push_back(p.d_upper);
    }
    return fit_decay(y, dl, du);
}

std::string export_kernel_model(const KernelModel& m) {
    std::ostringstream os;
    os << "# psilab kernel model\n";
    os << "# dim " << m.dim << "\n";
    os << "# K_max " << m.K_max << "\n";
    os << "# radius_cap " << format_double(m.radius_cap) << "\n";
    os << "# truncation_gap " << format_double(m.truncation_gap) << "\n";
    for (std::size_t k = 0; k < m.log_coeffs.size(); ++k)
        os << k << ' ' << format_double(m.log_coeffs[k]) << ' ' << format_double(m.moment_tol) << "\n";
    return os.str();
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("malformed number '" + s + "' in kernel table");
    return v;
}

}  // namespace

KernelModel import_kernel_model(const std::string& text) {
    KernelModel m;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key, val;
            ls >> hash >> key >> val;
            if (key == "dim") m.dim = static_cast<std::size_t>(std::stoul(val));
            else if (key == "radius_cap") m.radius_cap = parse_double(val);
            else if (key == "truncation_gap") m.truncation_gap = parse_double(val);
            continue;
        }
        std::string k, lc, tol;
        if (!(ls >> k >> lc >> tol)) throw std::invalid_argument("kernel table line needs 'k log_c_k tol'");
        if (std::stoul(k) != m.log_coeffs.size()) throw std::invalid_argument("kernel table rows out of order");
        m.log_coeffs.push_back(parse_double(lc));
        m.moment_tol = parse_double(tol);
    }
    if (m.dim == 0 || m.log_coeffs.empty()) throw std::invalid_argument("kernel table lacks dim or coefficients");
    m.K_max = m.log_coeffs.size() - 1;
    return m;
}

}  // namespace psilab

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "psilab/kernel.hpp"
#include "psilab/quadrature.hpp"

namespace psilab {

cplx reproducing_integral(const KernelModel& m, unsigned power, cplx z, std::size_t angles) {
    if (m.dim != 1) throw std::invalid_argument("reproducing_integral is implemented for n = 1");
    // Angular trapezoid is exact for trigonometric polynomials below `angles`,
    // and the series terms beyond that are negligible for |z| <= 0.7.
    auto ring = [&](double rho) {
        if (rho >= 1.0) return cplx(0.0);
        const double weight = std::exp(-1.0 / (1.0 - rho * rho));
        if (weight == 0.0) return cplx(0.0);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < angles; ++j) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(angles);
            const cplx w = std::polar(rho, th);
            const KernelValue k = kernel_series(m, w * std::conj(z));
            acc += std::pow(w, static_cast<int>(power)) * std::polar(std::exp(k.log_magnitude), -k.phase);
        }
        return acc * (2.0 * std::numbers::pi / static_cast<double>(angles)) * rho * weight;
    };
    const double re = integrate_adaptive([&](double r) { return ring(r).real(); }, 0.0, 1.0, 1e-11).value;
    const double im = integrate_adaptive([&](double r) { return ring(r).imag(); }, 0.0, 1.0, 1e-11).value;
    return {re, im};
}

double weight_mass_disk() {
    // pi int_0^1 e^{-1/u} du = pi (e^{-1} - E_1(1)), and E_1(1) = -Ei(-1).
    return std::numbers::pi * (std::exp(-1.0) + std::expint(-1.0));
}

VerificationReport reproducing_suite(const KernelModel& m) {
    if (m.dim != 1) throw std::invalid_argument("reproducing_suite is implemented for n = 1");
    VerificationReport rep;
    rep.suite_name = "reproducing";
    rep.n = 1;
    rep.set_param("K_max", static_cast<double>(m.K_max));
    std::vector<double> errs;
    for (unsigned p : {0u, 1u, 3u})
        for (double t : {0.0, 0.4, 0.7}) {
            const cplx z(t, 0.0);
            const cplx got = reproducing_integral(m, p, z);
            const double e = std::abs(got - std::pow(z, static_cast<int>(p)));
            errs.push_back(e);
            rep.observe(e);
            if (!(e <= 1e-6)) ++rep.violations;
        }
    rep.samples = errs.size();
    rep.set_series("abs_error", errs);
    rep.set_value("max_abs_error", *std::max_element(errs.begin(), errs.end()));
    const double k00 = std::exp(m.log_coeffs[0]);
    const double origin_err = std::abs(k00 * weight_mass_disk() - 1.0);
    rep.set_value("origin_rel_error", origin_err);
    if (!(origin_err <= 1e-8)) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

VerificationReport diag_suite(const KernelModel& m, const std::vector<double>& grid) {
    const std::size_t n = m.dim;
    const KernelModel doubled = build_kernel_model(n, 2 * m.K_max, m.moment_tol, m.radius_cap);
    VerificationReport rep;
    rep.suite_name = "diag_ratio";
    rep.n = n;
    rep.samples = grid.size();
    rep.set_param("K_max", static_cast<double>(m.K_max));
    rep.set_param("radius_cap", m.radius_cap);
    std::vector<double> ratio, lap;
    double trunc = 0.0;
    for (double t : grid) {
        CVec z(n);
        z[0] = t;
        const double a = diag_ratio(m, z);
        const double b = diag_ratio(doubled, z);
        ratio.push_back(a);
        lap.push_back(laplacian_ratio(m, z));
        trunc = std::max(trunc, std::abs(a - b) / a);
        rep.observe(a);
        if (!std::isfinite(a) || !(a > 0.0)) ++rep.violations;
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    rep.set_series("z_grid", grid);
    rep.set_series("diag_ratio", ratio);
    rep.set_series("laplacian_ratio", lap);
    rep.set_value("diag_ratio_max_over_min", *hi / *lo);
    rep.set_value("truncation_change", trunc);
    if (!(trunc < 1e-6)) ++rep.violations;
    if (n >= 2) {
        // Bounded with exponent 2n+1, decaying to 0 with exponent 3n.
        const double lap_max = *std::max_element(lap.begin(), lap.end());
        const double tail = lap.back() / lap_max;
        rep.set_value("laplacian_tail_over_max", tail);
        bool decreasing = true;
        for (std::size_t i = lap.size() >= 4 ? lap.size() - 4 : 0; i + 1 < lap.size(); ++i)
            decreasing = decreasing && lap[i + 1] < lap[i];
        if (!(tail < 0.25) || !decreasing) ++rep.violations;
        if (!(*hi / *lo < 10.0)) ++rep.violations;
    }
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace psilab

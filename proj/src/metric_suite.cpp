#include <algorithm>
#include <cmath>

#include "psilab/metric.hpp"
#include "psilab/parallel.hpp"
#include "psilab/rng.hpp"

namespace psilab {

namespace {

double max_abs_entry(const CMat& a) {
    double mx = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) mx = std::max(mx, std::abs(a(i, j)));
    return mx;
}

double rel_diff(const CMat& a, const CMat& b) { return max_abs_entry(a - b) / max_abs_entry(b); }

}  // namespace

VerificationReport hessian_algebra_suite(std::size_t n, std::size_t samples, std::uint64_t seed,
                                         double max_radius) {
    struct Row {
        double det = 0, inv = 0, sqrt = 0, eig = 0, forms = 0, herm = 0;
    };
    const auto rows = parallel_map<Row>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("hessian-algebra"), i);
        const CVec z = max_radius * uniform_in_unit_ball(rng, n);
        const MetricTensor mt = hessian(z);
        const double s = z.norm_sq();
        const double det_closed = (1.0 + s) / std::pow(1.0 - s, static_cast<double>(2 * n + 1));
        Row r;
        r.det = std::max(std::abs(mt.det - det_closed), std::abs(mt.hess.determinant() - det_closed)) / det_closed;
        r.inv = max_abs_entry(mt.hess * mt.inv - CMat::identity(n));
        r.sqrt = rel_diff(mt.sqrt * mt.sqrt, mt.hess);
        r.forms = rel_diff(hessian_spectral_form(z), mt.hess);
        r.herm = mt.hess.hermitian_defect() / max_abs_entry(mt.hess);
        if (s > 0.0) {
            const CVec rad = z.conj();
            const CVec hr = mt.hess * rad - mt.eig_radial * rad;
            r.eig = hr.norm() / (mt.eig_radial * rad.norm());
            if (n > 1) {
                const CVec tan = proj_Q(z, uniform_on_unit_sphere(rng, n)).conj();
                if (tan.norm() > 1e-8) {
                    const CVec ht = mt.hess * tan - mt.eig_tangent * tan;
                    r.eig = std::max(r.eig, ht.norm() / (mt.eig_tangent * tan.norm()));
                }
            }
        }
        return r;
    });
    VerificationReport rep;
    rep.suite_name = "hessian_algebra";
    rep.n = n;
    rep.samples = samples;
    rep.set_param("max_radius", max_radius);
    rep.set_param("seed", static_cast<double>(seed));
    Row worst;
    for (const auto& r : rows) {
        worst.det = std::max(worst.det, r.det);
        worst.inv = std::max(worst.inv, r.inv);
        worst.sqrt = std::max(worst.sqrt, r.sqrt);
        worst.eig = std::max(worst.eig, r.eig);
        worst.forms = std::max(worst.forms, r.forms);
        worst.herm = std::max(worst.herm, r.herm);
        const double m = std::max({r.det, r.inv, r.sqrt, r.eig, r.forms, r.herm});
        rep.observe(m);
        if (!(m <= 1e-10)) ++rep.violations;
    }
    rep.set_value("det_max_rel_residual", worst.det);
    rep.set_value("inverse_max_residual", worst.inv);
    rep.set_value("sqrt_max_rel_residual", worst.sqrt);
    rep.set_value("eigen_max_rel_residual", worst.eig);
    rep.set_value("assembly_max_rel_difference", worst.forms);
    rep.set_value("hermitian_max_rel_defect", worst.herm);
    rep.pass = rep.violations == 0;
    return rep;
}

CMat wirtinger_hessian_fd(const CVec& z, double h) {
    const std::size_t n = z.size();
    // Real coordinate a in [0, 2n): even = Re z_{a/2}, odd = Im z_{a/2}.
    auto shifted = [&](std::size_t a, double da, std::size_t b, double db) {
        CVec p = z;
        p[a / 2] += (a % 2 == 0) ? cplx(da, 0.0) : cplx(0.0, da);
        p[b / 2] += (b % 2 == 0) ? cplx(db, 0.0) : cplx(0.0, db);
        return psi(p);
    };
    auto d2 = [&](std::size_t a, std::size_t b) {
        return (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h) + shifted(a, -h, b, -h)) /
               (4.0 * h * h);
    };
    CMat out(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double xx = d2(2 * j, 2 * k), yy = d2(2 * j + 1, 2 * k + 1);
            const double xy = d2(2 * j, 2 * k + 1), yx = d2(2 * j + 1, 2 * k);
            out(j, k) = 0.25 * cplx(xx + yy, xy - yx);
        }
    return out;
}

VerificationReport hessian_fd_suite(std::size_t n, std::size_t points, std::uint64_t seed, double max_radius) {
    const auto errs = parallel_map<double>(points, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("hessian-fd"), i);
        const CVec z = max_radius * uniform_in_unit_ball(rng, n);
        return rel_diff(wirtinger_hessian_fd(z), hessian(z).hess);
    });
    VerificationReport rep;
    rep.suite_name = "hessian_fd";
    rep.n = n;
    rep.samples = points;
    rep.set_param("max_radius", max_radius);
    rep.set_param("step", 1e-5);
    rep.set_param("seed", static_cast<double>(seed));
    double worst = 0.0;
    for (double e : errs) {
        worst = std::max(worst, e);
        rep.observe(e);
        if (!(e <= 1e-5)) ++rep.violations;
    }
    rep.set_value("max_rel_error", worst);
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace psilab

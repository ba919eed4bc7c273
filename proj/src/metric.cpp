#include "psilab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psilab/rng.hpp"

namespace psilab {

void check_boundary(const CVec& z) {
    if (!(z.norm() <= kBoundaryGuard)) {
        throw std::domain_error("too close to boundary for requested precision");
    }
}

double psi_of_norm_sq(double norm_sq) { return 1.0 / (1.0 - norm_sq); }

double psi(const CVec& z) { return psi_of_norm_sq(z.norm_sq()); }

double radial_eigenvalue(double s) {
    const double m = 1.0 - s;
    return (1.0 + s) / (m * m * m);
}

double tangent_eigenvalue(double s) {
    const double m = 1.0 - s;
    return 1.0 / (m * m);
}

namespace {

// conj(A(z))_jk = conj(z_j) z_k
CMat conj_A(const CVec& z) { return rank_one_A(z).conj(); }

}  // namespace

MetricTensor hessian(const CVec& z) {
    check_boundary(z);
    const std::size_t n = z.size();
    const double s = z.norm_sq();
    const double m = 1.0 - s;
    const CMat id = CMat::identity(n);
    const CMat ca = conj_A(z);

    MetricTensor t;
    t.at = z;
    t.hess = (1.0 / (m * m)) * id + (2.0 / (m * m * m)) * ca;
    t.inv = (m * m) * (id - (2.0 / (1.0 + s)) * ca);
    t.det = (1.0 + s) / std::pow(m, static_cast<double>(2 * n + 1));
    // sqrt(1+s)/m^{3/2} conj(P_z) + 1/m conj(Q_z) = I/m + c conj(A), with the
    // coefficient c written without the cancellation at small |z|.
    const double c = 2.0 / ((std::sqrt(1.0 + s) + std::sqrt(m)) * m * std::sqrt(m));
    t.sqrt = (1.0 / m) * id + c * ca;
    t.eig_radial = radial_eigenvalue(s);
    t.eig_tangent = tangent_eigenvalue(s);
    return t;
}

CMat hessian_spectral_form(const CVec& z) {
    check_boundary(z);
    const std::size_t n = z.size();
    const double s = z.norm_sq();
    const CMat p = projector_P(z).conj();
    const CMat q = CMat::identity(n) - p;
    return radial_eigenvalue(s) * p + tangent_eigenvalue(s) * q;
}

double vec_norm_h(const CVec& z, const CVec& xi) {
    check_boundary(z);
    return std::sqrt(vec_norm_h_sq_unchecked(z.norm_sq(), inner(xi, z), xi.norm_sq()));
}

double vec_norm_h_split(const CVec& z, const CVec& xi) {
    check_boundary(z);
    const double s = z.norm_sq();
    return std::sqrt(radial_eigenvalue(s) * proj_P(z, xi).norm_sq() +
                     tangent_eigenvalue(s) * proj_Q(z, xi).norm_sq());
}

namespace {

// Pairing of the form components with z that enters the closed form:
// <alpha, z> for (0,1)-forms and <beta, conj z> for (1,0)-forms.
cplx form_pairing(const CVec& z, const FormValue& f) {
    return f.kind == FormKind::form01 ? inner(f.comps, z) : inner(f.comps, z.conj());
}

}  // namespace

double form_norm(const CVec& z, const FormValue& f) {
    check_boundary(z);
    const double s = z.norm_sq();
    const double m = 1.0 - s;
    const double a2 = f.comps.norm_sq();
    const double p2 = std::norm(form_pairing(z, f));
    return m * std::sqrt(std::max(0.0, a2 - 2.0 * p2 / (1.0 + s)));
}

double form_norm_antisymmetric(const CVec& z, const FormValue& f) {
    check_boundary(z);
    const std::size_t n = z.size();
    const double s = z.norm_sq();
    const double m = 1.0 - s;
    // The wedge pairs alpha with z (not conj z) for (0,1)-forms so that it
    // reproduces the <alpha, z> closed form for complex z as well.
    const CVec b = f.kind == FormKind::form01 ? z : z.conj();
    double wedge = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
            wedge += std::norm(f.comps[j] * b[k] - f.comps[k] * b[j]);
    const double val = (m * m / (1.0 + s)) * wedge + (m * m * m / (1.0 + s)) * f.comps.norm_sq();
    return std::sqrt(val);
}

DualNormCheck dual_norm_sup_check(const CVec& z, const FormValue& f, std::size_t trials,
                                  std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("dual_norm_sup_check needs at least 100 trials");
    const MetricTensor t = hessian(z);
    const std::size_t n = z.size();
    const CVec a = f.kind == FormKind::form01 ? f.comps : f.comps.conj();

    DualNormCheck out;
    out.closed_form = form_norm(z, f);
    out.maximizer = t.inv.conj() * a;

    auto ratio = [&](const CVec& xi) {
        const double den = vec_norm_h(z, xi);
        return den > 0.0 ? std::abs(inner(a, xi)) / den : 0.0;
    };

    CounterRng rng(seed, stream_id("dual-norm"), 0);
    for (std::size_t i = 0; i < trials; ++i) {
        CVec xi(n);
        for (std::size_t j = 0; j < n; ++j) xi[j] = rng.complex_normal();
        out.sampled_sup = std::max(out.sampled_sup, ratio(xi));
    }
    if (a.norm_sq() > 0.0) out.sampled_sup = std::max(out.sampled_sup, ratio(out.maximizer));
    return out;
}

}  // namespace psilab

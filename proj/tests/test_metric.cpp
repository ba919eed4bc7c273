#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "psilab/metric.hpp"
#include "support.hpp"

using namespace psilab;
using testing::max_abs;
using testing::random_point;
using testing::random_vector;

namespace {

double rel(const CMat& a, const CMat& b) { return max_abs(a - b) / max_abs(b); }

// Sherman-Morrison for S + u v^T with S = s I.
CMat sherman_morrison(double s, const CVec& u, const CVec& v) {
    const std::size_t n = u.size();
    cplx vu = 0.0;
    for (std::size_t j = 0; j < n; ++j) vu += v[j] * u[j];
    CMat out = (1.0 / s) * CMat::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) -= (u[i] * v[j]) / (s * s * (1.0 + vu / s));
    return out;
}

}  // namespace

TEST_CASE("hessian at the origin is the identity") {
    for (std::size_t n = 1; n <= 4; ++n) {
        const MetricTensor t = hessian(CVec(n));
        CHECK(max_abs(t.hess - CMat::identity(n)) == 0.0);
        CHECK(max_abs(t.inv - CMat::identity(n)) == 0.0);
        CHECK(max_abs(t.sqrt - CMat::identity(n)) == 0.0);
        CHECK(t.det == 1.0);
        CHECK(t.eig_radial == t.eig_tangent);
    }
}

TEST_CASE("determinant closed form") {
    const double a = std::sqrt(0.5);
    CHECK(hessian(CVec{a}).det == doctest::Approx(12.0).epsilon(1e-13));
    CHECK(hessian(CVec{cplx(0.0, a)}).hess.determinant().real() == doctest::Approx(12.0).epsilon(1e-13));
}

TEST_CASE("inverse agrees with Sherman-Morrison and Gauss-Jordan") {
    CounterRng rng(5, stream_id("t-sm"), 0);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + i % 3;
        const CVec z = random_point(rng, n, 0.95);
        const double m = 1.0 - z.norm_sq();
        // H = I/m^2 + u v^T with u = 2 conj(z)/m^3, v = z.
        const CMat sm = sherman_morrison(1.0 / (m * m), (2.0 / (m * m * m)) * z.conj(), z);
        const MetricTensor t = hessian(z);
        CHECK(rel(t.inv, sm) < 1e-12);
        CHECK(rel(t.inv, testing::invert(t.hess)) < 1e-10);
    }
}

TEST_CASE("metric tensor invariants") {
    CounterRng rng(6, stream_id("t-mt"), 0);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 1 + i % 4;
        const CVec z = random_point(rng, n, 0.97);
        const MetricTensor t = hessian(z);
        const double s = z.norm_sq();
        CHECK(t.hess.hermitian_defect() == 0.0);
        CHECK(rel(t.hess * t.inv, CMat::identity(n)) < 1e-10);
        CHECK(rel(t.sqrt * t.sqrt, t.hess) < 1e-10);
        CHECK(rel(hessian_spectral_form(z), t.hess) < 1e-12);
        CHECK(std::abs(t.det * testing::invert(t.hess).determinant().real() - 1.0) < 1e-10);
        CHECK(t.det == doctest::Approx((1.0 + s) / std::pow(1.0 - s, 2.0 * n + 1)).epsilon(1e-12));
        CHECK(t.eig_radial >= t.eig_tangent);
        // Positive definite.
        const CVec x = random_vector(rng, n);
        CHECK(inner(t.hess * x, x).real() > 0.0);
    }
}

TEST_CASE("eigenvectors: conj(z) radial, conj of tangent vectors tangential") {
    CounterRng rng(7, stream_id("t-eig"), 0);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + i % 3;
        const CVec z = random_point(rng, n, 0.95);
        const MetricTensor t = hessian(z);
        const CVec r = z.conj();
        CHECK((t.hess * r - t.eig_radial * r).norm() < 1e-10 * t.eig_radial * r.norm());
        const CVec q = proj_Q(z, random_vector(rng, n)).conj();
        CHECK((t.hess * q - t.eig_tangent * q).norm() < 1e-10 * t.eig_tangent * q.norm());
    }
}

TEST_CASE("hessian matches Wirtinger finite differences of psi") {
    CounterRng rng(8, stream_id("t-fd"), 0);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + i % 3;
        const CVec z = random_point(rng, n, 0.8);
        CHECK(rel(wirtinger_hessian_fd(z), hessian(z).hess) < 1e-5);
    }
}

TEST_CASE("boundary guard") {
    CHECK_THROWS_WITH_AS(hessian(CVec{1.0 - 1e-13}), "too close to boundary for requested precision",
                         std::domain_error);
    CHECK_THROWS_AS(vec_norm_h(CVec{1.0}, CVec{1.0}), std::domain_error);
    CHECK_NOTHROW(hessian(CVec{0.999999}));
}

TEST_CASE("vector norm") {
    CHECK(vec_norm_h(CVec{0.0, 0.0}, CVec{3.0, cplx(0.0, 4.0)}) == doctest::Approx(5.0));
    const CVec z{0.6, 0.0}, xi{0.0, cplx(0.3, 0.4)};
    CHECK(vec_norm_h(z, xi) == doctest::Approx(0.5 / 0.64).epsilon(1e-14));
    const double s = 0.36;
    CHECK(vec_norm_h(z, z) == doctest::Approx(0.6 * std::sqrt(1.0 + s) / std::pow(1.0 - s, 1.5)).epsilon(1e-14));

    CounterRng rng(9, stream_id("t-vn"), 0);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 1 + i % 4;
        const CVec p = random_point(rng, n, 0.98), x = random_vector(rng, n);
        const double a = vec_norm_h(p, x);
        CHECK(a == doctest::Approx(vec_norm_h_split(p, x)).epsilon(1e-12));
        // Quadratic form sum_jk H_jk xi_j conj(xi_k).
        const CMat h = hessian(p).hess;
        cplx q = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) q += h(j, k) * x[j] * std::conj(x[k]);
        CHECK(a * a == doctest::Approx(q.real()).epsilon(1e-12));
        // Pointwise minorant used by the hyperbolic lower bound.
        CHECK(a >= x.norm() / (1.0 - p.norm_sq()) * (1.0 - 1e-15));
        // Unitary invariance.
        const CMat u = n > 1 ? unitary_to_axis(random_point(rng, n, 0.9)) : CMat::identity(1);
        CHECK(vec_norm_h(u * p, u * x) == doctest::Approx(a).epsilon(1e-12));
        CHECK(hessian(u * p).det == doctest::Approx(hessian(p).det).epsilon(1e-12));
    }
}

TEST_CASE("form norms") {
    const FormValue e1{FormKind::form01, CVec{1.0, 0.0}};
    CHECK(form_norm(CVec{0.0, 0.0}, e1) == doctest::Approx(1.0));

    SUBCASE("alpha along z") {
        const CVec z{cplx(0.3, 0.2), cplx(-0.1, 0.4)};
        const double s = z.norm_sq();
        const FormValue f{FormKind::form01, (0.7 / z.norm()) * z};
        const double expect = std::pow(1.0 - s, 1.5) * 0.7 / std::sqrt(1.0 + s);
        CHECK(form_norm(z, f) == doctest::Approx(expect).epsilon(1e-13));
        CHECK(form_norm_antisymmetric(z, f) == doctest::Approx(expect).epsilon(1e-13));
    }

    SUBCASE("matrix path a* conj(H^-1) a") {
        CounterRng rng(10, stream_id("t-form"), 0);
        for (int i = 0; i < 200; ++i) {
            const std::size_t n = 1 + i % 4;
            const CVec z = random_point(rng, n, 0.95);
            const CMat inv = testing::invert(hessian(z).hess).conj();
            for (FormKind kind : {FormKind::form01, FormKind::form10}) {
                const FormValue f{kind, random_vector(rng, n)};
                const CVec a = kind == FormKind::form01 ? f.comps : f.comps.conj();
                const double q = inner(inv * a, a).real();
                CHECK(form_norm(z, f) == doctest::Approx(std::sqrt(q)).epsilon(1e-10));
                CHECK(form_norm_antisymmetric(z, f) == doctest::Approx(form_norm(z, f)).epsilon(1e-12));
            }
        }
    }

    SUBCASE("literal conj(z) wedge agrees only for real z") {
        auto literal = [](const CVec& z, const CVec& a) {
            const double s = z.norm_sq(), m = 1.0 - s;
            double w = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j)
                for (std::size_t k = 0; k < z.size(); ++k)
                    w += std::norm(a[j] * std::conj(z[k]) - a[k] * std::conj(z[j]));
            return std::sqrt(m * m / (1.0 + s) * w + m * m * m / (1.0 + s) * a.norm_sq());
        };
        const CVec a{cplx(0.2, 0.5), cplx(-0.7, 0.1)};
        const CVec real_z{0.3, -0.5};
        CHECK(literal(real_z, a) == doctest::Approx(form_norm(real_z, {FormKind::form01, a})).epsilon(1e-13));
        const CVec cz{cplx(0.3, 0.3), cplx(0.1, -0.5)};
        CHECK(std::abs(literal(cz, a) - form_norm(cz, {FormKind::form01, a})) > 1e-3);
    }

    SUBCASE("gradient of log(1-|z|^2) has norm^2 |z|^2(1-|z|^2)/(1+|z|^2)") {
        CounterRng rng(11, stream_id("t-dlog"), 0);
        for (int i = 0; i < 100; ++i) {
            const std::size_t n = 1 + i % 4;
            const CVec z = random_point(rng, n, 0.99);
            const double s = z.norm_sq();
            // dbar log(1-|z|^2) = -sum z_j / (1-|z|^2) dconj(z_j).
            const FormValue f{FormKind::form01, (-1.0 / (1.0 - s)) * z};
            const double got = std::pow(form_norm(z, f), 2);
            CHECK(got == doctest::Approx(s * (1.0 - s) / (1.0 + s)).epsilon(1e-10));
            CHECK(got <= 1.0);
        }
    }
}

TEST_CASE("dual norm supremum") {
    const FormValue zero{FormKind::form01, CVec{0.0, 0.0}};
    CHECK(dual_norm_sup_check(CVec{0.3, 0.1}, zero, 100, 1).sampled_sup == 0.0);
    const FormValue e1{FormKind::form01, CVec{1.0, 0.0}};
    CHECK(dual_norm_sup_check(CVec{0.0, 0.0}, e1, 100, 1).sampled_sup == doctest::Approx(1.0));
    CHECK_THROWS_AS(dual_norm_sup_check(CVec{0.0}, e1, 99, 1), std::invalid_argument);

    CounterRng rng(12, stream_id("t-dual"), 0);
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = 2 + i % 3;
        const CVec z = random_point(rng, n, 0.95);
        for (FormKind kind : {FormKind::form01, FormKind::form10}) {
            const FormValue f{kind, random_vector(rng, n)};
            const DualNormCheck c = dual_norm_sup_check(z, f, 1000, 100 + i);
            CHECK(c.sampled_sup <= c.closed_form * (1.0 + 1e-9));
            CHECK(c.sampled_sup >= c.closed_form * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("algebra and finite-difference suites pass") {
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto a = hessian_algebra_suite(n, 300, 3);
        CHECK(a.pass);
        CHECK(a.consistent());
        CHECK(hessian_fd_suite(n, 30, 3).pass);
    }
}

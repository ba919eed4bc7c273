#pragma once

// Shared helpers for the unit tests: seeded points, and brute-force oracles
// that deliberately avoid the library's own closed forms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "psilab/linalg.hpp"
#include "psilab/rng.hpp"

namespace testing {

using psilab::CMat;
using psilab::cplx;
using psilab::CVec;

inline CVec random_point(psilab::CounterRng& rng, std::size_t n, double max_radius) {
    return max_radius * psilab::uniform_in_unit_ball(rng, n);
}

inline CVec random_vector(psilab::CounterRng& rng, std::size_t n) {
    CVec v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = rng.complex_normal();
    return v;
}

inline bool near(const CVec& a, const CVec& b, double tol = 1e-15) {
    return a.size() == b.size() && (a - b).norm() <= tol;
}

/// Gauss-Jordan with partial pivoting.
inline CMat invert(const CMat& a) {
    const std::size_t n = a.dim();
    CMat m = a, inv = CMat::identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(p, c))) p = r;
        if (std::abs(m(p, c)) == 0.0) throw std::runtime_error("singular");
        for (std::size_t k = 0; k < n; ++k) {
            std::swap(m(c, k), m(p, k));
            std::swap(inv(c, k), inv(p, k));
        }
        const cplx d = m(c, c);
        for (std::size_t k = 0; k < n; ++k) {
            m(c, k) /= d;
            inv(c, k) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const cplx f = m(r, c);
            for (std::size_t k = 0; k < n; ++k) {
                m(r, k) -= f * m(c, k);
                inv(r, k) -= f * inv(c, k);
            }
        }
    }
    return inv;
}

inline double max_abs(const CMat& a) {
    double mx = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) mx = std::max(mx, std::abs(a(i, j)));
    return mx;
}

/// Composite trapezoid on [a, b] with `panels` panels.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < panels; ++i) s += f(a + h * static_cast<double>(i));
    return s * h;
}

}  // namespace testing

#include "psilab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psilab {

namespace {

void check_dim(std::size_t n) {
    if (n == 0 || n > kMaxDim) {
        throw std::invalid_argument("dimension " + std::to_string(n) + " outside 1.." +
                                    std::to_string(kMaxDim));
    }
}

void check_same(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

}  // namespace

CVec::CVec(std::size_t n) : n_(n) { check_dim(n); }

CVec::CVec(std::initializer_list<cplx> values) : n_(values.size()) {
    check_dim(n_);
    std::copy(values.begin(), values.end(), c_.begin());
}

CVec CVec::unit(std::size_t n, std::size_t j) {
    CVec e(n);
    e[j] = 1.0;
    return e;
}

double CVec::norm_sq() const {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += std::norm(c_[j]);
    return s;
}

double CVec::norm() const { return std::sqrt(norm_sq()); }

CVec CVec::conj() const {
    CVec out(*this);
    for (std::size_t j = 0; j < n_; ++j) out.c_[j] = std::conj(c_[j]);
    return out;
}

CVec& CVec::operator+=(const CVec& o) {
    check_same(n_, o.n_);
    for (std::size_t j = 0; j < n_; ++j) c_[j] += o.c_[j];
    return *this;
}

CVec& CVec::operator-=(const CVec& o) {
    check_same(n_, o.n_);
    for (std::size_t j = 0; j < n_; ++j) c_[j] -= o.c_[j];
    return *this;
}

CVec& CVec::operator*=(cplx s) {
    for (std::size_t j = 0; j < n_; ++j) c_[j] *= s;
    return *this;
}

bool operator==(const CVec& a, const CVec& b) {
    if (a.n_ != b.n_) return false;
    for (std::size_t j = 0; j < a.n_; ++j) {
        if (a.c_[j] != b.c_[j]) return false;
    }
    return true;
}

Point::Point(const CVec& v) : v_(v), norm_sq_(v.norm_sq()) {
    if (v.size() == 0) throw std::invalid_argument("point of dimension 0");
    if (!(norm_sq_ < 1.0)) {
        throw std::domain_error("point not strictly inside the unit ball (|z|^2 = " +
                                std::to_string(norm_sq_) + ")");
    }
}

double Point::norm() const { return std::sqrt(norm_sq_); }

CMat::CMat(std::size_t n) : n_(n) { check_dim(n); }

CMat CMat::identity(std::size_t n) {
    CMat m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMat CMat::adjoint() const {
    CMat m(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) m(i, j) = std::conj((*this)(j, i));
    return m;
}

CMat CMat::conj() const {
    CMat m(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) m(i, j) = std::conj((*this)(i, j));
    return m;
}

CMat CMat::transpose() const {
    CMat m(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(j, i);
    return m;
}

cplx CMat::trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

double CMat::norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) s += std::norm((*this)(i, j));
    return std::sqrt(s);
}

double CMat::hermitian_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return d;
}

cplx CMat::determinant() const {
    CMat m(*this);
    cplx det = 1.0;
    for (std::size_t c = 0; c < n_; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n_; ++r)
            if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
        if (m(piv, c) == cplx(0.0)) return 0.0;
        if (piv != c) {
            for (std::size_t k = 0; k < n_; ++k) std::swap(m(c, k), m(piv, k));
            det = -det;
        }
        det *= m(c, c);
        for (std::size_t r = c + 1; r < n_; ++r) {
            const cplx f = m(r, c) / m(c, c);
            for (std::size_t k = c; k < n_; ++k) m(r, k) -= f * m(c, k);
        }
    }
    return det;
}

CMat& CMat::operator+=(const CMat& o) {
    check_same(n_, o.n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) += o(i, j);
    return *this;
}

CMat& CMat::operator-=(const CMat& o) {
    check_same(n_, o.n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) -= o(i, j);
    return *this;
}

CMat& CMat::operator*=(cplx s) {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) *= s;
    return *this;
}

CMat operator*(const CMat& a, const CMat& b) {
    check_same(a.n_, b.n_);
    CMat m(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
        for (std::size_t k = 0; k < a.n_; ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < a.n_; ++j) m(i, j) += aik * b(k, j);
        }
    return m;
}

CVec operator*(const CMat& a, const CVec& v) {
    check_same(a.n_, v.size());
    CVec out(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < a.n_; ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

cplx inner(const CVec& z, const CVec& w) {
    check_same(z.size(), w.size());
    cplx s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) s += z[j] * std::conj(w[j]);
    return s;
}

CVec proj_P(const CVec& z, const CVec& w) {
    check_same(z.size(), w.size());
    const double zz = z.norm_sq();
    if (zz == 0.0) return w;
    return (inner(w, z) / zz) * z;
}

CVec proj_Q(const CVec& z, const CVec& w) { return w - proj_P(z, w); }

CMat rank_one_A(const CVec& z) {
    CMat a(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t k = 0; k < z.size(); ++k) a(j, k) = z[j] * std::conj(z[k]);
    return a;
}

CMat projector_P(const CVec& z) {
    const double zz = z.norm_sq();
    if (zz == 0.0) return CMat::identity(z.size());
    return (1.0 / zz) * rank_one_A(z);
}

CMat unitary_to_axis(const CVec& z) {
    const std::size_t n = z.size();
    const double nz = z.norm();
    if (nz == 0.0) throw std::invalid_argument("unitary undefined at origin; use identity explicitly");

    // Skip the basis vector with the largest |z_j| (smallest index on ties):
    // its overlap with z is at least |z|/sqrt(n), so the rest stays well conditioned.
    std::size_t skip = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (std::abs(z[j]) > std::abs(z[skip])) skip = j;

    std::array<CVec, kMaxDim> rows;
    rows[0] = (1.0 / nz) * z.conj();
    std::size_t filled = 1;
    for (std::size_t j = 0; j < n && filled < n; ++j) {
        if (j == skip) continue;
        CVec v = CVec::unit(n, j);
        // Two passes of modified Gram-Schmidt keep orthogonality at roundoff level.
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < filled; ++k) v -= inner(v, rows[k]) * rows[k];
        rows[filled++] = (1.0 / v.norm()) * v;
    }

    CMat u(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) u(i, j) = rows[i][j];
    return u;
}

double unitarity_defect(const CMat& u) {
    const CMat d = u * u.adjoint() - CMat::identity(u.dim());
    double m = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i)
        for (std::size_t j = 0; j < u.dim(); ++j) m = std::max(m, std::abs(d(i, j)));
    return m;
}

}  // namespace psilab

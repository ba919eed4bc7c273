#pragma once

// Complex-vector primitives on C^n for small n: inner products, the rank-one
// matrix A(z) = (z_j conj(z_k)), the projections P_z / Q_z and the unitary U_z
// that rotates z onto the first coordinate axis.

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace psilab {

using cplx = std::complex<double>;

/// Hard cap on the complex dimension. Everything is dense and stack allocated.
inline constexpr std::size_t kMaxDim = 4;

/// Fixed-capacity complex vector of dimension 1..kMaxDim.
class CVec {
public:
    CVec() = default;
    explicit CVec(std::size_t n);
    CVec(std::initializer_list<cplx> values);

    static CVec zero(std::size_t n) { return CVec(n); }
    static CVec unit(std::size_t n, std::size_t j);

    std::size_t size() const { return n_; }
    cplx& operator[](std::size_t j) { return c_[j]; }
    const cplx& operator[](std::size_t j) const { return c_[j]; }

    double norm_sq() const;
    double norm() const;

    CVec conj() const;

    CVec& operator+=(const CVec& o);
    CVec& operator-=(const CVec& o);
    CVec& operator*=(cplx s);

    friend CVec operator+(CVec a, const CVec& b) { return a += b; }
    friend CVec operator-(CVec a, const CVec& b) { return a -= b; }
    friend CVec operator*(cplx s, CVec a) { return a *= s; }
    friend CVec operator*(CVec a, cplx s) { return a *= s; }
    friend CVec operator*(double s, CVec a) { return a *= cplx(s, 0.0); }
    friend CVec operator-(CVec a) { return a *= cplx(-1.0, 0.0); }
    friend bool operator==(const CVec& a, const CVec& b);

private:
    std::array<cplx, kMaxDim> c_{};
    std::size_t n_ = 0;
};

/// A point of the open unit ball B_n with cached |z|^2.
class Point {
public:
    /// Throws std::domain_error unless |v| < 1.
    explicit Point(const CVec& v);
    Point(std::initializer_list<cplx> values) : Point(CVec(values)) {}

    static Point origin(std::size_t n) { return Point(CVec(n)); }

    const CVec& coords() const { return v_; }
    double norm_sq() const { return norm_sq_; }
    double norm() const;
    std::size_t dim() const { return v_.size(); }
    const cplx& operator[](std::size_t j) const { return v_[j]; }

    operator const CVec&() const { return v_; }

private:
    CVec v_;
    double norm_sq_ = 0.0;
};

/// Dense n x n complex matrix, n <= kMaxDim, row-major.
class CMat {
public:
    CMat() = default;
    explicit CMat(std::size_t n);

    static CMat identity(std::size_t n);

    std::size_t dim() const { return n_; }
    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * kMaxDim + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * kMaxDim + j]; }

    CMat adjoint() const;
    CMat conj() const;
    CMat transpose() const;
    cplx trace() const;
    /// Frobenius norm.
    double norm() const;
    /// Largest |a_ij - a_ji*|; zero for Hermitian matrices.
    double hermitian_defect() const;

    /// Determinant by Gaussian elimination with partial pivoting.
    cplx determinant() const;

    CMat& operator+=(const CMat& o);
    CMat& operator-=(const CMat& o);
    CMat& operator*=(cplx s);

    friend CMat operator+(CMat a, const CMat& b) { return a += b; }
    friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
    friend CMat operator*(cplx s, CMat a) { return a *= s; }
    friend CMat operator*(double s, CMat a) { return a *= cplx(s, 0.0); }
    friend CMat operator*(const CMat& a, const CMat& b);
    friend CVec operator*(const CMat& a, const CVec& v);

private:
    std::array<cplx, kMaxDim * kMaxDim> a_{};
    std::size_t n_ = 0;
};

/// <z, w> = sum_j z_j conj(w_j). Throws std::invalid_argument on dimension mismatch.
cplx inner(const CVec& z, const CVec& w);

/// Orthogonal projection of w onto the complex line through z; identity when z = 0.
CVec proj_P(const CVec& z, const CVec& w);
/// w - proj_P(z, w); the zero vector when z = 0.
CVec proj_Q(const CVec& z, const CVec& w);

/// A(z)_jk = z_j conj(z_k).
CMat rank_one_A(const CVec& z);
/// Matrix of P_z (identity at z = 0).
CMat projector_P(const CVec& z);

/// Unitary U with first row conj(z)/|z| and U z = (|z|, 0, ..., 0).
/// Remaining rows come from Gram-Schmidt over the standard basis with one
/// basis vector (the one most parallel to z) skipped.
/// Throws std::invalid_argument at z = 0.
CMat unitary_to_axis(const CVec& z);

/// Largest entry of |U U* - I|.
double unitarity_defect(const CMat& u);

}  // namespace psilab

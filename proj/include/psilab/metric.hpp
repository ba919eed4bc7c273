#pragma once

// The complex Hessian of psi(z) = 1/(1-|z|^2) on the unit ball and the
// quantities derived from it: inverse, determinant, square root, the two
// eigenvalues, vector norms under h_psi and norms of (0,1)/(1,0)-forms.
//
// Closed forms are authoritative. Nothing here inverts a matrix numerically.

#include <cstddef>
#include <cstdint>

#include "psilab/linalg.hpp"
#include "psilab/report.hpp"

namespace psilab {

/// Operations refuse points with |z| above this.
inline constexpr double kBoundaryGuard = 1.0 - 1e-12;

/// Throws std::domain_error("too close to boundary for requested precision").
void check_boundary(const CVec& z);

/// psi(z) = 1/(1 - |z|^2).
double psi(const CVec& z);
double psi_of_norm_sq(double norm_sq);

/// Radial eigenvalue (1+|z|^2)/(1-|z|^2)^3, eigenvector conj(z).
double radial_eigenvalue(double norm_sq);
/// Tangential eigenvalue 1/(1-|z|^2)^2, multiplicity n-1.
double tangent_eigenvalue(double norm_sq);

struct MetricTensor {
    CVec at;
    CMat hess;
    CMat inv;
    double det = 1.0;
    CMat sqrt;
    double eig_radial = 1.0;
    double eig_tangent = 1.0;
};

/// H_psi(z) from the (1-|z|^2) I + 2 conj(A(z)) form, with the closed-form inverse,
/// determinant and square root.
MetricTensor hessian(const CVec& z);

/// The same Hessian assembled from the spectral split over conj(P_z), conj(Q_z).
CMat hessian_spectral_form(const CVec& z);

/// |xi|_{h_psi} = sqrt(2|<xi,z>|^2/(1-|z|^2)^3 + |xi|^2/(1-|z|^2)^2).
double vec_norm_h(const CVec& z, const CVec& xi);
/// Same quantity from the P_z/Q_z split.
double vec_norm_h_split(const CVec& z, const CVec& xi);

/// Hot-path variant without validation; caller guarantees |z|^2 < 1.
inline double vec_norm_h_sq_unchecked(double z_norm_sq, cplx xi_dot_z, double xi_norm_sq) {
    const double m = 1.0 - z_norm_sq;
    return (2.0 * std::norm(xi_dot_z) / m + xi_norm_sq) / (m * m);
}

enum class FormKind { form01, form10 };

/// alpha = sum alpha_j d conj(z_j) (form01) or beta = sum beta_j dz_j (form10).
struct FormValue {
    FormKind kind = FormKind::form01;
    CVec comps;
};

/// Norm of a form with respect to i d dbar psi, closed form.
double form_norm(const CVec& z, const FormValue& f);
/// The antisymmetrised expression sum |a_j zbar_k - a_k zbar_j|^2 / ... of the same norm.
double form_norm_antisymmetric(const CVec& z, const FormValue& f);

struct DualNormCheck {
    double sampled_sup = 0.0;   // max over sampled xi of |<a, xi>| / |xi|_h
    double closed_form = 0.0;   // form_norm(z, f)
    CVec maximizer;             // conj(H^{-1}) a
};

/// Samples `trials` random directions plus the closed-form maximizer and reports
/// the largest ratio |<a, xi>| / |xi|_h. For form10 the pairing is applied to conj(beta).
DualNormCheck dual_norm_sup_check(const CVec& z, const FormValue& f, std::size_t trials,
                                  std::uint64_t seed);

/// Random z with |z| <= max_radius: det identity, H H^{-1} = I, sqrt^2 = H,
/// radial/tangent eigenvectors, and agreement of the two Hessian assemblies.
/// Every residual is relative; pass iff all stay below 1e-10.
VerificationReport hessian_algebra_suite(std::size_t n, std::size_t samples, std::uint64_t seed,
                                         double max_radius = 0.95);

/// d^2 psi / dz_j dconj(z_k) by central differences (step 1e-5) in real
/// coordinates against H_psi. Error is measured against the largest entry.
/// Pass iff below 1e-5.
CMat wirtinger_hessian_fd(const CVec& z, double h = 1e-5);
VerificationReport hessian_fd_suite(std::size_t n, std::size_t points, std::uint64_t seed,
                                    double max_radius = 0.8);

}  // namespace psilab

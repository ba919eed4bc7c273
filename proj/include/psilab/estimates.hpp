#pragma once

// Verification suites built on the metric, geometry and kernel modules:
// automorphism identities, the bounded-deviation and test-function estimates,
// sub-mean-value inequalities, the bump and cutoff functions, and the
// assembled diagonal / off-diagonal kernel check.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "psilab/kernel.hpp"
#include "psilab/linalg.hpp"
#include "psilab/report.hpp"

namespace psilab {

/// phi_z(w) = (z - P_z w - sqrt(1-|z|^2) Q_z w) / (1 - <w, z>).
CVec automorphism(const CVec& z, const CVec& w);

/// Relative residual of 1 - |phi_z(w)|^2 = (1-|z|^2)(1-|w|^2)/|1-<w,z>|^2.
double automorphism_identity_residual(const CVec& z, const CVec& w);

/// |LHS - RHS| for
/// 2 Re(1/(1-<w,z>)) - psi(z) - psi(w) = |z-w|^2/|1-<w,z>|^2 - |phi_z(w)|^2 (psi(z)+psi(w)).
double eq_difference_residual(const CVec& z, const CVec& w);
/// The left-hand side above, i.e. log(|F_z(w)|^2 e^{-psi(w)}).
double deviation(const CVec& z, const CVec& w);

/// Both identities on random pairs with |z|, |w| <= max_radius. Pass iff the
/// automorphism residual stays below 1e-12 and the difference residual below
/// 1e-10 (1 + |LHS|).
VerificationReport identity_suite(std::size_t n, std::size_t samples, std::uint64_t seed,
                                  double max_radius = 0.95);

/// Max over w in D(z, r) of |deviation(z, w)|, for z = t e_1 over the grid.
/// Pass iff the per-z maxima are finite and max/min over the grid is below 3.
/// Requires 0 < r < 1/8.
VerificationReport imp_ineq_suite(std::size_t n, double r, const std::vector<double>& z_grid,
                                  std::size_t samples_per_z, std::uint64_t seed);
/// Same samples and criterion, framed through the test function F_z; also
/// records the signed range of the deviation.
VerificationReport test_function_suite(std::size_t n, double r, const std::vector<double>& z_grid,
                                       std::size_t samples_per_z, std::uint64_t seed);

struct SmvpOptions {
    double r = 0.05;
    std::vector<double> s_values = {0.0, 1.0, -1.0};
    std::vector<double> z_radii = {0.5, 0.6, 0.7, 0.8, 0.9};
    std::size_t trials_per_radius = 2;
    std::size_t mc_samples = 100000;
    std::size_t degree = 6;
    int budget = 0;
};

/// R(f, z) = |f(z)|^2 e^{-s psi(z)} (1-|z|^2)^{2n+1} / int_{B(z,r)} |f|^2 e^{-s psi} dV
/// for random polynomials f. Pass iff max R is finite and the max over the whole
/// radius grid is within a factor 2 of the max at the smallest radius.
VerificationReport smvp_suite(std::size_t n, const SmvpOptions& opts, std::uint64_t seed);

struct SmvpValue {
    double ratio = 0.0;         // with unknown samples split evenly
    double ratio_upper = 0.0;   // unknown samples counted outside the ball
    double ratio_lower = 0.0;   // unknown samples counted inside
    double integral = 0.0;
    double integral_stderr = 0.0;
    double unknown_fraction = 0.0;
};

/// One R(f, z) for a polynomial given by coefficients over monomials of total
/// degree <= coeff_degree (graded lexicographic order, see polynomial_terms).
SmvpValue smvp_ratio(const CVec& z, double r, double s, const std::vector<cplx>& coeffs,
                     std::size_t coeff_degree, std::size_t mc_samples, std::uint64_t seed,
                     int budget = 0);

/// Exponent vectors of all monomials in n variables of total degree <= d.
std::vector<std::vector<unsigned>> polynomial_terms(std::size_t n, std::size_t d);

/// f(x) = e^{-1/x} for x > 0, else 0;  eta(x) = f(2-|x|) / (f(|x|-1) + f(2-|x|)).
double bump_f(double x);
double bump_eta(double x);
/// Central difference with step 1e-6.
double bump_eta_derivative(double x);
/// Range, plateau, support and (eta')^2 <= C eta on a uniform grid over [-3, 3].
VerificationReport bump_derivative_check(std::size_t grid_points = 10000);

inline constexpr double kCutoffScale = 2.0;

/// chi_z(zeta) = eta(scale * u / delta), u the unoptimized upper distance bracket.
double cutoff_chi(const CVec& z, const CVec& zeta, double delta, double scale = kCutoffScale);

/// Checks range, chi = 1 where the upper bracket is below delta/4, chi = 0 where
/// the lower bracket exceeds delta, and |dbar chi|^2 <= C chi / delta^2 with C
/// recorded. Samples zeta in D(z, 2 delta). Requires 0 < delta < 1/12.
VerificationReport cutoff_suite(const CVec& z, double delta, std::size_t samples, std::uint64_t seed,
                                double scale = kCutoffScale);

struct MainTheoremOptions {
    std::size_t pairs = 300;
    double max_radius = 0.9;
    int budget = 50;
};

/// Off-diagonal decay fit plus Cauchy-Schwarz and diagonal-ratio checks.
VerificationReport main_theorem_suite(const KernelModel& model, const MainTheoremOptions& opts,
                                      std::uint64_t seed);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace psilab

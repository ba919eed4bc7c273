#pragma once

// Weighted Bergman kernel of the weight e^{-psi} on B_n as a power series in
// t = <z, w>:  K(z, w) = sum_k c_k t^k,  c_k = Gamma(n+k) / (2 pi^n k! I_k),
// I_k = int_0^1 r^{2k+2n-1} e^{-1/(1-r^2)} dr. Everything is kept in logs.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psilab/linalg.hpp"
#include "psilab/report.hpp"

namespace psilab {

class KernelBuildError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kKernelHardLimit = 8192;
inline constexpr double kDefaultRadiusCap = 0.95;
inline constexpr double kTruncationTolerance = 1e-8;

/// 512 for n <= 2, 768 otherwise.
std::size_t default_kernel_terms(std::size_t n);

/// log I_k. The integrand is scaled by its maximum (located by Newton) and
/// integrated adaptively with relative tolerance `tol`.
double radial_moment_log(std::size_t k, std::size_t n, double tol = 1e-13);

struct KernelModel {
    std::size_t dim = 0;
    std::vector<double> log_coeffs;  // log c_k, k = 0..K_max
    std::size_t K_max = 0;
    double moment_tol = 1e-13;
    double radius_cap = kDefaultRadiusCap;
    /// |change of log K(z,z)| at |z| = radius_cap when 25% more terms are added.
    double truncation_gap = 0.0;
};

/// Builds c_0..c_{K_max}, doubling K_max until the truncation certificate holds
/// at radius_cap. Throws KernelBuildError once K_max would exceed hard_limit.
KernelModel build_kernel_model(std::size_t n, std::size_t K_max, double tol = 1e-13,
                               double radius_cap = kDefaultRadiusCap,
                               std::size_t hard_limit = kKernelHardLimit);
KernelModel build_kernel_model(std::size_t n);

struct KernelValue {
    double log_magnitude = 0.0;
    double phase = 0.0;
};

/// K(z, w) as (log |K|, arg K). Throws std::domain_error beyond radius_cap.
KernelValue kernel_eval(const KernelModel& m, const CVec& z, const CVec& w);
/// Series value at a complex argument t = <z, w>, |t| < 1.
KernelValue kernel_series(const KernelModel& m, cplx t);

/// log K(z, z).
double log_kernel_diag(const KernelModel& m, const CVec& z);

/// K(z,z) e^{-psi(z)} (1-|z|^2)^{exponent}; diag_ratio uses exponent 2n+1,
/// laplacian_ratio uses 3n.
double diag_ratio_with_exponent(const KernelModel& m, const CVec& z, double exponent);
double diag_ratio(const KernelModel& m, const CVec& z);
double laplacian_ratio(const KernelModel& m, const CVec& z);

/// y = 2 log|K(z,w)| - psi(z) - psi(w) + (2n+1)(log(1-|z|^2) + log(1-|w|^2)).
double decay_statistic(const KernelModel& m, const CVec& z, const CVec& w);

struct DecayPair {
    CVec z, w;
    double d_lower = 0.0;
    double d_upper = 0.0;
    double y = 0.0;
};

/// Pairs with |z|, |w| <= max_radius: half independent uniform pairs, half
/// near pairs drawn from polycylinders around z. Brackets use `budget`.
std::vector<DecayPair> sample_decay_pairs(const KernelModel& m, std::size_t count, std::uint64_t seed,
                                          double max_radius = 0.9, int budget = 50);

struct DecayFit {
    double epsilon_ls = 0.0;   // minus the least-squares slope of y on d_upper
    double epsilon_hat = 0.0;  // epsilon_ls capped just below sqrt(2)
    double log_C_hat = 0.0;    // max of y + epsilon_hat d_lower
    double C_hat = 0.0;
    double intercept_ls = 0.0;
    double max_excess = 0.0;   // max of y - (log C_hat - epsilon_hat d_lower)
    std::vector<double> residuals;
};

/// Throws std::invalid_argument("insufficient distance spread") when the upper
/// distances span less than 0.5.
DecayFit fit_decay(std::span<const double> y, std::span<const double> d_lower,
                   std::span<const double> d_upper);
DecayFit offdiag_decay_fit(const std::vector<DecayPair>& pairs);

/// Text table: comment header, then one "k log_c_k tol" line per coefficient.
std::string export_kernel_model(const KernelModel& m);
KernelModel import_kernel_model(const std::string& text);

/// int_{B_1} f(w) conj(K(w, z)) e^{-psi(w)} dV(w) by a tensor rule (adaptive
/// Gauss-Legendre in |w|, trapezoid in arg w). n = 1 only.
cplx reproducing_integral(const KernelModel& m, unsigned power, cplx z, std::size_t angles = 256);
/// int_{B_1} e^{-psi} dV for n = 1 from the exponential integral.
double weight_mass_disk();

/// f in {1, w, w^3}, z in {0, 0.4, 0.7}: the reproducing integral equals f(z)
/// to 1e-6, and K(0,0) equals 1 / int e^{-psi} to 1e-8 relative. n = 1 only.
VerificationReport reproducing_suite(const KernelModel& m);

/// diag_ratio on the grid, its change under doubling K_max (< 1e-6), and for
/// n >= 2 the ratio with exponent 3n, which must fall towards 0 at the end
/// of the grid while diag_ratio stays within a factor 10 of itself.
VerificationReport diag_suite(const KernelModel& m, const std::vector<double>& grid);

}  // namespace psilab

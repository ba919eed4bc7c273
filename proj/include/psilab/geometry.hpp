#pragma once

// Lengths and distances for the metric h_psi: curve lengths, the exact radial
// distance, certified two-sided distance brackets, polycylinders, metric balls,
// the inclusion and Carleson-box checks, and Monte Carlo volumes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "psilab/linalg.hpp"
#include "psilab/report.hpp"
#include "psilab/rng.hpp"

namespace psilab {

/// Nodes are kept strictly inside |p| <= kNodeRadius during optimization.
inline constexpr double kNodeRadius = 1.0 - 1e-9;

/// Piecewise-linear path. A single node is the degenerate curve at one point.
class Curve {
public:
    /// Throws std::invalid_argument for an empty list, repeated consecutive
    /// nodes or mixed dimensions, std::domain_error for a node outside the ball.
    explicit Curve(std::vector<CVec> nodes);

    static Curve point(const CVec& p) { return Curve(std::vector<CVec>{p}); }

    const std::vector<CVec>& nodes() const { return nodes_; }
    std::size_t segments() const { return nodes_.size() - 1; }
    const CVec& front() const { return nodes_.front(); }
    const CVec& back() const { return nodes_.back(); }

    Curve reversed() const;

private:
    std::vector<CVec> nodes_;
};

/// Sum over segments of the 3-point Gauss rule for the h_psi length of the
/// straight segment.
double curve_length(const Curve& c);
/// Same, with each segment integrated adaptively to relative accuracy ~1e-12.
double curve_length_adaptive(const Curve& c);

/// Length of the straight segment p0 -> p1 by the 3-point Gauss rule. No checks.
double segment_length_g3(const CVec& p0, const CVec& p1);

/// d_psi(0, z) for |z| = t: integral of sqrt(1+s^2)/(1-s^2)^{3/2} over [0, t].
/// Throws std::domain_error unless 0 <= t < 1.
double radial_distance(double t);
/// The two closed-form bounds t/sqrt(1-t^2) <= d(0, t e_1) <= t sqrt(1+t^2)/sqrt(1-t^2).
double radial_distance_lower(double t);
double radial_distance_upper(double t);

struct DistanceBracket {
    double lower = 0.0;
    double upper = 0.0;
    Curve witness = Curve::point(CVec(1));
};

struct BracketOptions {
    /// L-BFGS iterations per refinement level; 0 keeps the unoptimized candidates.
    int budget = 50;
    /// Largest node count of the refined witness.
    std::size_t max_nodes = 64;
    /// When set, work stops as soon as the bracket lies strictly on one side.
    std::optional<double> decide_at;
};

/// Certified lower <= d_psi(z, w) <= upper. The upper bound is the length of a
/// witness curve; the lower bound is the best of several rigorous minorants.
DistanceBracket distance_bracket(const CVec& z, const CVec& w, const BracketOptions& opts = {});
DistanceBracket distance_bracket(const CVec& z, const CVec& w, int budget);

/// Lower bound alone (cheap).
double distance_lower_bound(const CVec& z, const CVec& w);

/// The individual lower bounds, exposed for tests.
double lower_bound_log_gap(const CVec& z, const CVec& w);
double lower_bound_hyperbolic(const CVec& z, const CVec& w);
double lower_bound_radial(const CVec& z, const CVec& w);
/// Constant-metric minorant on boxes around `center`; `scale` sets the box size.
double lower_bound_local(const CVec& center, const CVec& w, double scale);

struct PolyCylinder {
    CVec center;
    double radius = 0.0;
};

struct GeodesicBall {
    CVec center;
    double radius = 0.0;
};

/// |z - P_z w| < r (1-|z|^2)^{3/2} and |Q_z w| < r (1-|z|^2).
bool in_polycylinder(const PolyCylinder& d, const CVec& w);

enum class Membership { in, out, unknown };
const char* to_string(Membership m);

/// in iff the upper bracket is below r, out iff the lower bracket exceeds r.
Membership in_ball_certified(const GeodesicBall& b, const CVec& w, int budget = 50);

/// Uniform sample of D(z, r) (product of a disk and a ball in U_z coordinates).
CVec sample_polycylinder(const PolyCylinder& d, CounterRng& rng);

/// Closed-form Euclidean volume of D(z, r).
double polycylinder_volume(const PolyCylinder& d);
/// Volume of the unit ball of R^k.
double unit_ball_volume(std::size_t k);

/// Samples w in the Euclidean ball B(z, r(1-|z|^2)) and checks
/// (1-2r)(1-|z|^2) <= 1-|w|^2 <= (1+2r)(1-|z|^2). Requires 0 < r < 1/2.
VerificationReport carleson_box_check(const CVec& z, double r, std::size_t samples,
                                      std::uint64_t seed = 0);
/// Polycylinder variant: w in D(z, r), bounds (1 -/+ 4r)(1-|z|^2). Requires 0 < r < 1/4.
VerificationReport carleson_polycylinder_check(const CVec& z, double r, std::size_t samples,
                                               std::uint64_t seed = 0);

/// (i) w in D(z, r/10) must have upper < r. (ii) w in D(z, 3r) outside D(z, 2r)
/// must not be certified inside B(z, r); uncertified samples are inconclusive.
/// Requires 0 < r < 1/12.
VerificationReport inclusion_check(const CVec& z, double r, std::size_t samples,
                                   std::uint64_t seed = 0, int budget = 200);

struct VolumeEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    /// Fraction of samples whose membership could not be certified (metric balls only).
    double unknown_fraction = 0.0;
    /// Estimates counting unknown samples as out / in.
    double lower = 0.0;
    double upper = 0.0;
};

/// Monte Carlo over the bounding box (in U_z coordinates) of D(z, r), or of
/// D(z, 2r) for a metric ball. Requires samples >= 1000.
VolumeEstimate volume_estimate(const PolyCylinder& d, std::size_t samples, std::uint64_t seed);
VolumeEstimate volume_estimate(const GeodesicBall& b, std::size_t samples, std::uint64_t seed,
                               int budget = 0);

/// Maps w to the coordinates in which z lies on the positive first axis
/// (identity at z = 0), and back.
CVec to_axis_coords(const CVec& z, const CVec& w);
CVec from_axis_coords(const CVec& z, const CVec& u);

/// radial_distance(t) between the closed-form sandwich bounds, and the
/// bracket for (0, t e_1) within 1e-3 of it, for t = 0.95 k / grid_points.
VerificationReport radial_geodesic_suite(std::size_t n, std::size_t grid_points = 50, int budget = 50);

/// |log(1-|w|^2) - log(1-|z|^2)| <= 2 upper(z, w) on random pairs.
VerificationReport lipschitz_suite(std::size_t n, std::size_t pairs, std::uint64_t seed, int budget = 50,
                                   double max_radius = 0.95);

struct VolumeScalingRow {
    double t = 0.0;
    double log_weight = 0.0;  // log(1 - t^2)
    VolumeEstimate poly;
    VolumeEstimate ball;
};

/// D(t e_1, r) and B(t e_1, r) volumes along the grid.
std::vector<VolumeScalingRow> volume_scaling_rows(std::size_t n, const std::vector<double>& grid, double r,
                                                  std::size_t samples, std::uint64_t seed, int budget = 0);
/// Least-squares slope of log Vol(D) against log(1 - |z|^2); pass iff within
/// 2% of 2n+1 and Vol(B)/Vol(D) varies by less than a factor 2 over the grid.
VerificationReport volume_scaling_suite(std::size_t n, const std::vector<double>& grid, double r,
                                        std::size_t samples, std::uint64_t seed, int budget = 0);

/// Least-squares slope of y on x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace psilab

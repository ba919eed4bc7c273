#include "psilab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "psilab/metric.hpp"
#include "psilab/parallel.hpp"
#include "psilab/quadrature.hpp"

namespace psilab {

// ---------------------------------------------------------------- curves

Curve::Curve(std::vector<CVec> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("curve needs at least one node");
    const std::size_t n = nodes_.front().size();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].size() != n) throw std::invalid_argument("curve nodes have mixed dimensions");
        if (!(nodes_[i].norm_sq() < 1.0)) throw std::domain_error("curve node outside the unit ball");
        if (i > 0 && nodes_[i] == nodes_[i - 1])
            throw std::invalid_argument("consecutive curve nodes must be distinct");
    }
}

Curve Curve::reversed() const {
    std::vector<CVec> r(nodes_.rbegin(), nodes_.rend());
    return Curve(std::move(r));
}

namespace {

constexpr std::array<double, 3> kG3Nodes = {0.5 - 0.3872983346207416885, 0.5,
                                            0.5 + 0.3872983346207416885};
constexpr std::array<double, 3> kG3Weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// Speed |d|_h at p0 + t d, from a = |p0|^2, b = <d, p0>, c = |d|^2.
inline double segment_speed(double a, cplx b, double c, double t) {
    const double s = a + 2.0 * t * b.real() + t * t * c;
    if (!(s < 1.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(vec_norm_h_sq_unchecked(s, b + t * c, c));
}

double segment_length_adaptive(const CVec& p0, const CVec& p1) {
    const CVec d = p1 - p0;
    const double c = d.norm_sq();
    if (c == 0.0) return 0.0;
    const double a = p0.norm_sq();
    const cplx b = inner(d, p0);
    return integrate_adaptive([&](double t) { return segment_speed(a, b, c, t); }, 0.0, 1.0, 1e-15,
                              1e-13)
        .value;
}

}  // namespace

double segment_length_g3(const CVec& p0, const CVec& p1) {
    const CVec d = p1 - p0;
    const double c = d.norm_sq();
    if (c == 0.0) return 0.0;
    const double a = p0.norm_sq();
    const cplx b = inner(d, p0);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) sum += kG3Weights[i] * segment_speed(a, b, c, kG3Nodes[i]);
    return sum;
}

double curve_length(const Curve& c) {
    double len = 0.0;
    const auto& p = c.nodes();
    for (std::size_t i = 0; i + 1 < p.size(); ++i) len += segment_length_g3(p[i], p[i + 1]);
    return len;
}

double curve_length_adaptive(const Curve& c) {
    double len = 0.0;
    const auto& p = c.nodes();
    for (std::size_t i = 0; i + 1 < p.size(); ++i) len += segment_length_adaptive(p[i], p[i + 1]);
    return len;
}

// ---------------------------------------------------------------- radial distance

namespace {

double radial_speed(double s) {
    const double m = 1.0 - s * s;
    return std::sqrt(1.0 + s * s) / (m * std::sqrt(m));
}

// Integral of the radial speed over [lo, hi].
double radial_integral(double lo, double hi) {
    if (hi <= lo) return 0.0;
    return integrate_adaptive(radial_speed, lo, hi, 1e-13, 1e-14).value;
}

}  // namespace

double radial_distance(double t) {
    if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("radial_distance needs 0 <= t < 1");
    return radial_integral(0.0, t);
}

double radial_distance_lower(double t) { return t / std::sqrt(1.0 - t * t); }
double radial_distance_upper(double t) { return t * std::sqrt(1.0 + t * t) / std::sqrt(1.0 - t * t); }

// ---------------------------------------------------------------- lower bounds

double lower_bound_log_gap(const CVec& z, const CVec& w) {
    return 0.5 * std::abs(std::log1p(-z.norm_sq()) - std::log1p(-w.norm_sq()));
}

double lower_bound_hyperbolic(const CVec& z, const CVec& w) {
    // |phi_z(w)|^2 |1 - <w,z>|^2 = |z - w|^2 - sum_{j<k} |z_j w_k - z_k w_j|^2,
    // with the wedge written through d = w - z so nearby points keep precision.
    const CVec d = w - z;
    double wedge = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t k = j + 1; k < z.size(); ++k) wedge += std::norm(z[j] * d[k] - z[k] * d[j]);
    const double num = std::max(0.0, d.norm_sq() - wedge);
    const double den = std::norm(1.0 - inner(w, z));
    const double phi = std::min(std::sqrt(num / den), 1.0 - 1e-16);
    return std::atanh(phi);
}

double lower_bound_radial(const CVec& z, const CVec& w) {
    const double a = z.norm(), b = w.norm();
    return radial_integral(std::min(a, b), std::max(a, b));
}

double lower_bound_local(const CVec& center, const CVec& w, double scale) {
    const double t = center.norm();
    if (t == 0.0 || !(scale > 0.0)) return 0.0;
    const std::size_t n = center.size();
    const double s = t * t;
    const double m = 1.0 - s;
    const cplx along = inner(w, center) / t;  // coordinate of w on the unit vector center/|center|
    const double dp = std::abs(along - t);
    const double dq = n > 1 ? proj_Q(center, w).norm() : 0.0;
    const double a0 = std::sqrt(m * m * m / (1.0 + s));
    const double b0 = m;

    static constexpr std::array<double, 8> kappas = {1.0001, 1.02, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0};
    static constexpr std::array<double, 5> thetas = {0.01, 0.03, 0.1, 0.3, 0.6};
    double best = 0.0;
    for (double kappa : kappas) {
        const double a = kappa * scale * a0;
        const double b = n > 1 ? kappa * scale * b0 : 0.0;
        const double tlo = std::max(0.0, t - a);
        const double thi = t + a;
        const double m_lo = 1.0 - thi * thi - b * b;
        if (!(m_lo > 0.0)) continue;
        const double m_hi = 1.0 - tlo * tlo;
        for (double theta : thetas) {
            const double alpha_p =
                1.0 / (m_hi * m_hi) + 2.0 * (1.0 - theta) * tlo * tlo / (m_hi * m_hi * m_hi);
            double exit_len = std::sqrt(alpha_p) * a;
            double alpha_q = 0.0;
            if (n > 1) {
                alpha_q = 1.0 / (m_hi * m_hi) - 2.0 * (1.0 / theta - 1.0) * b * b / (m_lo * m_lo * m_lo);
                if (!(alpha_q > 0.0)) continue;
                exit_len = std::min(exit_len, std::sqrt(alpha_q) * b);
            }
            double val = exit_len;
            if (dp <= a && dq <= b) val = std::min(val, std::sqrt(alpha_p * dp * dp + alpha_q * dq * dq));
            best = std::max(best, val);
        }
    }
    return best;
}

namespace {

double lower_bound_with_scales(const CVec& z, const CVec& w, std::initializer_list<double> scales) {
    double lo = std::max({lower_bound_log_gap(z, w), lower_bound_hyperbolic(z, w),
                          lower_bound_radial(z, w)});
    for (double sc : scales) {
        lo = std::max(lo, lower_bound_local(z, w, sc));
        lo = std::max(lo, lower_bound_local(w, z, sc));
    }
    return lo;
}

}  // namespace

double distance_lower_bound(const CVec& z, const CVec& w) {
    check_boundary(z);
    check_boundary(w);
    if ((w - z).norm_sq() == 0.0) return 0.0;
    return lower_bound_with_scales(z, w, {segment_length_g3(z, w)});
}

// ---------------------------------------------------------------- upper bounds

namespace {

// Length certified for a polyline: the larger of the adaptive and the 3-point
// values, after splitting segments until the two agree closely.
struct Measured {
    std::vector<CVec> nodes;
    double length = std::numeric_limits<double>::infinity();
};

Measured measure(std::vector<CVec> nodes) {
    Measured out;
    double exact = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) exact += segment_length_adaptive(nodes[i], nodes[i + 1]);
    for (int round = 0; round < 12; ++round) {
        double g3 = 0.0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) g3 += segment_length_g3(nodes[i], nodes[i + 1]);
        if (std::abs(g3 - exact) <= 1e-11 * exact || nodes.size() > 4096) {
            out.length = std::max(exact, g3);
            out.nodes = std::move(nodes);
            return out;
        }
        std::vector<CVec> finer;
        finer.reserve(2 * nodes.size());
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            finer.push_back(nodes[i]);
            finer.push_back(0.5 * (nodes[i] + nodes[i + 1]));
        }
        finer.push_back(nodes.back());
        nodes = std::move(finer);
    }
    double g3 = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) g3 += segment_length_g3(nodes[i], nodes[i + 1]);
    out.length = std::max(exact, g3);
    out.nodes = std::move(nodes);
    return out;
}

std::vector<CVec> drop_repeats(const std::vector<CVec>& nodes) {
    std::vector<CVec> out;
    for (const auto& p : nodes)
        if (out.empty() || (p - out.back()).norm_sq() > 0.0) out.push_back(p);
    return out;
}

// Resamples a polyline to k segments of equal h-length (approximately).
std::vector<CVec> resample(const std::vector<CVec>& nodes, std::size_t k) {
    constexpr std::size_t kSub = 32;
    std::vector<CVec> fine;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        for (std::size_t j = 0; j < kSub; ++j)
            fine.push_back(nodes[i] + (static_cast<double>(j) / kSub) * (nodes[i + 1] - nodes[i]));
    fine.push_back(nodes.back());
    std::vector<double> cum(fine.size(), 0.0);
    for (std::size_t i = 1; i < fine.size(); ++i) cum[i] = cum[i - 1] + segment_length_g3(fine[i - 1], fine[i]);
    const double total = cum.back();
    std::vector<CVec> out{nodes.front()};
    std::size_t seg = 0;
    for (std::size_t i = 1; i < k; ++i) {
        const double target = total * static_cast<double>(i) / static_cast<double>(k);
        while (seg + 2 < cum.size() && cum[seg + 1] < target) ++seg;
        const double span = cum[seg + 1] - cum[seg];
        const double f = span > 0.0 ? std::clamp((target - cum[seg]) / span, 0.0, 1.0) : 0.0;
        out.push_back(fine[seg] + f * (fine[seg + 1] - fine[seg]));
    }
    out.push_back(nodes.back());
    return drop_repeats(out);
}

void keep_inside(CVec& p) {
    const double r = p.norm();
    if (r > kNodeRadius) p *= cplx(kNodeRadius / r, 0.0);
}

// Discrete energy sum_i L_i^2 minimized over interior nodes by L-BFGS in
// variables rescaled by the local radial metric scale.
class PathOptimizer {
public:
    PathOptimizer(std::vector<CVec> nodes, int budget) : nodes_(std::move(nodes)), budget_(budget) {
        n_ = nodes_.front().size();
        interior_ = nodes_.size() - 2;
        dim_ = interior_ * 2 * n_;
        x0_.resize(dim_);
        scale_.resize(dim_);
        for (std::size_t j = 0; j < interior_; ++j) {
            const CVec& p = nodes_[j + 1];
            const double s = p.norm_sq();
            const double sc = std::sqrt((1.0 - s) * (1.0 - s) * (1.0 - s) / (1.0 + s));
            for (std::size_t c = 0; c < n_; ++c) {
                x0_[idx(j, c, 0)] = p[c].real();
                x0_[idx(j, c, 1)] = p[c].imag();
                scale_[idx(j, c, 0)] = scale_[idx(j, c, 1)] = sc;
            }
        }
    }

    std::vector<CVec> run() {
        if (interior_ == 0 || budget_ <= 0) return nodes_;
        std::vector<double> u(dim_, 0.0), g(dim_), u_new(dim_), g_new(dim_), d(dim_);
        double f = eval(u, g);
        std::vector<std::vector<double>> S, Y;
        std::vector<double> rho;
        constexpr std::size_t kMemory = 8;
        for (int it = 0; it < budget_; ++it) {
            // Two-loop recursion.
            d = g;
            std::vector<double> alpha(S.size());
            for (std::size_t i = S.size(); i-- > 0;) {
                alpha[i] = rho[i] * dot(S[i], d);
                axpy(-alpha[i], Y[i], d);
            }
            double gamma;
            if (!S.empty()) {
                gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            } else {
                const double gmax = max_abs(g);
                if (gmax == 0.0) break;
                gamma = 0.1 * std::sqrt(f / static_cast<double>(interior_ + 1)) / gmax;
            }
            for (auto& v : d) v *= gamma;
            for (std::size_t i = 0; i < S.size(); ++i) {
                const double beta = rho[i] * dot(Y[i], d);
                axpy(alpha[i] - beta, S[i], d);
            }
            for (auto& v : d) v = -v;
            double slope = dot(g, d);
            if (!(slope < 0.0)) {
                // Not a descent direction: restart from steepest descent.
                S.clear();
                Y.clear();
                rho.clear();
                continue;
            }
            double step = 1.0, f_new = f;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t i = 0; i < dim_; ++i) u_new[i] = u[i] + step * d[i];
                project(u_new);
                f_new = eval(u_new, g_new);
                if (f_new <= f + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            std::vector<double> s_k(dim_), y_k(dim_);
            for (std::size_t i = 0; i < dim_; ++i) {
                s_k[i] = u_new[i] - u[i];
                y_k[i] = g_new[i] - g[i];
            }
            const double sy = dot(s_k, y_k);
            if (sy > 1e-300) {
                if (S.size() == kMemory) {
                    S.erase(S.begin());
                    Y.erase(Y.begin());
                    rho.erase(rho.begin());
                }
                S.push_back(std::move(s_k));
                Y.push_back(std::move(y_k));
                rho.push_back(1.0 / sy);
            }
            const double drop = f - f_new;
            u.swap(u_new);
            g.swap(g_new);
            f = f_new;
            if (drop <= 1e-14 * f) break;
        }
        apply(u);
        return drop_repeats(nodes_);
    }

private:
    std::size_t idx(std::size_t node, std::size_t comp, std::size_t part) const {
        return (node * n_ + comp) * 2 + part;
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }
    static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
    }
    static double max_abs(const std::vector<double>& a) {
        double m = 0.0;
        for (double v : a) m = std::max(m, std::abs(v));
        return m;
    }

    void apply(const std::vector<double>& u) {
        for (std::size_t j = 0; j < interior_; ++j) {
            CVec& p = nodes_[j + 1];
            for (std::size_t c = 0; c < n_; ++c) {
                p[c] = {x0_[idx(j, c, 0)] + scale_[idx(j, c, 0)] * u[idx(j, c, 0)],
                        x0_[idx(j, c, 1)] + scale_[idx(j, c, 1)] * u[idx(j, c, 1)]};
            }
        }
    }

    // Pulls nodes that left the ball back inside and rewrites u to match.
    void project(std::vector<double>& u) {
        for (std::size_t j = 0; j < interior_; ++j) {
            CVec p(n_);
            for (std::size_t c = 0; c < n_; ++c)
                p[c] = {x0_[idx(j, c, 0)] + scale_[idx(j, c, 0)] * u[idx(j, c, 0)],
                        x0_[idx(j, c, 1)] + scale_[idx(j, c, 1)] * u[idx(j, c, 1)]};
            if (p.norm() <= kNodeRadius) continue;
            keep_inside(p);
            for (std::size_t c = 0; c < n_; ++c) {
                u[idx(j, c, 0)] = (p[c].real() - x0_[idx(j, c, 0)]) / scale_[idx(j, c, 0)];
                u[idx(j, c, 1)] = (p[c].imag() - x0_[idx(j, c, 1)]) / scale_[idx(j, c, 1)];
            }
        }
    }

    // Energy and its gradient in u by central differences (step 1e-6 in x).
    double eval(const std::vector<double>& u, std::vector<double>& grad) {
        apply(u);
        const std::size_t segs = nodes_.size() - 1;
        std::vector<double> len(segs);
        double energy = 0.0;
        for (std::size_t i = 0; i < segs; ++i) {
            len[i] = segment_length_g3(nodes_[i], nodes_[i + 1]);
            energy += len[i] * len[i];
        }
        constexpr double h = 1e-6;
        for (std::size_t j = 0; j < interior_; ++j) {
            CVec& p = nodes_[j + 1];
            for (std::size_t c = 0; c < n_; ++c) {
                for (std::size_t part = 0; part < 2; ++part) {
                    const cplx orig = p[c];
                    const cplx bump = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
                    p[c] = orig + bump;
                    const double lp0 = segment_length_g3(nodes_[j], p), lp1 = segment_length_g3(p, nodes_[j + 2]);
                    p[c] = orig - bump;
                    const double lm0 = segment_length_g3(nodes_[j], p), lm1 = segment_length_g3(p, nodes_[j + 2]);
                    p[c] = orig;
                    const double de = (lp0 * lp0 + lp1 * lp1 - lm0 * lm0 - lm1 * lm1) / (2.0 * h);
                    grad[idx(j, c, part)] = std::isfinite(de) ? de * scale_[idx(j, c, part)] : 0.0;
                }
            }
        }
        return std::isfinite(energy) ? energy : std::numeric_limits<double>::infinity();
    }

    std::vector<CVec> nodes_;
    int budget_;
    std::size_t n_ = 0, interior_ = 0, dim_ = 0;
    std::vector<double> x0_, scale_;
};

bool decided(const DistanceBracket& b, const BracketOptions& o) {
    return o.decide_at && (b.upper < *o.decide_at || b.lower > *o.decide_at);
}

}  // namespace

DistanceBracket distance_bracket(const CVec& z, const CVec& w, const BracketOptions& opts) {
    if (z.size() != w.size()) throw std::invalid_argument("distance_bracket: dimension mismatch");
    check_boundary(z);
    check_boundary(w);
    if ((w - z).norm_sq() == 0.0) return {0.0, 0.0, Curve::point(z)};

    std::vector<std::vector<CVec>> candidates;
    candidates.push_back({z, w});
    auto far_from = [](const CVec& a, const CVec& b) { return (a - b).norm_sq() > 1e-28; };
    if (z.norm_sq() > 0.0) {
        const CVec corner = proj_P(z, w);
        if (far_from(corner, z) && far_from(corner, w)) candidates.push_back({z, corner, w});
    }
    if (w.norm_sq() > 0.0) {
        const CVec corner = proj_P(w, z);
        if (far_from(corner, z) && far_from(corner, w)) candidates.push_back({z, corner, w});
    }
    if (z.norm_sq() > 0.0 && w.norm_sq() > 0.0) candidates.push_back({z, CVec(z.size()), w});

    auto best_of = [](const std::vector<Measured>& ms) {
        return std::min_element(ms.begin(), ms.end(),
                                [](const Measured& a, const Measured& b) { return a.length < b.length; });
    };
    std::vector<Measured> measured{measure(candidates.front())};
    const double chord = measured.front().length;
    if (opts.decide_at && chord < *opts.decide_at) {
        // Settled on the inside by the chord alone; the cheap minorants suffice below.
        return {std::max(lower_bound_log_gap(z, w), lower_bound_hyperbolic(z, w)), chord,
                Curve(measured.front().nodes)};
    }
    DistanceBracket out{0.0, chord, Curve(measured.front().nodes)};
    out.lower = opts.decide_at ? lower_bound_with_scales(z, w, {chord, *opts.decide_at})
                               : lower_bound_with_scales(z, w, {chord});
    if (decided(out, opts)) return out;
    for (std::size_t i = 1; i < candidates.size(); ++i) measured.push_back(measure(candidates[i]));
    Measured best = *best_of(measured);
    out.upper = best.length;
    out.witness = Curve(best.nodes);
    if (opts.budget <= 0 || decided(out, opts)) return out;

    // Coarse level on every candidate, then refine the winner.
    std::size_t k = std::min<std::size_t>(8, std::max<std::size_t>(opts.max_nodes, 1));
    std::vector<Measured> coarse;
    for (const auto& c : candidates) {
        PathOptimizer opt(resample(c, k), opts.budget);
        coarse.push_back(measure(opt.run()));
    }
    Measured current = *best_of(coarse);
    if (current.length < best.length) best = current;
    out.upper = best.length;
    out.witness = Curve(best.nodes);
    while (!decided(out, opts) && k < opts.max_nodes) {
        k = std::min(2 * k, opts.max_nodes);
        PathOptimizer opt(resample(current.nodes, k), opts.budget);
        Measured next = measure(opt.run());
        const double prev = best.length;
        current = next;
        if (next.length < best.length) best = std::move(next);
        out.upper = best.length;
        out.witness = Curve(best.nodes);
        if (prev - best.length < 1e-6 * prev) break;
    }
    return out;
}

DistanceBracket distance_bracket(const CVec& z, const CVec& w, int budget) {
    BracketOptions o;
    o.budget = budget;
    return distance_bracket(z, w, o);
}

// ---------------------------------------------------------------- regions

bool in_polycylinder(const PolyCylinder& d, const CVec& w) {
    const CVec& z = d.center;
    const double s = z.norm_sq();
    if (s == 0.0) return w.norm() < d.radius;
    const double m = 1.0 - s;
    const CVec para = proj_P(z, w);
    const CVec perp = w - para;
    return (z - para).norm() < d.radius * m * std::sqrt(m) && perp.norm() < d.radius * m;
}

const char* to_string(Membership m) {
    switch (m) {
        case Membership::in: return "in";
        case Membership::out: return "out";
        default: return "unknown";
    }
}

Membership in_ball_certified(const GeodesicBall& b, const CVec& w, int budget) {
    BracketOptions o;
    o.budget = budget;
    o.decide_at = b.radius;
    const DistanceBracket br = distance_bracket(b.center, w, o);
    if (br.upper < b.radius) return Membership::in;
    if (br.lower > b.radius) return Membership::out;
    return Membership::unknown;
}

CVec to_axis_coords(const CVec& z, const CVec& w) {
    if (z.norm_sq() == 0.0) return w;
    return unitary_to_axis(z) * w;
}

CVec from_axis_coords(const CVec& z, const CVec& u) {
    if (z.norm_sq() == 0.0) return u;
    return unitary_to_axis(z).adjoint() * u;
}

namespace {

// Axis frame of a polycylinder: radial and tangential half-widths plus U_z*.
struct Frame {
    std::size_t n = 0;
    double t = 0.0;
    double rho_radial = 0.0;
    double rho_tangent = 0.0;
    bool origin = false;
    CMat back;  // U_z^*

    Frame(const CVec& z, double r) : n(z.size()), t(z.norm()) {
        const double m = 1.0 - z.norm_sq();
        origin = t == 0.0;
        rho_radial = origin ? r : r * m * std::sqrt(m);
        rho_tangent = origin ? r : r * m;
        if (!origin) back = unitary_to_axis(z).adjoint();
    }

    CVec to_ball(const CVec& u) const { return origin ? u : back * u; }

    double box_volume() const {
        if (origin) return std::pow(2.0 * rho_radial, static_cast<double>(2 * n));
        return std::pow(2.0 * rho_radial, 2.0) * std::pow(2.0 * rho_tangent, static_cast<double>(2 * n - 2));
    }

    CVec sample_box(CounterRng& rng) const {
        CVec u(n);
        if (origin) {
            for (std::size_t j = 0; j < n; ++j)
                u[j] = {rng.uniform(-rho_radial, rho_radial), rng.uniform(-rho_radial, rho_radial)};
            return to_ball(u);
        }
        u[0] = {t + rng.uniform(-rho_radial, rho_radial), rng.uniform(-rho_radial, rho_radial)};
        for (std::size_t j = 1; j < n; ++j)
            u[j] = {rng.uniform(-rho_tangent, rho_tangent), rng.uniform(-rho_tangent, rho_tangent)};
        return to_ball(u);
    }

    CVec sample_region(CounterRng& rng) const {
        if (origin) return rho_radial * uniform_in_unit_ball(rng, n);
        CVec u(n);
        u[0] = t + rho_radial * uniform_in_unit_disk(rng);
        if (n > 1) {
            const CVec tail = rho_tangent * uniform_in_unit_ball(rng, n - 1);
            for (std::size_t j = 1; j < n; ++j) u[j] = tail[j - 1];
        }
        return to_ball(u);
    }
};

}  // namespace

CVec sample_polycylinder(const PolyCylinder& d, CounterRng& rng) {
    return Frame(d.center, d.radius).sample_region(rng);
}

double unit_ball_volume(std::size_t k) {
    const double h = 0.5 * static_cast<double>(k);
    return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double polycylinder_volume(const PolyCylinder& d) {
    check_boundary(d.center);
    const std::size_t n = d.center.size();
    if (d.center.norm_sq() == 0.0) return unit_ball_volume(2 * n) * std::pow(d.radius, 2.0 * n);
    const Frame f(d.center, d.radius);
    return std::numbers::pi * f.rho_radial * f.rho_radial * unit_ball_volume(2 * n - 2) *
           std::pow(f.rho_tangent, static_cast<double>(2 * n - 2));
}

// ---------------------------------------------------------------- checks

namespace {

VerificationReport box_check(const char* name, const CVec& z, double r, double factor,
                             std::size_t samples, std::uint64_t seed, bool polycylinder) {
    check_boundary(z);
    const double m = 1.0 - z.norm_sq();
    const std::size_t n = z.size();
    const Frame frame(z, r);
    const auto ratios = parallel_map<double>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id(name), i);
        const CVec w = polycylinder ? frame.sample_region(rng) : z + (r * m) * uniform_in_unit_ball(rng, n);
        return (1.0 - w.norm_sq()) / m;
    });
    VerificationReport rep;
    rep.suite_name = name;
    rep.n = n;
    rep.set_param("r", r);
    rep.set_param("abs_z", z.norm());
    rep.set_param("seed", static_cast<double>(seed));
    rep.samples = samples;
    const double lo = 1.0 - factor * r, hi = 1.0 + factor * r;
    for (double q : ratios) {
        rep.observe(q);
        if (!(q >= lo && q <= hi)) ++rep.violations;
    }
    rep.set_value("bound_lo", lo);
    rep.set_value("bound_hi", hi);
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace

VerificationReport carleson_box_check(const CVec& z, double r, std::size_t samples, std::uint64_t seed) {
    if (!(r > 0.0 && r < 0.5)) throw std::invalid_argument("carleson_box_check needs 0 < r < 1/2");
    return box_check("carleson_box", z, r, 2.0, samples, seed, false);
}

VerificationReport carleson_polycylinder_check(const CVec& z, double r, std::size_t samples,
                                               std::uint64_t seed) {
    if (!(r > 0.0 && r < 0.25)) throw std::invalid_argument("carleson_polycylinder_check needs 0 < r < 1/4");
    return box_check("carleson_polycylinder", z, r, 4.0, samples, seed, true);
}

VerificationReport inclusion_check(const CVec& z, double r, std::size_t samples, std::uint64_t seed,
                                   int budget) {
    if (!(r > 0.0 && r < 1.0 / 12.0)) throw std::invalid_argument("inclusion_check needs 0 < r < 1/12");
    check_boundary(z);
    const std::size_t n = z.size();
    BracketOptions opts;
    opts.budget = budget;
    opts.decide_at = r;

    // (i) D(z, r/10) inside B(z, r).
    enum Outcome : int { ok = 0, violation = 1, inconclusive = 2 };
    struct Sample {
        Outcome outcome = ok;
        double ratio = 0.0;      // upper/r in (i), lower/r in (ii) outside D(z, 2r)
        bool outside_2r = false;
        bool certified_in = false;
    };
    const Frame inner_frame(z, r / 10.0);
    const auto part_i = parallel_map<Sample>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("inclusion-inner"), i);
        const CVec w = inner_frame.sample_region(rng);
        const DistanceBracket b = distance_bracket(z, w, opts);
        Sample s;
        s.ratio = b.upper / r;
        s.certified_in = b.upper < r;
        s.outcome = b.upper < r ? ok : (b.lower > r ? violation : inconclusive);
        return s;
    });

    // (ii) B(z, r) inside D(z, 2r), probed from D(z, 3r).
    const Frame outer_frame(z, 3.0 * r);
    const PolyCylinder d2{z, 2.0 * r};
    const auto part_ii = parallel_map<Sample>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("inclusion-outer"), i);
        const CVec w = outer_frame.sample_region(rng);
        Sample s;
        s.outside_2r = !in_polycylinder(d2, w);
        const DistanceBracket b = distance_bracket(z, w, opts);
        s.certified_in = b.upper < r;
        s.ratio = b.lower / r;
        if (s.outside_2r) s.outcome = s.certified_in ? violation : (b.lower > r ? ok : inconclusive);
        return s;
    });

    VerificationReport rep;
    rep.suite_name = "inclusion";
    rep.n = n;
    rep.set_param("r", r);
    rep.set_param("abs_z", z.norm());
    rep.set_param("seed", static_cast<double>(seed));
    rep.set_param("budget", budget);
    rep.samples = 2 * samples;
    double max_inner = 0.0, min_outer = std::numeric_limits<double>::infinity();
    std::size_t probed_outside = 0, certified_in_ball = 0, inconc_i = 0, inconc_ii = 0;
    for (const auto& s : part_i) {
        max_inner = std::max(max_inner, s.ratio);
        if (s.outcome == violation) ++rep.violations;
        if (s.outcome == inconclusive) ++inconc_i;
    }
    for (const auto& s : part_ii) {
        if (s.certified_in) ++certified_in_ball;
        if (!s.outside_2r) continue;
        ++probed_outside;
        min_outer = std::min(min_outer, s.ratio);
        if (s.outcome == violation) ++rep.violations;
        if (s.outcome == inconclusive) ++inconc_ii;
    }
    rep.inconclusive = inconc_i + inconc_ii;
    rep.observe(max_inner);
    if (probed_outside > 0) rep.observe(min_outer);
    rep.set_value("inner_max_upper_over_r", max_inner);
    rep.set_value("outer_min_lower_over_r", probed_outside > 0 ? min_outer : 0.0);
    rep.set_value("outer_probed_outside_2r", static_cast<double>(probed_outside));
    rep.set_value("outer_certified_in_ball", static_cast<double>(certified_in_ball));
    rep.set_value("inconclusive_inner", static_cast<double>(inconc_i));
    rep.set_value("inconclusive_outer", static_cast<double>(inconc_ii));
    const double frac = static_cast<double>(rep.inconclusive) / static_cast<double>(rep.samples);
    rep.set_value("inconclusive_fraction", frac);
    rep.pass = rep.violations == 0 && frac <= 0.01;
    return rep;
}

// ---------------------------------------------------------------- volumes

VolumeEstimate volume_estimate(const PolyCylinder& d, std::size_t samples, std::uint64_t seed) {
    if (samples < 1000) throw std::invalid_argument("volume_estimate needs at least 1000 samples");
    check_boundary(d.center);
    const Frame frame(d.center, d.radius);
    const auto hits = parallel_map<char>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("volume-polycylinder"), i);
        return static_cast<char>(in_polycylinder(d, frame.sample_box(rng)));
    });
    const double box = frame.box_volume();
    const double p = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(samples);
    VolumeEstimate v;
    v.estimate = v.lower = v.upper = box * p;
    v.stderr_ = box * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return v;
}

VolumeEstimate volume_estimate(const GeodesicBall& b, std::size_t samples, std::uint64_t seed, int budget) {
    if (samples < 1000) throw std::invalid_argument("volume_estimate needs at least 1000 samples");
    check_boundary(b.center);
    const Frame frame(b.center, 2.0 * b.radius);
    const auto states = parallel_map<Membership>(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("volume-ball"), i);
        const CVec w = frame.sample_box(rng);
        if (!(w.norm() <= kBoundaryGuard)) return Membership::out;
        return in_ball_certified(b, w, budget);
    });
    const double box = frame.box_volume();
    const double N = static_cast<double>(samples);
    const double in = static_cast<double>(std::count(states.begin(), states.end(), Membership::in));
    const double unk = static_cast<double>(std::count(states.begin(), states.end(), Membership::unknown));
    const double p = (in + 0.5 * unk) / N;
    VolumeEstimate v;
    v.estimate = box * p;
    v.stderr_ = box * std::sqrt(p * (1.0 - p) / N);
    v.unknown_fraction = unk / N;
    v.lower = box * in / N;
    v.upper = box * (in + unk) / N;
    return v;
}

}  // namespace psilab

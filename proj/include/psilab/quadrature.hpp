#pragma once

// Gauss-Legendre rules and a globally adaptive integrator: the interval with
// the largest error estimate is bisected until the summed estimate meets the
// requested tolerance. Each interval is integrated with the 20-point rule and
// its error estimated against the 10-point rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace psilab {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on the Legendre recurrence.
GaussRule make_gauss_legendre(std::size_t order);

/// Cached rules used by the adaptive integrator.
const GaussRule& gauss_legendre_10();
const GaussRule& gauss_legendre_20();

struct IntegrationResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    std::size_t intervals = 0;
    int depth = 0;
};

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    int depth;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel integrate_panel(F& f, double a, double b, int depth) {
    const GaussRule& g10 = gauss_legendre_10();
    const GaussRule& g20 = gauss_legendre_20();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s10 = 0.0, s20 = 0.0;
    for (std::size_t i = 0; i < g10.nodes.size(); ++i) s10 += g10.weights[i] * f(c + h * g10.nodes[i]);
    for (std::size_t i = 0; i < g20.nodes.size(); ++i) s20 += g20.weights[i] * f(c + h * g20.nodes[i]);
    return {a, b, h * s20, std::abs(h * (s20 - s10)), depth};
}

}  // namespace detail

/// Integrates f over the consecutive intervals given by `breaks` (at least two
/// ascending points). Stops when the error estimate is below
/// max(abs_tol, rel_tol * |value|). Throws IntegrationError once an interval
/// would need bisecting beyond max_depth.
template <class F>
IntegrationResult integrate_adaptive(F&& f, std::span<const double> breaks, double abs_tol,
                                     double rel_tol = 0.0, int max_depth = 40) {
    if (breaks.size() < 2) throw std::invalid_argument("integrate_adaptive needs two breakpoints");
    std::priority_queue<detail::Panel> heap;
    IntegrationResult res;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] < breaks[i]) throw std::invalid_argument("breakpoints must ascend");
        if (breaks[i + 1] == breaks[i]) continue;
        heap.push(detail::integrate_panel(f, breaks[i], breaks[i + 1], 0));
        res.evaluations += 30;
    }
    auto totals = [&heap]() {
        // Re-summing from scratch keeps the totals free of cancellation drift.
        auto copy = heap;
        double v = 0.0, e = 0.0;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().error;
            copy.pop();
        }
        return std::pair{v, e};
    };
    double value = 0.0, error = 0.0;
    std::tie(value, error) = totals();
    std::size_t since_resum = 0;
    while (!heap.empty() && error > std::max(abs_tol, rel_tol * std::abs(value))) {
        detail::Panel worst = heap.top();
        // Stop when the worst panel is already at roundoff level.
        if (worst.error <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(worst.value)) break;
        if (worst.depth >= max_depth) {
            throw IntegrationError("adaptive quadrature did not converge: depth " +
                                   std::to_string(max_depth) + " reached on [" +
                                   std::to_string(worst.a) + ", " + std::to_string(worst.b) +
                                   "], error estimate " + std::to_string(error) + ", value " +
                                   std::to_string(value));
        }
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const detail::Panel left = detail::integrate_panel(f, worst.a, mid, worst.depth + 1);
        const detail::Panel right = detail::integrate_panel(f, mid, worst.b, worst.depth + 1);
        res.evaluations += 60;
        res.depth = std::max(res.depth, worst.depth + 1);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if (++since_resum == 32) {
            std::tie(value, error) = totals();
            since_resum = 0;
        }
    }
    std::tie(value, error) = totals();
    res.value = value;
    res.error = error;
    res.intervals = heap.size();
    return res;
}

template <class F>
IntegrationResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                                     double rel_tol = 0.0, int max_depth = 40) {
    const double br[2] = {a, b};
    return integrate_adaptive(std::forward<F>(f), std::span<const double>(br, 2), abs_tol, rel_tol,
                              max_depth);
}

}  // namespace psilab

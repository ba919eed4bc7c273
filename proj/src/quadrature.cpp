#include "psilab/quadrature.hpp"

#include <limits>
#include <numbers>

namespace psilab {

GaussRule make_gauss_legendre(std::size_t order) {
    if (order == 0) throw std::invalid_argument("Gauss-Legendre order must be positive");
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    const double fac = std::numbers::pi / (static_cast<double>(order) + 0.5);
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos((static_cast<double>(i) + 0.75) * fac);
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= order; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
            }
            pp = static_cast<double>(order) * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= 4.0 * std::numeric_limits<double>::epsilon()) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.nodes[i] = -z;
        rule.nodes[order - 1 - i] = z;
        rule.weights[i] = rule.weights[order - 1 - i] = w;
    }
    return rule;
}

const GaussRule& gauss_legendre_10() {
    static const GaussRule rule = make_gauss_legendre(10);
    return rule;
}

const GaussRule& gauss_legendre_20() {
    static const GaussRule rule = make_gauss_legendre(20);
    return rule;
}

}  // namespace psilab

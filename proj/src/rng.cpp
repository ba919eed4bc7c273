#include "psilab/rng.hpp"

#include <cmath>
#include <numbers>

namespace psilab {

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

CVec uniform_on_unit_sphere(CounterRng& rng, std::size_t m) {
    CVec v(m);
    double nn = 0.0;
    while (nn < 1e-300) {
        for (std::size_t j = 0; j < m; ++j) v[j] = rng.complex_normal();
        nn = v.norm_sq();
    }
    return (1.0 / std::sqrt(nn)) * v;
}

CVec uniform_in_unit_ball(CounterRng& rng, std::size_t m) {
    CVec v = uniform_on_unit_sphere(rng, m);
    const double rad = std::pow(rng.uniform(), 1.0 / static_cast<double>(2 * m));
    return rad * v;
}

cplx uniform_in_unit_disk(CounterRng& rng) {
    const double rad = std::sqrt(rng.uniform());
    const double ang = 2.0 * std::numbers::pi * rng.uniform();
    return std::polar(rad, ang);
}

}  // namespace psilab

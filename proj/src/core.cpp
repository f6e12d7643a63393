#include "kdr/core.hpp"

#include <cmath>
#include <stdexcept>

namespace kdr {

bool all_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void wrap_torus(State& x) {
    for (double& c : x.coords) {
        c -= std::floor(c);
        if (c >= 1.0) c = 0.0; // floor rounding can land exactly on 1
        if (c < 0.0) c = 0.0;
    }
}

void step_into(const SystemSpec& sys, double gamma, int step_index, const State& x,
               const std::vector<double>& increment, State& out) {
    sys.map_at(step_index)(gamma, x, out);
    if (!increment.empty()) {
        if (increment.size() != out.coords.size()) {
            throw std::runtime_error("step: noise increment dimension mismatch at step " +
                                     std::to_string(step_index));
        }
        for (std::size_t i = 0; i < out.coords.size(); ++i) {
            out.coords[i] += increment[i];
        }
    }
    if (sys.domain == Domain::TorusMod1) {
        wrap_torus(out);
    }
    if (!all_finite(out.coords)) {
        throw std::runtime_error("step: non-finite state at step " + std::to_string(step_index));
    }
}

State step(const SystemSpec& sys, double gamma, int step_index, const State& x,
           const std::vector<double>& increment) {
    State out(static_cast<std::size_t>(sys.dimension));
    step_into(sys, gamma, step_index, x, increment, out);
    return out;
}

double check_map_derivative(const SystemSpec& sys, double gamma, const State& x, double h,
                            int step_index) {
    if (h <= 0.0) {
        throw std::invalid_argument("check_map_derivative: h must be positive");
    }
    State plus(static_cast<std::size_t>(sys.dimension));
    State minus(static_cast<std::size_t>(sys.dimension));
    TangentVector analytic(static_cast<std::size_t>(sys.dimension));
    sys.map_at(step_index)(gamma + h, x, plus);
    sys.map_at(step_index)(gamma - h, x, minus);
    sys.map_derivative_at(step_index)(gamma, x, analytic);
    double worst = 0.0;
    for (int i = 0; i < sys.dimension; ++i) {
        const double fd = (plus[static_cast<std::size_t>(i)] - minus[static_cast<std::size_t>(i)]) / (2.0 * h);
        const double d = analytic[static_cast<std::size_t>(i)];
        const double scale = std::max({std::abs(d), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(fd - d) / scale);
    }
    return worst;
}

} // namespace kdr

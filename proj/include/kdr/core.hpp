#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kdr/rng.hpp"

namespace kdr {

// Point in state space, length M.
struct State {
    std::vector<double> coords;

    State() = default;
    explicit State(std::size_t dim, double fill = 0.0) : coords(dim, fill) {}
    explicit State(std::vector<double> values) : coords(std::move(values)) {}

    std::size_t size() const { return coords.size(); }
    double& operator[](std::size_t i) { return coords[i]; }
    double operator[](std::size_t i) const { return coords[i]; }
};

// Perturbation direction, units of state per unit of the parameter.
struct TangentVector {
    std::vector<double> coords;

    TangentVector() = default;
    explicit TangentVector(std::size_t dim, double fill = 0.0) : coords(dim, fill) {}
    explicit TangentVector(std::vector<double> values) : coords(std::move(values)) {}

    std::size_t size() const { return coords.size(); }
    double& operator[](std::size_t i) { return coords[i]; }
    double operator[](std::size_t i) const { return coords[i]; }
};

enum class Domain {
    Euclidean,
    TorusMod1, // every coordinate wrapped to [0, 1) after each step
};

// Writes f_gamma(x) to `out` (resized to the state dimension).
using MapFn = std::function<void(double gamma, const State& x, State& out)>;
// Writes d f_gamma / d gamma at (gamma, x) to `out`.
using MapDerivFn = std::function<void(double gamma, const State& x, TangentVector& out)>;

// A parameterized (possibly time-inhomogeneous) deterministic skeleton
// x -> f_gamma(x). Time-inhomogeneous systems carry one map per step;
// homogeneous systems carry a single entry used at every step.
struct SystemSpec {
    int dimension = 1;
    Domain domain = Domain::Euclidean;
    std::vector<MapFn> maps;
    std::vector<MapDerivFn> map_derivatives;
    // Engaged for time-inhomogeneous systems: the fixed horizon T.
    // Disengaged: time-homogeneous, orbits may run indefinitely.
    std::optional<int> horizon;

    bool time_homogeneous() const { return !horizon.has_value(); }

    const MapFn& map_at(int step) const {
        return maps.size() == 1 ? maps.front() : maps.at(static_cast<std::size_t>(step));
    }
    const MapDerivFn& map_derivative_at(int step) const {
        return map_derivatives.size() == 1 ? map_derivatives.front()
                                           : map_derivatives.at(static_cast<std::size_t>(step));
    }
};

// Observable of the final (or running) state. eval receives the run's
// gamma so chart-corrected observables with an explicit parameter term
// are expressible; gamma-independent observables ignore it.
struct Observable {
    std::function<double(double gamma, const State& x)> eval;
    // d Phi / d gamma at fixed x; empty when the observable carries no
    // explicit parameter dependence.
    std::function<double(double gamma, const State& x)> param_derivative;
};

struct InitialDistribution {
    std::function<void(double gamma, RngStream& rng, State& out)> sampler;
    // Score of the initial density in gamma, (d h0 / d gamma) / h0 at x0.
    std::function<double(double gamma, const State& x0)> score_gamma;
};

// Wraps every coordinate to [0, 1) in place.
void wrap_torus(State& x);

// One step of the noised dynamics: f_gamma(x) + increment, wrapped when the
// domain is a torus. `increment` is the state-space noise increment (the
// embedded form of the sample); pass an empty vector for a noiseless step.
// Throws std::runtime_error naming `step_index` if the result is non-finite.
State step(const SystemSpec& sys, double gamma, int step_index, const State& x,
           const std::vector<double>& increment);

// In-place variant used by the hot loops; `scratch` holds f_gamma(x).
void step_into(const SystemSpec& sys, double gamma, int step_index, const State& x,
               const std::vector<double>& increment, State& out);

// Worst componentwise discrepancy between map_derivative and a central
// finite difference of the map in gamma with half-width h. Diagnostic only.
double check_map_derivative(const SystemSpec& sys, double gamma, const State& x, double h,
                            int step_index = 0);

bool all_finite(const std::vector<double>& values);

} // namespace kdr

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kdr/core.hpp"
#include "kdr/estimators.hpp"
#include "kdr/noise.hpp"

namespace kdr {

// Density on a uniform partition of [0, 1): weights[i] is the density at
// bin center (i + 0.5) / N, normalized so sum(weights) / N == 1.
struct GridDensity {
    std::vector<double> weights;

    explicit GridDensity(std::size_t bins = 0, double fill = 1.0) : weights(bins, fill) {}

    std::size_t size() const { return weights.size(); }
    double bin_center(std::size_t i) const {
        return (static_cast<double>(i) + 0.5) / static_cast<double>(size());
    }
    double total_mass() const;
    void normalize();
    // Mean of phi against the density.
    double integrate(const std::function<double(double)>& phi) const;
    std::string to_csv() const;
};

// L1 distance between two densities on the same grid.
double l1_distance(const GridDensity& a, const GridDensity& b);

// One application of the noise-then-map transfer step to a grid density:
// bin mass is pushed forward through `map` (mod 1, split linearly between
// the two nearest destination bins), then circularly convolved with a
// wrapped Gaussian kernel of scale sigma, then renormalized. sigma == 0
// skips the convolution.
GridDensity push_density(const GridDensity& d, const std::function<double(double)>& map,
                         double sigma);

// Fixed point of push_density from the uniform density; power iteration
// stops when the L1 change drops below tol. Throws after max_iterations.
GridDensity stationary_density(const std::function<double(double)>& map, double sigma,
                               std::size_t bins, double tol, int max_iterations = 100000);

// Central finite difference of the stationary average of phi in gamma.
// `map_family(gamma)` must return the one-dimensional map at that gamma.
double grid_linear_response(const std::function<std::function<double(double)>(double)>& map_family,
                            double sigma, std::size_t bins, double delta_gamma,
                            const std::function<double(double)>& phi, double gamma = 0.0,
                            double tol = 1e-10);

struct FdOracleConfig {
    double delta_gamma = 1e-3;
    std::int64_t paths = 2;
    std::uint64_t seed = 0;
};

// Common-random-numbers central finite difference of the ensemble mean of
// the observable at horizon T: per path the identical noise stream is
// replayed at gamma +/- delta_gamma. `noises` may be empty (deterministic
// system).
MonteCarloEstimate fd_ensemble_response(const SystemSpec& sys, const NoiseModels& noises,
                                        const Observable& observable,
                                        const InitialDistribution& init, int horizon,
                                        const FdOracleConfig& cfg, double gamma = 0.0);

// Histogram of a long noised orbit on [0, 1): `problem` semantics as in
// ergodic_estimator (spin-up discarded). Returned as a GridDensity.
GridDensity orbit_histogram(const SystemSpec& sys, const NoiseModels& noises, double gamma,
                            std::int64_t spin_up, std::int64_t samples, std::size_t bins,
                            std::uint64_t seed);

} // namespace kdr

#pragma once

#include <cstdint>
#include <vector>

namespace kdr {

// Order-of-magnitude tuning guidance balancing the three error sources of
// the single-orbit estimator:
//
//   eps = O(theta^W) + O(sqrt(W) / (sigma sqrt(L))) + O(sigma / (dgamma (1 - theta))).
//
// All O(.) constants are taken as 1, so the outputs are guidance, not
// certificates.
struct CostModelInput {
    double eps = 0.1;         // target total error
    double theta = 0.5;       // correlation-decay rate, user-estimated, in (0, 1)
    double delta_gamma = 1.0; // parameter step of interest
    double sigma = 0.0;       // fixed noise scale (intrinsic-noise case)
};

struct ErrorBreakdown {
    double bias = 0.0;     // theta^W
    double sampling = 0.0; // sqrt(W) / (sigma sqrt(L))
    double noise = 0.0;    // sigma / (delta_gamma (1 - theta)), approximation case
};

struct CostModelOutput {
    int window = 0;          // W
    double sigma = 0.0;      // recommended scale (approximation case only)
    std::int64_t samples = 0; // L
    ErrorBreakdown predicted_error;
};

// Intrinsic noise: sigma fixed, balance bias against sampling error.
//   W = ceil(log eps / log theta),  L = ceil(W / (sigma^2 eps^2)).
CostModelOutput recommend_intrinsic(double eps, double theta, double sigma);

// Noise-as-mollification: additionally picks sigma = eps * dgamma * (1 - theta).
CostModelOutput recommend_approximation(double eps, double theta, double delta_gamma);

// Fits the decay rate theta from the empirical autocorrelation of an
// observable series along a pilot orbit: least squares on
// log |autocorrelation| over lags 1..max_lag. A pragmatic stand-in for a
// quantity the theory leaves informal.
double fit_theta(const std::vector<double>& phi_series, int max_lag = 50);

} // namespace kdr

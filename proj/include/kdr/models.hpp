#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "kdr/core.hpp"
#include "kdr/estimators.hpp"
#include "kdr/noise.hpp"

namespace kdr {

// A ready-to-estimate system: skeleton, per-step noise (empty for
// deterministic baselines), observable, initial distribution.
struct Problem {
    SystemSpec sys;
    NoiseModels noise;
    Observable observable;
    InitialDistribution init;
    std::vector<std::string> warnings;
};

// --- Tent map with elevating center -----------------------------------
//
//   f_gamma(x) = gamma * x         for x <= 0.5
//                gamma * (1 - x)   otherwise,     mod 1,
//
// with N(0, sigma^2) noise on the circle and Phi(x) = x. Default
// parameters gamma = 3, sigma = 0.1, window 7.
struct TentMapParams {
    double gamma = 3.0;
    double sigma = 0.1;
};

Problem build_tent(const TentMapParams& params);
inline Problem build_tent(double gamma, double sigma) { return build_tent(TentMapParams{gamma, sigma}); }

constexpr int tent_default_window = 7;

// --- Tanh network with foliated perturbation ----------------------------
//
// 9 neurons, 50 layers, weight matrix J = C * J0 with C = 4. Two
// coordinate forms:
//   Original: x_{n+1} = J tanh(x_n + gamma 1),        Phi = sum_i x_i
//   Chart:    X_{n+1} = J tanh(X_n) + gamma 1,        Phi = -9 gamma + sum_i X_i,
//             X_0 = Y_0 + gamma 1,  Y_0 ~ N(0, I).
// In chart form the perturbation direction is the constant vector 1, so
// noise can be restricted to that direction.
enum class NetworkForm { Original, Chart };
enum class NetworkNoiseMode { Foliated1D, FullDim, None };

struct NetworkParams {
    double gamma = 0.0;
    double sigma = 1.5;
    NetworkNoiseMode noise_mode = NetworkNoiseMode::Foliated1D;
    NetworkForm form = NetworkForm::Chart;
};

Problem build_network(const NetworkParams& params);

constexpr int network_dimension = 9;
constexpr int network_layers = 50;
constexpr double network_coupling = 4.0;

// The published 9x9 base weight matrix, row-major.
const std::array<double, 81>& network_base_weights();

// Writes / reads the base weights as CSV (audit resource).
std::string network_base_weights_csv();
std::array<double, 81> parse_network_weights_csv(const std::string& csv);

// Norm of the product of layer Jacobians along one sampled path
// (stability diagnostic; printed, not certified).
double network_jacobian_growth(double gamma, std::uint64_t seed);

// --- Linear Gaussian AR(1) control system -------------------------------
//
//   x_{n+1} = a x_n + gamma + noise,  |a| < 1,
//
// stationary law N(gamma / (1 - a), sigma^2 / (1 - a^2)); the linear
// response of the stationary mean is 1 / (1 - a) in closed form.
struct Ar1Params {
    double a = 0.5;
    double gamma = 0.0;
    double sigma = 0.3;
};

Problem build_ar1(const Ar1Params& params);
inline Problem build_ar1(double a, double gamma, double sigma) {
    return build_ar1(Ar1Params{a, gamma, sigma});
}

} // namespace kdr

#include "kdr/costmodel.hpp"

#include <cmath>
#include <stdexcept>

#include "kdr/stats.hpp"

namespace kdr {

namespace {

void validate_common(double eps, double theta) {
    if (!(eps > 0.0)) throw std::invalid_argument("cost model: eps must be positive");
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("cost model: theta must lie in (0, 1)");
    }
}

int window_for(double eps, double theta) {
    // theta^W <= eps.
    const int w = static_cast<int>(std::ceil(std::log(eps) / std::log(theta)));
    return w < 1 ? 1 : w;
}

std::int64_t samples_for(int window, double sigma, double eps) {
    const double l = std::ceil(static_cast<double>(window) / (sigma * sigma * eps * eps));
    return static_cast<std::int64_t>(l);
}

} // namespace

CostModelOutput recommend_intrinsic(double eps, double theta, double sigma) {
    validate_common(eps, theta);
    if (!(sigma > 0.0)) throw std::invalid_argument("cost model: sigma must be positive");
    CostModelOutput out;
    out.window = window_for(eps, theta);
    out.sigma = sigma;
    out.samples = samples_for(out.window, sigma, eps);
    out.predicted_error.bias = std::pow(theta, out.window);
    out.predicted_error.sampling =
        std::sqrt(static_cast<double>(out.window)) / (sigma * std::sqrt(static_cast<double>(out.samples)));
    out.predicted_error.noise = 0.0;
    return out;
}

CostModelOutput recommend_approximation(double eps, double theta, double delta_gamma) {
    validate_common(eps, theta);
    if (!(delta_gamma > 0.0)) throw std::invalid_argument("cost model: delta_gamma must be positive");
    CostModelOutput out;
    out.sigma = eps * delta_gamma * (1.0 - theta);
    out.window = window_for(eps, theta);
    out.samples = samples_for(out.window, out.sigma, eps);
    out.predicted_error.bias = std::pow(theta, out.window);
    out.predicted_error.sampling = std::sqrt(static_cast<double>(out.window)) /
                                   (out.sigma * std::sqrt(static_cast<double>(out.samples)));
    out.predicted_error.noise = out.sigma / (delta_gamma * (1.0 - theta));
    return out;
}

double fit_theta(const std::vector<double>& phi_series, int max_lag) {
    if (max_lag < 1) throw std::invalid_argument("fit_theta: max_lag must be >= 1");
    if (phi_series.size() < static_cast<std::size_t>(4 * max_lag)) {
        throw std::invalid_argument("fit_theta: series too short for the requested lags");
    }
    const double c0 = autocovariance(phi_series, 0);
    if (c0 <= 0.0) throw std::invalid_argument("fit_theta: series has zero variance");
    // Empirical autocorrelations of a finite series carry O(1/sqrt(n))
    // noise; lags below that floor would flatten the fit.
    const double floor =
        std::max(1e-6, 3.0 / std::sqrt(static_cast<double>(phi_series.size())));
    std::vector<double> lags;
    std::vector<double> log_rho;
    for (int k = 1; k <= max_lag; ++k) {
        const double rho = autocovariance(phi_series, k) / c0;
        const double mag = std::abs(rho);
        if (mag < floor) break;
        lags.push_back(static_cast<double>(k));
        log_rho.push_back(std::log(mag));
    }
    if (lags.empty()) {
        throw std::invalid_argument("fit_theta: autocorrelation vanishes at lag 1; theta not identifiable");
    }
    double theta;
    if (lags.size() == 1) {
        // Single usable lag: fit rho_k ~ theta^k through the origin.
        theta = std::exp(log_rho.front());
    } else {
        theta = std::exp(linear_slope(lags, log_rho));
    }
    if (theta >= 1.0) theta = 0.999;
    if (theta <= 0.0) theta = 1e-6;
    return theta;
}

} // namespace kdr

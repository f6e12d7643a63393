#include "kdr/models.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace kdr {

Problem build_tent(const TentMapParams& params) {
    if (params.sigma <= 0.0) {
        throw std::invalid_argument("build_tent: sigma must be positive");
    }
    Problem p;
    if (params.gamma <= 0.0 || params.gamma > 4.0) {
        p.warnings.push_back("tent: gamma outside (0, 4]; orbit may escape the usual branch structure");
    }
    p.sys.dimension = 1;
    p.sys.domain = Domain::TorusMod1;
    p.sys.maps.push_back([](double gamma, const State& x, State& out) {
        out.coords.resize(1);
        const double v = x[0];
        out.coords[0] = v <= 0.5 ? gamma * v : gamma * (1.0 - v);
    });
    p.sys.map_derivatives.push_back([](double, const State& x, TangentVector& out) {
        out.coords.resize(1);
        const double v = x[0];
        out.coords[0] = v <= 0.5 ? v : 1.0 - v;
    });
    p.noise.push_back(std::make_shared<IsotropicGaussian>(params.sigma, 1));
    p.observable.eval = [](double, const State& x) { return x[0]; };
    p.init.sampler = [](double, RngStream& rng, State& out) {
        out.coords.assign(1, rng.uniform());
    };
    return p;
}

namespace {

// Base weight matrix of the 9-neuron chaotic network, row-major.
constexpr std::array<double, 81> k_network_base = {
    -0.54, -1.19, -0.33,  1.66, -0.5,  -1.3,   1.52, -0.5,   1.95,
    -1.6,  -1.55, -1.45,  0.61,  1.92,  0.59, -0.16, -1.14, -1.27,
    -0.59, -0.65, -1.32, -1.46, -0.82, -0.95, -1.47, -0.08, -0.38,
    -0.78, -0.26,  0.87,  1.99,  0.07,  0.87, -0.79, -0.44,  1.11,
     0.8,  -1.28, -0.52, -1.01,  1.49,  1.49, -1.65, -0.45,  0.21,
    -1.77,  0.03, -1.39, -0.28,  0.44,  1.27,  0.61,  0.01, -0.02,
    -0.18, -0.29, -0.73,  0.53, -0.82, -1.58, -1.41,  0.07, -1.84,
     0.64,  0.86,  0.73,  0.96, -0.06,  0.04,  1.1,   1.22, -0.28,
     1.18, -1.95, -0.37,  0.01,  1.24, -0.32,  0.43,  0.06, -1.28,
};

void coupled_tanh(const State& x, std::vector<double>& out) {
    // out = J tanh(x) with J = C * J0.
    const int n = network_dimension;
    double t[network_dimension];
    for (int i = 0; i < n; ++i) t[i] = std::tanh(x[static_cast<std::size_t>(i)]);
    out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = k_network_base.data() + i * n;
        for (int j = 0; j < n; ++j) acc += row[j] * t[j];
        out[static_cast<std::size_t>(i)] = network_coupling * acc;
    }
}

} // namespace

const std::array<double, 81>& network_base_weights() { return k_network_base; }

std::string network_base_weights_csv() {
    std::ostringstream out;
    out.precision(17);
    for (int i = 0; i < network_dimension; ++i) {
        for (int j = 0; j < network_dimension; ++j) {
            if (j) out << ',';
            out << k_network_base[static_cast<std::size_t>(i * network_dimension + j)];
        }
        out << '\n';
    }
    return out.str();
}

std::array<double, 81> parse_network_weights_csv(const std::string& csv) {
    std::array<double, 81> out{};
    std::istringstream in(csv);
    std::string line;
    std::size_t idx = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            if (idx >= out.size()) throw std::invalid_argument("weights csv: too many entries");
            out[idx++] = std::stod(cell);
        }
    }
    if (idx != out.size()) throw std::invalid_argument("weights csv: expected 81 entries");
    return out;
}

Problem build_network(const NetworkParams& params) {
    if (params.noise_mode != NetworkNoiseMode::None && params.sigma <= 0.0) {
        throw std::invalid_argument("build_network: sigma must be positive when noise is enabled");
    }
    Problem p;
    p.sys.dimension = network_dimension;
    p.sys.domain = Domain::Euclidean;
    p.sys.horizon = network_layers;

    if (params.form == NetworkForm::Chart) {
        p.sys.maps.push_back([](double gamma, const State& x, State& out) {
            coupled_tanh(x, out.coords);
            for (double& v : out.coords) v += gamma;
        });
        p.sys.map_derivatives.push_back([](double, const State&, TangentVector& out) {
            out.coords.assign(network_dimension, 1.0);
        });
        p.observable.eval = [](double gamma, const State& x) {
            double s = 0.0;
            for (double v : x.coords) s += v;
            return -static_cast<double>(network_dimension) * gamma + s;
        };
        p.observable.param_derivative = [](double, const State&) {
            return -static_cast<double>(network_dimension);
        };
        p.init.sampler = [](double gamma, RngStream& rng, State& out) {
            out.coords.resize(network_dimension);
            for (double& v : out.coords) v = rng.normal() + gamma;
        };
        p.init.score_gamma = [](double gamma, const State& x0) {
            double s = 0.0;
            for (double v : x0.coords) s += v;
            return s - gamma * static_cast<double>(network_dimension);
        };
    } else {
        p.sys.maps.push_back([](double gamma, const State& x, State& out) {
            State shifted = x;
            for (double& v : shifted.coords) v += gamma;
            coupled_tanh(shifted, out.coords);
        });
        p.sys.map_derivatives.push_back([](double gamma, const State& x, TangentVector& out) {
            // d/dgamma J tanh(x + gamma 1) = J sech^2(x + gamma 1).
            const int n = network_dimension;
            double s[network_dimension];
            for (int i = 0; i < n; ++i) {
                const double c = std::cosh(x[static_cast<std::size_t>(i)] + gamma);
                s[i] = 1.0 / (c * c);
            }
            out.coords.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                const double* row = k_network_base.data() + i * n;
                for (int j = 0; j < n; ++j) acc += row[j] * s[j];
                out.coords[static_cast<std::size_t>(i)] = network_coupling * acc;
            }
        });
        p.observable.eval = [](double, const State& x) {
            double s = 0.0;
            for (double v : x.coords) s += v;
            return s;
        };
        p.init.sampler = [](double, RngStream& rng, State& out) {
            out.coords.resize(network_dimension);
            for (double& v : out.coords) v = rng.normal();
        };
    }

    switch (params.noise_mode) {
    case NetworkNoiseMode::Foliated1D: {
        std::vector<double> dir(network_dimension, 1.0 / std::sqrt(static_cast<double>(network_dimension)));
        p.noise.push_back(std::make_shared<DirectionalGaussian>(params.sigma, std::move(dir)));
        break;
    }
    case NetworkNoiseMode::FullDim:
        p.noise.push_back(std::make_shared<IsotropicGaussian>(params.sigma, network_dimension));
        break;
    case NetworkNoiseMode::None:
        break;
    }
    return p;
}

double network_jacobian_growth(double gamma, std::uint64_t seed) {
    // Frobenius norm of prod_n Df(x_n) along one chart-form path.
    const int n = network_dimension;
    RngStream rng(seed, 0);
    State x(static_cast<std::size_t>(n));
    for (double& v : x.coords) v = rng.normal() + gamma;

    std::vector<double> product(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) product[static_cast<std::size_t>(i * n + i)] = 1.0;
    std::vector<double> jac(static_cast<std::size_t>(n) * n);
    std::vector<double> next(static_cast<std::size_t>(n) * n);

    State z(static_cast<std::size_t>(n));
    for (int layer = 0; layer < network_layers; ++layer) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double t = std::tanh(x[static_cast<std::size_t>(j)]);
                jac[static_cast<std::size_t>(i * n + j)] =
                    network_coupling * k_network_base[static_cast<std::size_t>(i * n + j)] * (1.0 - t * t);
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k) {
                    acc += jac[static_cast<std::size_t>(i * n + k)] * product[static_cast<std::size_t>(k * n + j)];
                }
                next[static_cast<std::size_t>(i * n + j)] = acc;
            }
        }
        std::swap(product, next);
        coupled_tanh(x, z.coords);
        for (double& v : z.coords) v += gamma;
        std::swap(x.coords, z.coords);
    }
    double frob = 0.0;
    for (double v : product) frob += v * v;
    return std::sqrt(frob);
}

Problem build_ar1(const Ar1Params& params) {
    if (std::abs(params.a) >= 1.0) {
        throw std::invalid_argument("build_ar1: |a| must be < 1 (no stationary law otherwise)");
    }
    if (params.sigma <= 0.0) {
        throw std::invalid_argument("build_ar1: sigma must be positive");
    }
    const double a = params.a;
    Problem p;
    p.sys.dimension = 1;
    p.sys.domain = Domain::Euclidean;
    p.sys.maps.push_back([a](double gamma, const State& x, State& out) {
        out.coords.assign(1, a * x[0] + gamma);
    });
    p.sys.map_derivatives.push_back([](double, const State&, TangentVector& out) {
        out.coords.assign(1, 1.0);
    });
    p.noise.push_back(std::make_shared<IsotropicGaussian>(params.sigma, 1));
    p.observable.eval = [](double, const State& x) { return x[0]; };
    p.init.sampler = [](double, RngStream& rng, State& out) {
        out.coords.assign(1, rng.normal());
    };
    return p;
}

} // namespace kdr

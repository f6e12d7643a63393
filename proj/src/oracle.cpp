#include "kdr/oracle.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace kdr {

namespace {

constexpr double k_two_pi = 6.283185307179586476925286766559;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey; length must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? k_two_pi : -k_two_pi) / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& v : a) v /= static_cast<double>(n);
    }
}

// Circular convolution of two real mass vectors of equal length.
std::vector<double> circular_convolve(const std::vector<double>& mass,
                                      const std::vector<double>& kernel) {
    const std::size_t n = mass.size();
    if (is_power_of_two(n)) {
        std::vector<std::complex<double>> fa(n), fb(n);
        for (std::size_t i = 0; i < n; ++i) {
            fa[i] = mass[i];
            fb[i] = kernel[i];
        }
        fft_inplace(fa, false);
        fft_inplace(fb, false);
        for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
        fft_inplace(fa, true);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = fa[i].real();
        return out;
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (mass[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            out[(i + j) % n] += mass[i] * kernel[j];
        }
    }
    return out;
}

// Probability kernel of the wrapped N(0, sigma^2) sampled at offsets j/N,
// exact on the torus up to truncation at +/- 8 sigma of wraps.
std::vector<double> wrapped_gaussian_kernel(std::size_t n, double sigma) {
    std::vector<double> kernel(n, 0.0);
    const int wraps = static_cast<int>(std::ceil(8.0 * sigma)) + 1;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double base = static_cast<double>(j) / static_cast<double>(n);
        double acc = 0.0;
        for (int r = -wraps; r <= wraps; ++r) {
            const double d = base + static_cast<double>(r);
            acc += std::exp(-0.5 * d * d / (sigma * sigma));
        }
        kernel[j] = acc;
        total += acc;
    }
    for (auto& v : kernel) v /= total;
    return kernel;
}

} // namespace

double GridDensity::total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s / static_cast<double>(size());
}

void GridDensity::normalize() {
    const double mass = total_mass();
    if (mass <= 0.0) {
        throw std::runtime_error("GridDensity: non-positive total mass");
    }
    for (auto& w : weights) w /= mass;
}

double GridDensity::integrate(const std::function<double(double)>& phi) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        s += phi(bin_center(i)) * weights[i];
    }
    return s / static_cast<double>(size());
}

std::string GridDensity::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "bin_center,density\n";
    for (std::size_t i = 0; i < size(); ++i) {
        out << bin_center(i) << ',' << weights[i] << '\n';
    }
    return out.str();
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("l1_distance: grid size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a.weights[i] - b.weights[i]);
    }
    return s / static_cast<double>(a.size());
}

GridDensity push_density(const GridDensity& d, const std::function<double(double)>& map,
                         double sigma) {
    const std::size_t n = d.size();
    if (n == 0) throw std::invalid_argument("push_density: empty grid");
    if (sigma < 0.0) throw std::invalid_argument("push_density: sigma must be >= 0");

    // Pushforward: each bin's mass lands at the image of its center and is
    // split linearly between the two nearest destination bins.
    std::vector<double> mass(n, 0.0);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = d.weights[i] / nd;
        if (m == 0.0) continue;
        double t = map(d.bin_center(i));
        t -= std::floor(t);
        if (t >= 1.0) t = 0.0;
        const double u = t * nd - 0.5;
        const double fl = std::floor(u);
        const double frac = u - fl;
        const std::size_t i0 = static_cast<std::size_t>(static_cast<long long>(fl) % static_cast<long long>(n) +
                                                        (fl < 0 ? static_cast<long long>(n) : 0)) % n;
        const std::size_t i1 = (i0 + 1) % n;
        mass[i0] += m * (1.0 - frac);
        mass[i1] += m * frac;
    }

    if (sigma > 0.0) {
        mass = circular_convolve(mass, wrapped_gaussian_kernel(n, sigma));
        // FFT roundoff can leave -1e-17-scale residue; the true result is
        // a convolution of nonnegative masses.
        for (double& v : mass) {
            if (v < 0.0) v = 0.0;
        }
    }

    GridDensity out(n);
    for (std::size_t i = 0; i < n; ++i) out.weights[i] = mass[i] * nd;
    out.normalize();
    return out;
}

GridDensity stationary_density(const std::function<double(double)>& map, double sigma,
                               std::size_t bins, double tol, int max_iterations) {
    if (tol <= 0.0) throw std::invalid_argument("stationary_density: tol must be positive");
    GridDensity current(bins, 1.0);
    for (int it = 0; it < max_iterations; ++it) {
        GridDensity next = push_density(current, map, sigma);
        const double change = l1_distance(next, current);
        current = std::move(next);
        if (change < tol) return current;
    }
    throw std::runtime_error(
        "stationary_density: no convergence after max iterations (sigma may be too small for the grid)");
}

double grid_linear_response(const std::function<std::function<double(double)>(double)>& map_family,
                            double sigma, std::size_t bins, double delta_gamma,
                            const std::function<double(double)>& phi, double gamma, double tol) {
    if (delta_gamma <= 0.0) {
        throw std::invalid_argument("grid_linear_response: delta_gamma must be positive");
    }
    const GridDensity plus = stationary_density(map_family(gamma + delta_gamma), sigma, bins, tol);
    const GridDensity minus = stationary_density(map_family(gamma - delta_gamma), sigma, bins, tol);
    return (plus.integrate(phi) - minus.integrate(phi)) / (2.0 * delta_gamma);
}

MonteCarloEstimate fd_ensemble_response(const SystemSpec& sys, const NoiseModels& noises,
                                        const Observable& observable,
                                        const InitialDistribution& init, int horizon,
                                        const FdOracleConfig& cfg, double gamma) {
    if (cfg.delta_gamma <= 0.0) {
        throw std::invalid_argument("fd_ensemble_response: delta_gamma must be positive");
    }
    if (cfg.paths < 2) throw std::invalid_argument("fd_ensemble_response: need at least 2 paths");
    if (horizon < 1) throw std::invalid_argument("fd_ensemble_response: horizon must be >= 1");

    const bool noisy = !noises.empty();
    StreamingMoments diffs;
    State x(static_cast<std::size_t>(sys.dimension));
    State z(static_cast<std::size_t>(sys.dimension));
    NoiseSample y;

    const auto run_path = [&](double g, std::int64_t l) {
        // The stream is replayed identically at both parameter values.
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(l));
        init.sampler(g, rng, x);
        for (int m = 0; m < horizon; ++m) {
            sys.map_at(m)(g, x, z);
            if (noisy) {
                noise_at(noises, m).sample(g, z, rng, y);
                for (std::size_t i = 0; i < z.coords.size(); ++i) z.coords[i] += y.embedded[i];
            }
            if (sys.domain == Domain::TorusMod1) wrap_torus(z);
            if (!all_finite(z.coords)) {
                throw std::runtime_error("fd_ensemble_response: non-finite state (path " +
                                         std::to_string(l) + ", step " + std::to_string(m) + ")");
            }
            std::swap(x.coords, z.coords);
        }
        return observable.eval(g, x);
    };

    for (std::int64_t l = 0; l < cfg.paths; ++l) {
        const double plus = run_path(gamma + cfg.delta_gamma, l);
        const double minus = run_path(gamma - cfg.delta_gamma, l);
        diffs.add((plus - minus) / (2.0 * cfg.delta_gamma));
    }
    return MonteCarloEstimate{diffs.mean(), diffs.standard_error()};
}

GridDensity orbit_histogram(const SystemSpec& sys, const NoiseModels& noises, double gamma,
                            std::int64_t spin_up, std::int64_t samples, std::size_t bins,
                            std::uint64_t seed) {
    if (sys.dimension != 1) {
        throw std::invalid_argument("orbit_histogram: one-dimensional systems only");
    }
    if (samples < 1) throw std::invalid_argument("orbit_histogram: need samples >= 1");
    RngStream rng(seed, 0);
    State x(1);
    State z(1);
    NoiseSample y;
    const bool noisy = !noises.empty();
    // Noiseless orbits of piecewise-linear circle maps degenerate in
    // floating point (mantissa bits erode until the orbit locks onto an
    // exact fixed point); a dither far below any bin width keeps the
    // orbit on the attractor without touching the histogram.
    const bool dither = !noisy && sys.domain == Domain::TorusMod1;
    std::vector<double> counts(bins, 0.0);
    for (std::int64_t t = 0; t < spin_up + samples; ++t) {
        sys.map_at(0)(gamma, x, z);
        if (noisy) {
            noise_at(noises, 0).sample(gamma, z, rng, y);
            z.coords[0] += y.embedded[0];
        } else if (dither) {
            z.coords[0] += 1e-12 * rng.normal();
        }
        if (sys.domain == Domain::TorusMod1) wrap_torus(z);
        if (!all_finite(z.coords)) {
            throw std::runtime_error("orbit_histogram: non-finite state at step " + std::to_string(t));
        }
        std::swap(x.coords, z.coords);
        if (t >= spin_up) {
            double v = x[0] - std::floor(x[0]);
            if (v >= 1.0) v = 0.0;
            std::size_t idx = static_cast<std::size_t>(v * static_cast<double>(bins));
            if (idx >= bins) idx = bins - 1;
            counts[idx] += 1.0;
        }
    }
    GridDensity out(bins);
    const double nd = static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        out.weights[i] = counts[i] / static_cast<double>(samples) * nd;
    }
    return out;
}

} // namespace kdr
